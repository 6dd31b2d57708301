#pragma once

#include <array>
#include <vector>

#include "adr/tensor.hpp"

namespace adr {

// Tensor-product grid of equispaced points, endpoints included:
// axis mu has nodes a_mu + i*h_mu, i = 0..n_mu-1, h_mu = (b_mu-a_mu)/(n_mu-1).
struct GridSpec {
    std::vector<std::array<double, 2>> intervals;  // [a_mu, b_mu] per axis
    std::vector<int> points;                       // n_mu >= 3 per axis

    int order() const { return static_cast<int>(points.size()); }
    double spacing(int axis) const {
        return (intervals[static_cast<std::size_t>(axis)][1] - intervals[static_cast<std::size_t>(axis)][0]) /
               (points[static_cast<std::size_t>(axis)] - 1);
    }
    std::int64_t total_points() const { return product_of_dims(points); }
};

// One-dimensional operator coefficients: delta*d_xx - alpha*d_x.
struct OperatorRecipe {
    double delta = 0.0;  // diffusion coefficient, >= 0
    double alpha = 0.0;  // advection speed (transport in "-alpha d_x" form)
};

// Per-axis coordinate arrays for the grid.
std::vector<std::vector<double>> build_grid(const GridSpec& spec);

// n x n second-order centered finite-difference matrix for
// delta*d_xx - alpha*d_x with homogeneous Neumann conditions embedded by
// ghost-node elimination (u_0 = u_2, u_{n+1} = u_{n-1}). Returned dense;
// the fill pattern is tridiagonal but nothing downstream assumes it.
DenseMatrix build_directional_operator(std::array<double, 2> interval, int n,
                                       const OperatorRecipe& recipe);

}  // namespace adr
