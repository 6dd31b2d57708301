#include "adr/discretize.hpp"

#include <cmath>
#include <stdexcept>

namespace adr {

std::vector<std::vector<double>> build_grid(const GridSpec& spec) {
    if (spec.intervals.size() != spec.points.size())
        throw std::invalid_argument("build_grid: intervals/points length mismatch");
    std::vector<std::vector<double>> axes;
    axes.reserve(spec.points.size());
    for (int mu = 0; mu < spec.order(); ++mu) {
        const auto [a, b] = spec.intervals[static_cast<std::size_t>(mu)];
        const int n = spec.points[static_cast<std::size_t>(mu)];
        if (n < 2) throw std::invalid_argument("build_grid: need at least 2 points per axis");
        if (!(b > a)) throw std::invalid_argument("build_grid: interval must satisfy b > a");
        std::vector<double> x(static_cast<std::size_t>(n));
        const double h = (b - a) / (n - 1);
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = a + i * h;
        x.back() = b;
        axes.push_back(std::move(x));
    }
    return axes;
}

DenseMatrix build_directional_operator(std::array<double, 2> interval, int n,
                                       const OperatorRecipe& recipe) {
    if (n < 3) throw std::invalid_argument("build_directional_operator: need n >= 3");
    if (!(interval[1] > interval[0]))
        throw std::invalid_argument("build_directional_operator: interval must satisfy b > a");
    if (!std::isfinite(recipe.delta) || !std::isfinite(recipe.alpha))
        throw std::invalid_argument("build_directional_operator: coefficients must be finite");
    if (recipe.delta < 0.0)
        throw std::invalid_argument("build_directional_operator: diffusion must be >= 0");

    const double h = (interval[1] - interval[0]) / (n - 1);
    const double dif = recipe.delta / (h * h);
    const double adv = recipe.alpha / (2.0 * h);

    DenseMatrix A(n, n);
    for (int i = 1; i < n - 1; ++i) {
        A(i, i - 1) = dif + adv;
        A(i, i) = -2.0 * dif;
        A(i, i + 1) = dif - adv;
    }
    // Ghost elimination u_0 = u_2 and u_{n+1} = u_{n-1}: the advection
    // stencil cancels at the boundary, diffusion folds to (-2, 2)/h^2.
    A(0, 0) = -2.0 * dif;
    A(0, 1) = 2.0 * dif;
    A(n - 1, n - 2) = 2.0 * dif;
    A(n - 1, n - 1) = -2.0 * dif;
    return A;
}

}  // namespace adr
