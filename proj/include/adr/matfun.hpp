#pragma once

#include <vector>

#include "adr/tensor.hpp"

namespace adr {

// exp(A) together with phi_1(A)..phi_{order}(A) for one base matrix.
// Satisfies the recurrence A*phi_{l+1}(A) = phi_l(A) - I/l! with phi_0 = exp.
struct PhiFamily {
    DenseMatrix base;              // A
    DenseMatrix exp;               // e^A
    std::vector<DenseMatrix> phi;  // phi[l-1] = phi_l(A)

    int order() const { return static_cast<int>(phi.size()); }
    const DenseMatrix& phi_l(int ell) const { return phi.at(static_cast<std::size_t>(ell) - 1); }
};

// Matrix exponential by diagonal Pade approximation with scaling and
// squaring; degree chosen from the one-norm ladder, degree 13 at the top.
DenseMatrix expm_dense(const DenseMatrix& A);

// phi_1..phi_ell_max by one exponential of the block-augmented matrix
// [[A, E], [0, J]] whose top blocks carry the phi functions.
PhiFamily phi_funcs(const DenseMatrix& A, int ell_max);

// Independent reference path: scale A by 2^-s until its one-norm is <= 1,
// sum the Taylor series of phi_0..phi_ell to stagnation, then undo the
// scaling with the phi doubling relations (phi_0(2X) = phi_0(X)^2).
// ell = 0 returns the exponential. Documented accuracy ~1e-13 for
// one-norms up to 8.
DenseMatrix phi_series_oracle(const DenseMatrix& A, int ell);

}  // namespace adr
