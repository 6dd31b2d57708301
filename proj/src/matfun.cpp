#include "adr/matfun.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

extern "C" void dgesv_(const int* n, const int* nrhs, double* a, const int* lda,
                       int* ipiv, double* b, const int* ldb, int* info);

namespace adr {

namespace {

constexpr int kMaxMatrixSize = 1024;

void check_square_finite(const DenseMatrix& A, const char* who) {
    if (!A.square()) {
        std::ostringstream msg;
        msg << who << ": matrix must be square, got " << A.rows << "x" << A.cols;
        throw std::invalid_argument(msg.str());
    }
    if (A.rows > kMaxMatrixSize) {
        std::ostringstream msg;
        msg << who << ": size " << A.rows << " exceeds the supported maximum " << kMaxMatrixSize;
        throw std::invalid_argument(msg.str());
    }
    for (double x : A.entries)
        if (!std::isfinite(x)) {
            std::ostringstream msg;
            msg << who << ": matrix has non-finite entries";
            throw std::invalid_argument(msg.str());
        }
}

// X solving A*X = B, by LU with partial pivoting.
DenseMatrix solve_linear(DenseMatrix A, DenseMatrix B) {
    const int n = A.rows;
    const int nrhs = B.cols;
    std::vector<int> ipiv(static_cast<std::size_t>(n));
    int info = 0;
    dgesv_(&n, &nrhs, A.entries.data(), &n, ipiv.data(), B.entries.data(), &n, &info);
    if (info != 0) throw std::runtime_error("expm_dense: Pade denominator is singular");
    return B;
}

void add_scaled_identity(DenseMatrix& A, double c) {
    for (int i = 0; i < A.rows; ++i) A(i, i) += c;
}

DenseMatrix scaled(const DenseMatrix& A, double c) {
    DenseMatrix B = A;
    for (double& x : B.entries) x *= c;
    return B;
}

// r_m(A) for the diagonal Pade approximant of degree m, A pre-scaled.
DenseMatrix pade_approximant(const DenseMatrix& A, int degree) {
    static const std::vector<double> b3 = {120, 60, 12, 1};
    static const std::vector<double> b5 = {30240, 15120, 3360, 420, 30, 1};
    static const std::vector<double> b7 = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
    static const std::vector<double> b9 = {17643225600., 8821612800., 2075673600., 302702400.,
                                           30270240., 2162160., 110880., 3960., 90., 1.};
    static const std::vector<double> b13 = {64764752532480000., 32382376266240000.,
                                            7771770303897600., 1187353796428800.,
                                            129060195264000., 10559470521600., 670442572800.,
                                            33522128640., 1323241920., 40840800., 960960.,
                                            16380., 182., 1.};
    const int n = A.rows;
    const DenseMatrix A2 = matmul(A, A);
    DenseMatrix U(n, n), V(n, n);

    if (degree == 13) {
        const DenseMatrix A4 = matmul(A2, A2);
        const DenseMatrix A6 = matmul(A2, A4);
        DenseMatrix W(n, n);  // inner bracket of U
        for (std::size_t i = 0; i < W.entries.size(); ++i)
            W.entries[i] = b13[13] * A6.entries[i] + b13[11] * A4.entries[i] + b13[9] * A2.entries[i];
        W = matmul(A6, W);
        for (std::size_t i = 0; i < W.entries.size(); ++i)
            W.entries[i] += b13[7] * A6.entries[i] + b13[5] * A4.entries[i] + b13[3] * A2.entries[i];
        add_scaled_identity(W, b13[1]);
        U = matmul(A, W);
        for (std::size_t i = 0; i < V.entries.size(); ++i)
            V.entries[i] = b13[12] * A6.entries[i] + b13[10] * A4.entries[i] + b13[8] * A2.entries[i];
        V = matmul(A6, V);
        for (std::size_t i = 0; i < V.entries.size(); ++i)
            V.entries[i] += b13[6] * A6.entries[i] + b13[4] * A4.entries[i] + b13[2] * A2.entries[i];
        add_scaled_identity(V, b13[0]);
    } else {
        const std::vector<double>& b = degree == 3 ? b3 : degree == 5 ? b5 : degree == 7 ? b7 : b9;
        // Powers A^2, A^4, ... up to A^(degree-1).
        std::vector<DenseMatrix> even = {A2};
        for (int p = 4; p <= degree - 1; p += 2) even.push_back(matmul(even.back(), A2));
        DenseMatrix W(n, n);
        for (int p = 0; p < static_cast<int>(even.size()); ++p)
            for (std::size_t i = 0; i < W.entries.size(); ++i) {
                W.entries[i] += b[static_cast<std::size_t>(2 * p + 3)] * even[static_cast<std::size_t>(p)].entries[i];
                V.entries[i] += b[static_cast<std::size_t>(2 * p + 2)] * even[static_cast<std::size_t>(p)].entries[i];
            }
        add_scaled_identity(W, b[1]);
        U = matmul(A, W);
        add_scaled_identity(V, b[0]);
    }

    // (V - U) X = (V + U)
    DenseMatrix num(n, n), den(n, n);
    for (std::size_t i = 0; i < num.entries.size(); ++i) {
        num.entries[i] = V.entries[i] + U.entries[i];
        den.entries[i] = V.entries[i] - U.entries[i];
    }
    return solve_linear(std::move(den), std::move(num));
}

DenseMatrix expm_unchecked(const DenseMatrix& A) {
    const double norm = one_norm(A);
    // One-norm thresholds for Pade degrees 3, 5, 7, 9, 13.
    static constexpr double theta3 = 1.495585217958292e-2;
    static constexpr double theta5 = 2.539398330063230e-1;
    static constexpr double theta7 = 9.504178996162932e-1;
    static constexpr double theta9 = 2.097847961257068;
    static constexpr double theta13 = 5.371920351148152;

    if (norm <= theta3) return pade_approximant(A, 3);
    if (norm <= theta5) return pade_approximant(A, 5);
    if (norm <= theta7) return pade_approximant(A, 7);
    if (norm <= theta9) return pade_approximant(A, 9);

    int s = 0;
    if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    DenseMatrix X = pade_approximant(scaled(A, std::ldexp(1.0, -s)), 13);
    for (int i = 0; i < s; ++i) X = matmul(X, X);
    return X;
}

}  // namespace

DenseMatrix expm_dense(const DenseMatrix& A) {
    check_square_finite(A, "expm_dense");
    return expm_unchecked(A);
}

PhiFamily phi_funcs(const DenseMatrix& A, int ell_max) {
    check_square_finite(A, "phi_funcs");
    if (ell_max < 1 || ell_max > 4)
        throw std::invalid_argument("phi_funcs: ell_max must be between 1 and 4");

    // Augmented matrix with A in block (0,0) and identities on the block
    // superdiagonal; block (0,l) of its exponential is phi_l(A).
    const int n = A.rows;
    const int m = n * (ell_max + 1);
    DenseMatrix aug(m, m);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) aug(i, j) = A(i, j);
    for (int blk = 0; blk < ell_max; ++blk)
        for (int i = 0; i < n; ++i) aug(blk * n + i, (blk + 1) * n + i) = 1.0;

    const DenseMatrix big = expm_unchecked(aug);

    PhiFamily fam;
    fam.base = A;
    fam.exp = DenseMatrix(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) fam.exp(i, j) = big(i, j);
    fam.phi.reserve(static_cast<std::size_t>(ell_max));
    for (int ell = 1; ell <= ell_max; ++ell) {
        DenseMatrix P(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) P(i, j) = big(i, ell * n + j);
        fam.phi.push_back(std::move(P));
    }
    return fam;
}

DenseMatrix phi_series_oracle(const DenseMatrix& A, int ell) {
    if (!A.square()) throw std::invalid_argument("phi_series_oracle: matrix must be square");
    if (ell < 0) throw std::invalid_argument("phi_series_oracle: ell must be >= 0");
    const int n = A.rows;

    const double norm = one_norm(A);
    int s = 0;
    if (norm > 1.0) s = static_cast<int>(std::ceil(std::log2(norm)));
    const DenseMatrix X = scaled(A, std::ldexp(1.0, -s));

    // Taylor sums phi_k(X) = sum_j X^j / (j+k)!, k = 0..ell, with the term
    // X^j shared across k. ||X||_1 <= 1 so ~30 terms reach stagnation.
    std::vector<DenseMatrix> phis;
    std::vector<double> factorial = {1.0};
    for (int k = 1; k <= ell + 40; ++k) factorial.push_back(factorial.back() * k);
    for (int k = 0; k <= ell; ++k) {
        DenseMatrix P(n, n);
        add_scaled_identity(P, 1.0 / factorial[static_cast<std::size_t>(k)]);
        phis.push_back(std::move(P));
    }
    DenseMatrix term = DenseMatrix::identity(n);
    for (int j = 1; j <= 40; ++j) {
        term = matmul(term, X);
        double term_scale = 0.0;
        for (int k = 0; k <= ell; ++k) {
            const double c = 1.0 / factorial[static_cast<std::size_t>(j + k)];
            for (std::size_t i = 0; i < term.entries.size(); ++i)
                phis[static_cast<std::size_t>(k)].entries[i] += c * term.entries[i];
            term_scale = std::max(term_scale, c);
        }
        if (one_norm(term) * term_scale < 1e-20) break;
    }

    // Undo the scaling: phi_0(2X) = phi_0(X)^2 and
    // phi_l(2X) = 2^-l (phi_0 phi_l + sum_{k=1..l} phi_k/(l-k)!).
    for (int step = 0; step < s; ++step) {
        std::vector<DenseMatrix> doubled;
        doubled.push_back(matmul(phis[0], phis[0]));
        for (int l = 1; l <= ell; ++l) {
            DenseMatrix P = matmul(phis[0], phis[static_cast<std::size_t>(l)]);
            for (int k = 1; k <= l; ++k) {
                const double c = 1.0 / factorial[static_cast<std::size_t>(l - k)];
                for (std::size_t i = 0; i < P.entries.size(); ++i)
                    P.entries[i] += c * phis[static_cast<std::size_t>(k)].entries[i];
            }
            for (double& x : P.entries) x *= std::ldexp(1.0, -l);
            doubled.push_back(std::move(P));
        }
        phis = std::move(doubled);
    }
    return phis[static_cast<std::size_t>(ell)];
}

}  // namespace adr
