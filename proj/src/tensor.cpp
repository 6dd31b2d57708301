#include "adr/tensor.hpp"

#include <cblas.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <utility>

extern "C" void openblas_set_num_threads(int);

namespace adr {

namespace {

void check_dims_positive(std::span<const int> dims) {
    if (dims.empty()) throw std::invalid_argument("TensorField: order must be at least 1");
    for (int n : dims)
        if (n <= 0) throw std::invalid_argument("TensorField: all dimensions must be positive");
}

}  // namespace

std::int64_t product_of_dims(std::span<const int> dims) {
    std::int64_t n = 1;
    for (int d : dims) n *= d;
    return n;
}

TensorField::TensorField(std::vector<int> dims) : dims_(std::move(dims)) {
    check_dims_positive(dims_);
    data_.assign(static_cast<std::size_t>(product_of_dims(dims_)), 0.0);
}

TensorField::TensorField(std::vector<int> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims_positive(dims_);
    if (static_cast<std::int64_t>(data_.size()) != product_of_dims(dims_))
        throw std::invalid_argument("TensorField: data length does not match product of dims");
}

std::int64_t TensorField::linear_index(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != order())
        throw std::invalid_argument("TensorField: index order mismatch");
    std::int64_t lin = 0;
    std::int64_t stride = 1;
    for (int mu = 0; mu < order(); ++mu) {
        if (idx[mu] < 0 || idx[mu] >= dims_[mu])
            throw std::out_of_range("TensorField: index out of range");
        lin += stride * idx[mu];
        stride *= dims_[mu];
    }
    return lin;
}

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

void mu_mode_product_into(const TensorField& T, const DenseMatrix& M, int axis,
                          TensorField& out, double beta) {
    const int d = T.order();
    if (axis < 0 || axis >= d) {
        std::ostringstream msg;
        msg << "mu_mode_product: axis " << axis << " out of range for order-" << d << " tensor";
        throw std::invalid_argument(msg.str());
    }
    if (M.cols != T.dims()[axis]) {
        std::ostringstream msg;
        msg << "mu_mode_product: matrix has " << M.cols << " columns but tensor has "
            << T.dims()[axis] << " entries along axis " << axis;
        throw std::invalid_argument(msg.str());
    }
    if (out.order() != d || out.dims()[axis] != M.rows)
        throw std::invalid_argument("mu_mode_product: output dims do not match");
    for (int mu = 0; mu < d; ++mu)
        if (mu != axis && out.dims()[mu] != T.dims()[mu])
            throw std::invalid_argument("mu_mode_product: output dims do not match");
    if (out.data() == T.data())
        throw std::invalid_argument("mu_mode_product: output must not alias input");

    const int k = M.cols;
    if (axis == 0) {
        // Fibers are contiguous: one GEMM on the n_1 x (N/n_1) unfolding.
        const std::int64_t rest = T.size() / k;
        cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, M.rows, static_cast<int>(rest), k,
                    1.0, M.entries.data(), M.rows, T.data(), k, beta, out.data(), M.rows);
        return;
    }
    // Slab view (P x n_axis x Q) with P = prod(dims before axis), fibers have
    // stride P; each of the Q slabs is a P x n_axis column-major block.
    std::int64_t P = 1, Q = 1;
    for (int mu = 0; mu < axis; ++mu) P *= T.dims()[mu];
    for (int mu = axis + 1; mu < d; ++mu) Q *= T.dims()[mu];
    const std::int64_t in_slab = P * k;
    const std::int64_t out_slab = P * M.rows;
    for (std::int64_t q = 0; q < Q; ++q) {
        cblas_dgemm(CblasColMajor, CblasNoTrans, CblasTrans, static_cast<int>(P), M.rows, k,
                    1.0, T.data() + q * in_slab, static_cast<int>(P),
                    M.entries.data(), M.rows, beta,
                    out.data() + q * out_slab, static_cast<int>(P));
    }
}

TensorField mu_mode_product(const TensorField& T, const DenseMatrix& M, int axis) {
    std::vector<int> out_dims = T.dims();
    if (axis >= 0 && axis < T.order()) out_dims[axis] = M.rows;
    TensorField out(std::move(out_dims));
    mu_mode_product_into(T, M, axis, out, 0.0);
    return out;
}

TensorField tucker_apply(const TensorField& T, std::span<const DenseMatrix> mats) {
    if (static_cast<int>(mats.size()) != T.order())
        throw std::invalid_argument("tucker_apply: need one matrix per tensor mode");
    TensorField cur = T;
    for (int mu = 0; mu < T.order(); ++mu) cur = mu_mode_product(cur, mats[mu], mu);
    return cur;
}

void tucker_apply_into(const TensorField& T, std::span<const DenseMatrix> mats,
                       TensorField& out, TensorField& scratch) {
    const int d = T.order();
    if (static_cast<int>(mats.size()) != d)
        throw std::invalid_argument("tucker_apply: need one matrix per tensor mode");
    for (const DenseMatrix& M : mats)
        if (!M.square()) throw std::invalid_argument("tucker_apply_into: matrices must be square");
    const TensorField* src = &T;
    for (int mu = 0; mu < d; ++mu) {
        // Alternate buffers so the final product lands in `out`.
        TensorField* dst = ((d - 1 - mu) % 2 == 0) ? &out : &scratch;
        mu_mode_product_into(*src, mats[mu], mu, *dst, 0.0);
        src = dst;
    }
}

void kron_action_add(const TensorField& T, std::span<const DenseMatrix> ops, TensorField& acc) {
    const int d = T.order();
    if (static_cast<int>(ops.size()) != d)
        throw std::invalid_argument("kron_action: need one matrix per tensor mode");
    for (int mu = 0; mu < d; ++mu) {
        if (!ops[mu].square()) throw std::invalid_argument("kron_action: matrices must be square");
        mu_mode_product_into(T, ops[mu], mu, acc, 1.0);
    }
}

TensorField kron_action(const TensorField& T, std::span<const DenseMatrix> ops) {
    TensorField acc(T.dims());
    kron_action_add(T, ops, acc);
    return acc;
}

std::vector<double> vec(const TensorField& T) {
    return {T.data(), T.data() + T.size()};
}

TensorField unvec(std::vector<double> v, std::vector<int> dims) {
    if (static_cast<std::int64_t>(v.size()) != product_of_dims(dims))
        throw std::invalid_argument("unvec: vector length does not match product of dims");
    return TensorField(std::move(dims), std::move(v));
}

DenseMatrix kron(const DenseMatrix& A, const DenseMatrix& B) {
    DenseMatrix K(A.rows * B.rows, A.cols * B.cols);
    for (int ja = 0; ja < A.cols; ++ja)
        for (int ia = 0; ia < A.rows; ++ia) {
            const double a = A(ia, ja);
            if (a == 0.0) continue;
            for (int jb = 0; jb < B.cols; ++jb)
                for (int ib = 0; ib < B.rows; ++ib)
                    K(ia * B.rows + ib, ja * B.cols + jb) = a * B(ib, jb);
        }
    return K;
}

DenseMatrix assemble_kronecker_sum(std::span<const DenseMatrix> ops) {
    if (ops.empty()) throw std::invalid_argument("assemble_kronecker_sum: empty operator list");
    std::int64_t N = 1;
    for (const DenseMatrix& A : ops) {
        if (!A.square()) throw std::invalid_argument("assemble_kronecker_sum: matrices must be square");
        N *= A.rows;
    }
    if (N > 4096) {
        std::ostringstream msg;
        msg << "assemble_kronecker_sum: N = " << N << " exceeds the 4096 oracle-scale guard";
        throw std::invalid_argument(msg.str());
    }
    const int d = static_cast<int>(ops.size());
    DenseMatrix K(static_cast<int>(N), static_cast<int>(N));
    for (int mu = 0; mu < d; ++mu) {
        // I_{n_d} (x) ... (x) A_mu (x) ... (x) I_{n_1}; axis 0 is rightmost.
        DenseMatrix term(1, 1);
        term(0, 0) = 1.0;
        for (int nu = d - 1; nu >= 0; --nu)
            term = kron(term, nu == mu ? ops[nu] : DenseMatrix::identity(ops[nu].rows));
        for (std::size_t i = 0; i < K.entries.size(); ++i) K.entries[i] += term.entries[i];
    }
    return K;
}

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    DenseMatrix C(A.rows, B.cols);
    cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, A.rows, B.cols, A.cols,
                1.0, A.entries.data(), A.rows, B.entries.data(), B.rows,
                0.0, C.entries.data(), C.rows);
    return C;
}

void matvec(const DenseMatrix& A, std::span<const double> x, std::span<double> y,
            double alpha, double beta) {
    if (static_cast<int>(x.size()) != A.cols || static_cast<int>(y.size()) != A.rows)
        throw std::invalid_argument("matvec: size mismatch");
    cblas_dgemv(CblasColMajor, CblasNoTrans, A.rows, A.cols, alpha,
                A.entries.data(), A.rows, x.data(), 1, beta, y.data(), 1);
}

double one_norm(const DenseMatrix& A) {
    double best = 0.0;
    for (int j = 0; j < A.cols; ++j) {
        double col = 0.0;
        for (int i = 0; i < A.rows; ++i) col += std::abs(A(i, j));
        if (col > best) best = col;
    }
    return best;
}

void set_parallelism(int threads) {
    if (threads > 0) openblas_set_num_threads(threads);
}

#if defined(__x86_64__)
namespace {

// Raw CPUID probe (no libgcc cpu-model dependency; this must be callable
// from an early constructor). Checks the AVX-512 F/DQ/BW/VL set plus OS
// state saving, the prerequisites of OpenBLAS's SKYLAKEX kernels.
bool host_runs_avx512_skx() {
    unsigned eax, ebx, ecx, edx;
    __asm__ volatile("cpuid" : "=a"(eax), "=b"(ebx), "=c"(ecx), "=d"(edx) : "a"(1), "c"(0));
    if (!(ecx & (1u << 27))) return false;  // OSXSAVE
    unsigned lo, hi;
    __asm__ volatile("xgetbv" : "=a"(lo), "=d"(hi) : "c"(0));
    if ((lo & 0xE6u) != 0xE6u) return false;  // XMM, YMM, opmask, ZMM state
    __asm__ volatile("cpuid" : "=a"(eax), "=b"(ebx), "=c"(ecx), "=d"(edx) : "a"(7), "c"(0));
    const unsigned need = (1u << 16) | (1u << 17) | (1u << 30) | (1u << 31);
    return (ebx & need) == need;
}

}  // namespace
#endif

void configure_blas_runtime() {
#if defined(__x86_64__)
    // OpenBLAS's runtime dispatch does not know every virtualized CPUID and
    // then falls back to generic kernels; pick the AVX-512 target ourselves
    // when the host provably supports it. A user-set core type wins.
    if (std::getenv("OPENBLAS_CORETYPE") == nullptr && host_runs_avx512_skx())
        setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
#endif
}

namespace {

// Must precede the BLAS initializer, hence the early priority (and the
// static OpenBLAS archive, so that initializer belongs to this binary).
[[gnu::constructor(101)]] void blas_runtime_init() { configure_blas_runtime(); }

}  // namespace

}  // namespace adr
