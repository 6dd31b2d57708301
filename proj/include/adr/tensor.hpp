#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adr {

// Order-d tensor of 64-bit floats on a contiguous buffer.
//
// Linearization: dimension 1 varies fastest (generalized column-major), so
// the linear index of (i_1,...,i_d), 0-based, is
//   i_1 + n_1*i_2 + n_1*n_2*i_3 + ...
// With this convention vec() of a matrix stacks its columns, and the
// Kronecker sum A_d (+) ... (+) A_1 acts as sum_mu (.) x_mu A_mu.
class TensorField {
public:
    TensorField() = default;
    explicit TensorField(std::vector<int> dims);
    TensorField(std::vector<int> dims, std::vector<double> data);

    int order() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    std::int64_t linear_index(std::span<const int> idx) const;
    double at(std::span<const int> idx) const { return data_[static_cast<std::size_t>(linear_index(idx))]; }
    double& at(std::span<const int> idx) { return data_[static_cast<std::size_t>(linear_index(idx))]; }

    bool same_dims(const TensorField& other) const { return dims_ == other.dims_; }

private:
    std::vector<int> dims_;
    std::vector<double> data_;
};

// Dense real matrix, column-major.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries;  // column-major, entries[i + j*rows]

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), entries(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return entries[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * rows]; }
    double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * rows]; }

    bool square() const { return rows == cols; }

    static DenseMatrix identity(int n);
};

std::int64_t product_of_dims(std::span<const int> dims);

// out = M applied to the mode-`axis` fibers of T, scaled into out:
//   out = mu_mode(T, M, axis) + beta*out.
// out must have T's dims with dims[axis] == M.rows and must not alias T.
void mu_mode_product_into(const TensorField& T, const DenseMatrix& M, int axis,
                          TensorField& out, double beta = 0.0);

// Multiplies M onto every mode-`axis` fiber of T (0-based axis).
TensorField mu_mode_product(const TensorField& T, const DenseMatrix& M, int axis);

// Tucker operator: successive mu-mode products with mats[0..d-1].
TensorField tucker_apply(const TensorField& T, std::span<const DenseMatrix> mats);

// Square-matrix variant with caller-provided buffers (out, scratch, T all
// distinct, dims equal). Used by the time-stepping hot loop.
void tucker_apply_into(const TensorField& T, std::span<const DenseMatrix> mats,
                       TensorField& out, TensorField& scratch);

// Action of the Kronecker sum: sum_mu T x_mu ops[mu], ops square.
TensorField kron_action(const TensorField& T, std::span<const DenseMatrix> ops);

// acc += sum_mu T x_mu ops[mu]
void kron_action_add(const TensorField& T, std::span<const DenseMatrix> ops, TensorField& acc);

// vec / unvec in the pinned linearization (vec is the identity on the buffer).
std::vector<double> vec(const TensorField& T);
TensorField unvec(std::vector<double> v, std::vector<int> dims);

// Dense Kronecker product A (x) B.
DenseMatrix kron(const DenseMatrix& A, const DenseMatrix& B);

// Assembles A_d (+) ... (+) A_1 = sum_mu I(x)...(x)A_mu(x)...(x)I as a dense
// N x N matrix. Oracle-scale only: refuses N > 4096.
DenseMatrix assemble_kronecker_sum(std::span<const DenseMatrix> ops);

// Dense helpers shared by matfun and the oracles.
DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B);
void matvec(const DenseMatrix& A, std::span<const double> x, std::span<double> y,
            double alpha = 1.0, double beta = 0.0);
double one_norm(const DenseMatrix& A);

// Caps the thread count of the underlying BLAS (0 leaves it automatic).
void set_parallelism(int threads);

// Picks matched BLAS kernels when the runtime dispatch would fall back to a
// generic target on this host. Call before the first BLAS operation; honors
// a preexisting OPENBLAS_CORETYPE.
void configure_blas_runtime();

}  // namespace adr
