#pragma once

// Dense storage and the numerical kernels the approximation engine is built
// from: modified Gram-Schmidt extension, a cyclic Jacobi symmetric
// eigensolver, Gram/product kernels and an exact SVD oracle.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace lowrank {

/// Dense m x n matrix of doubles stored row-major: entry (i, j) lives at
/// data()[i * cols() + j]. Every kernel and oracle in the library reads it in
/// this order, so exact-equality comparisons between them are meaningful.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    /// Throws InvalidArgument when data.size() != rows * cols or an entry is
    /// not finite.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::vector<double> column(std::size_t j) const;

    DenseMatrix transposed() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Ordered set of orthonormal vectors in R^dim, stored contiguously (vector i
/// occupies [i * dim, (i + 1) * dim)). Orthonormality is established by
/// mgs_extend; use gram_deviation() to check it.
class OrthoBasis {
public:
    OrthoBasis() = default;
    explicit OrthoBasis(std::size_t dim) : dim_(dim) {}
    /// Wraps already-orthonormal vectors. Throws InvalidArgument if data.size()
    /// is not a multiple of dim or there are more vectors than dim.
    OrthoBasis(std::size_t dim, std::vector<double> data);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::span<const double> vector(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<const double> data() const noexcept { return data_; }

    /// Keeps the first n vectors.
    OrthoBasis prefix(std::size_t n) const;

    friend bool operator==(const OrthoBasis&, const OrthoBasis&) = default;

private:
    friend OrthoBasis mgs_extend(const OrthoBasis&, std::span<const std::vector<double>>, double);

    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Max-norm of X^T X - I.
double gram_deviation(const OrthoBasis& basis);

/// Symmetric p x p matrix, packed upper triangle: (i, j) with i <= j is stored
/// at j * (j + 1) / 2 + i.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(std::size_t order)
        : order_(order), data_(order * (order + 1) / 2, 0.0) {}
    static SymmetricMatrix from_dense(const DenseMatrix& full);

    std::size_t order() const noexcept { return order_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[index(i, j)]; }
    void set(std::size_t i, std::size_t j, double v) noexcept { data_[index(i, j)] = v; }
    std::span<const double> packed() const noexcept { return data_; }

    DenseMatrix to_dense() const;
    double frobenius_norm() const;
    double trace() const;

private:
    static std::size_t index(std::size_t i, std::size_t j) noexcept {
        if (i > j) std::swap(i, j);
        return j * (j + 1) / 2 + i;
    }

    std::size_t order_ = 0;
    std::vector<double> data_;
};

struct EigenResult {
    std::vector<double> values;  // non-increasing
    DenseMatrix vectors;         // column i pairs with values[i]
    int sweeps = 0;
};

struct SvdResult {
    std::vector<double> singular_values;  // sigma_1 >= ... >= sigma_r > 0
    DenseMatrix left;                     // m x r, column i = u_i
    DenseMatrix right;                    // n x r, column i = v_i

    std::size_t rank() const noexcept { return singular_values.size(); }
};

inline constexpr double kDefaultDropTol = 1e-12;
inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr int kJacobiSweepCap = 100;
inline constexpr double kJacobiTol = 1e-12;
/// svd_oracle refuses matrices with min(m, n) above this.
inline constexpr std::size_t kOracleMaxMinDim = 1000;

/// Appends the candidates to `basis` by modified Gram-Schmidt, in input
/// order. A candidate whose residual after projection is <= drop_tol times its
/// own norm is dropped. When a projection pass removes more than half of the
/// norm a second pass is run against the accumulated basis.
/// The original vectors are copied unchanged into the prefix of the result.
OrthoBasis mgs_extend(const OrthoBasis& basis, std::span<const std::vector<double>> candidates,
                      double drop_tol = kDefaultDropTol);

/// Cyclic Jacobi. Eigenvalues descending, eigenvectors signed so that the
/// largest-magnitude component is positive (lowest index wins ties).
/// Throws NumericalError if not converged after kJacobiSweepCap sweeps.
EigenResult eigh_descending(const SymmetricMatrix& s);

/// S_ij = y_i^T y_j over the columns of Y, summed in row order.
SymmetricMatrix gram_of_columns(const DenseMatrix& y);

/// n x p matrix whose column i is A^T x_i. Each entry is one serial dot product
/// over the rows of A in ascending order, so the result does not depend on
/// `workers`.
DenseMatrix transpose_times_basis(const DenseMatrix& a, const OrthoBasis& x, unsigned workers = 1);

/// Exact singular triplets through the eigen-decomposition of the smaller of
/// A^T A and A A^T. Singular values <= rank_tol * sigma_1 are dropped.
/// Throws CapExceeded when min(m, n) > kOracleMaxMinDim.
SvdResult svd_oracle(const DenseMatrix& a, double rank_tol = kDefaultRankTol);

double frobenius_norm_sq(const DenseMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace lowrank
