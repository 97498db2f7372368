#include "lowrank/matrix.hpp"

#include "lowrank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace lowrank {

namespace {

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw InvalidArgument("DenseMatrix: data length " + std::to_string(data_.size()) +
                              " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw InvalidArgument("DenseMatrix: non-finite entry at (" +
                                  std::to_string(i / cols) + ", " + std::to_string(i % cols) +
                                  ")");
        }
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(m * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw InvalidArgument("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return DenseMatrix(m, n, std::move(data));
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

OrthoBasis::OrthoBasis(std::size_t dim, std::vector<double> data)
    : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0 ? !data_.empty() : data_.size() % dim_ != 0)
        throw InvalidArgument("OrthoBasis: data length is not a multiple of dim");
    if (size() > dim_) throw InvalidArgument("OrthoBasis: more vectors than dimension");
}

OrthoBasis OrthoBasis::prefix(std::size_t n) const {
    n = std::min(n, size());
    return OrthoBasis(dim_, std::vector<double>(data_.begin(), data_.begin() + n * dim_));
}

double gram_deviation(const OrthoBasis& basis) {
    double worst = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) {
            const double g = dot(basis.vector(i), basis.vector(j)) - (i == j ? 1.0 : 0.0);
            worst = std::max(worst, std::abs(g));
        }
    return worst;
}

SymmetricMatrix SymmetricMatrix::from_dense(const DenseMatrix& full) {
    if (full.rows() != full.cols()) throw InvalidArgument("SymmetricMatrix: matrix is not square");
    SymmetricMatrix s(full.rows());
    for (std::size_t j = 0; j < full.cols(); ++j)
        for (std::size_t i = 0; i <= j; ++i) s.set(i, j, full(i, j));
    return s;
}

DenseMatrix SymmetricMatrix::to_dense() const {
    DenseMatrix d(order_, order_);
    for (std::size_t i = 0; i < order_; ++i)
        for (std::size_t j = 0; j < order_; ++j) d(i, j) = (*this)(i, j);
    return d;
}

double SymmetricMatrix::frobenius_norm() const {
    double s = 0.0;
    for (std::size_t j = 0; j < order_; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            const double v = (*this)(i, j);
            s += (i == j ? 1.0 : 2.0) * v * v;
        }
    return std::sqrt(s);
}

double SymmetricMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < order_; ++i) t += (*this)(i, i);
    return t;
}

OrthoBasis mgs_extend(const OrthoBasis& basis, std::span<const std::vector<double>> candidates,
                      double drop_tol) {
    const std::size_t m = basis.dim();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (candidates[c].size() != m) {
            throw InvalidArgument("mgs_extend: candidate " + std::to_string(c) + " has dimension " +
                                  std::to_string(candidates[c].size()) + ", expected " +
                                  std::to_string(m));
        }
    }

    OrthoBasis out = basis;
    std::vector<double> w(m);
    for (const auto& cand : candidates) {
        if (out.size() == m) break;
        std::copy(cand.begin(), cand.end(), w.begin());
        const double original = norm2(w);
        if (original == 0.0) continue;

        double before = original;
        double after = before;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                const auto xi = out.vector(i);
                axpy(-dot(xi, w), xi, w);
            }
            after = norm2(w);
            if (after > 0.5 * before) break;
            before = after;
        }
        if (after <= drop_tol * original) continue;

        for (double& v : w) v /= after;
        out.data_.insert(out.data_.end(), w.begin(), w.end());
    }
    return out;
}

SymmetricMatrix gram_of_columns(const DenseMatrix& y) {
    const std::size_t p = y.cols();
    SymmetricMatrix s(p);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            double acc = 0.0;
            for (std::size_t r = 0; r < y.rows(); ++r) acc += y(r, i) * y(r, j);
            s.set(i, j, acc);
        }
    return s;
}

DenseMatrix transpose_times_basis(const DenseMatrix& a, const OrthoBasis& x, unsigned workers) {
    if (x.dim() != a.rows()) {
        throw InvalidArgument("transpose_times_basis: basis dimension " + std::to_string(x.dim()) +
                              " != rows(A) " + std::to_string(a.rows()));
    }
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t p = x.size();
    DenseMatrix y(n, p);

    // Rows of A are streamed in ascending order; entry (j, i) accumulates
    // a(r, j) * x_i[r] for r = 0..m-1, which is the serial dot product
    // column_j(A)^T x_i. Workers own disjoint ranges of j.
    auto block = [&](std::size_t j0, std::size_t j1) {
        for (std::size_t r = 0; r < m; ++r) {
            const auto arow = a.row(r);
            for (std::size_t i = 0; i < p; ++i) {
                const double xr = x.vector(i)[r];
                for (std::size_t j = j0; j < j1; ++j) y(j, i) += arow[j] * xr;
            }
        }
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1 || m * n * p < (1u << 16)) {
        block(0, n);
        return y;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t j0 = w * chunk;
            const std::size_t j1 = std::min(n, j0 + chunk);
            if (j0 >= j1) break;
            pool.emplace_back(block, j0, j1);
        }
    }
    return y;
}

double frobenius_norm_sq(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return s;
}

}  // namespace lowrank
