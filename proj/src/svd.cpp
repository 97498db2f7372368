#include "lowrank/errors.hpp"
#include "lowrank/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lowrank {

namespace {

// Gram matrix of the rows of `a` (a a^T), summed in column order.
SymmetricMatrix gram_of_rows(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    SymmetricMatrix s(m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i <= j; ++i) s.set(i, j, dot(a.row(i), a.row(j)));
    return s;
}

}  // namespace

SvdResult svd_oracle(const DenseMatrix& a, double rank_tol) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (std::min(m, n) > kOracleMaxMinDim) {
        throw CapExceeded("svd_oracle: min(m, n) = " + std::to_string(std::min(m, n)) +
                          " exceeds the dense oracle cap of " + std::to_string(kOracleMaxMinDim) +
                          "; use the Monte-Carlo approximation instead");
    }

    // Decompose the smaller Gram matrix. Its eigenvectors give one side; the
    // other side and the singular values come from A v = sigma u (or
    // A^T u = sigma v). Taking sigma as a norm of the product rather than the
    // square root of an eigenvalue keeps tiny singular values accurate to
    // roughly eps * ||A|| instead of sqrt(eps) * ||A||.
    const bool use_right = n <= m;
    const EigenResult eig = eigh_descending(use_right ? gram_of_columns(a) : gram_of_rows(a));
    const std::size_t p = eig.values.size();
    const std::size_t other = use_right ? m : n;

    std::vector<double> sigma(p);
    DenseMatrix known(use_right ? n : m, p);
    DenseMatrix mapped(other, p);
    for (std::size_t c = 0; c < p; ++c) {
        for (std::size_t r = 0; r < known.rows(); ++r) known(r, c) = eig.vectors(r, c);
        double ss = 0.0;
        for (std::size_t r = 0; r < other; ++r) {
            double acc = 0.0;
            if (use_right) {
                for (std::size_t j = 0; j < n; ++j) acc += a(r, j) * eig.vectors(j, c);
            } else {
                for (std::size_t i = 0; i < m; ++i) acc += a(i, r) * eig.vectors(i, c);
            }
            mapped(r, c) = acc;
            ss += acc * acc;
        }
        sigma[c] = std::sqrt(ss);
    }

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    std::size_t r = 0;
    const double cutoff = p == 0 ? 0.0 : rank_tol * sigma[order[0]];
    while (r < p && sigma[order[r]] > cutoff && sigma[order[r]] > 0.0) ++r;

    SvdResult out;
    out.singular_values.resize(r);
    out.left = DenseMatrix(m, r);
    out.right = DenseMatrix(n, r);
    for (std::size_t c = 0; c < r; ++c) {
        const std::size_t src = order[c];
        const double s = sigma[src];
        out.singular_values[c] = s;
        DenseMatrix& kn = use_right ? out.right : out.left;
        DenseMatrix& mp = use_right ? out.left : out.right;
        for (std::size_t i = 0; i < kn.rows(); ++i) kn(i, c) = known(i, src);
        for (std::size_t i = 0; i < mp.rows(); ++i) mp(i, c) = mapped(i, src) / s;
    }
    return out;
}

}  // namespace lowrank
