#include "lowrank/errors.hpp"
#include "lowrank/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lowrank {

namespace {

double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Applies the rotation that annihilates a(p, q) to both sides of `a` and
// accumulates it into the columns of `v`.
void rotate(DenseMatrix& a, DenseMatrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const std::size_t n = a.rows();

    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

EigenResult eigh_descending(const SymmetricMatrix& s) {
    const std::size_t n = s.order();
    for (double v : s.packed()) {
        if (!std::isfinite(v)) throw InvalidArgument("eigh_descending: non-finite entry");
    }

    DenseMatrix a = s.to_dense();
    DenseMatrix v = DenseMatrix::identity(n);
    const double tol = kJacobiTol * s.frobenius_norm();

    int sweeps = 0;
    double off = off_diagonal_norm(a);
    while (off > tol) {
        if (sweeps == kJacobiSweepCap) {
            throw NumericalError("eigh_descending: no convergence after " +
                                 std::to_string(kJacobiSweepCap) +
                                 " sweeps, off-diagonal norm " + std::to_string(off));
        }
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
        ++sweeps;
        off = off_diagonal_norm(a);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenResult out;
    out.sweeps = sweeps;
    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.values[c] = a(src, src);
        std::size_t lead = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(v(k, src)) > std::abs(v(lead, src))) lead = k;
        const double sign = v(lead, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src);
    }
    return out;
}

}  // namespace lowrank
