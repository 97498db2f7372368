#include "lowrank/errors.hpp"
#include "lowrank/matrix.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace lowrank;
using namespace lowrank::testing;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return v; }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

SymmetricMatrix random_symmetric(std::size_t p, std::uint64_t seed) {
    const DenseMatrix g = gaussian(p, p, seed);
    SymmetricMatrix s(p);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i <= j; ++i) s.set(i, j, 0.5 * (g(i, j) + g(j, i)));
    return s;
}

// Residual of the projection of v onto span(basis), relative to ||v||.
double projection_residual(const OrthoBasis& basis, std::vector<double> v) {
    const double n0 = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto x = basis.vector(i);
        const double c = std::inner_product(x.begin(), x.end(), v.begin(), 0.0);
        for (std::size_t r = 0; r < v.size(); ++r) v[r] -= c * x[r];
    }
    const double n1 = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    return n0 == 0.0 ? 0.0 : n1 / n0;
}

}  // namespace

TEST_CASE("DenseMatrix rejects bad construction") {
    CHECK_THROWS_AS(DenseMatrix(2, 2, vec({1, 2, 3})), InvalidArgument);
    CHECK_THROWS_AS(DenseMatrix(1, 2, vec({1, std::numeric_limits<double>::quiet_NaN()})), InvalidArgument);
    CHECK_THROWS_AS(DenseMatrix(1, 1, vec({std::numeric_limits<double>::infinity()})), InvalidArgument);
    const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
    CHECK(a(1, 0) == 3.0);
    CHECK(a.data()[1] == 2.0);  // row-major
    CHECK(a.transposed() == DenseMatrix::from_rows({{1, 3}, {2, 4}}));
}

TEST_CASE("frobenius_norm_sq") {
    CHECK(frobenius_norm_sq(DenseMatrix(3, 2)) == 0.0);
    CHECK(frobenius_norm_sq(DenseMatrix::identity(3)) == 3.0);
    CHECK(frobenius_norm_sq(DenseMatrix::from_rows({{1, 2}, {3, 4}})) == 30.0);
}

TEST_SUITE("mgs_extend") {
    TEST_CASE("already orthonormal candidates pass through") {
        const std::vector<std::vector<double>> c{vec({1, 0, 0}), vec({0, 1, 0})};
        const OrthoBasis b = mgs_extend(OrthoBasis(3), c);
        REQUIRE(b.size() == 2);
        CHECK(max_abs_diff(b.vector(0), vec({1, 0, 0})) == 0.0);
        CHECK(max_abs_diff(b.vector(1), vec({0, 1, 0})) == 0.0);
    }

    TEST_CASE("dependent candidate is dropped") {
        const std::vector<std::vector<double>> e1{vec({1, 0, 0})};
        const OrthoBasis b = mgs_extend(OrthoBasis(3), e1);
        const OrthoBasis again = mgs_extend(b, e1);
        CHECK(again.size() == 1);
        CHECK(again == b);
    }

    TEST_CASE("two-step Gram-Schmidt") {
        const std::vector<std::vector<double>> c{vec({1, 1, 0}), vec({1, 0, 0})};
        const OrthoBasis b = mgs_extend(OrthoBasis(3), c);
        REQUIRE(b.size() == 2);
        const double h = 1.0 / std::sqrt(2.0);
        CHECK(max_abs_diff(b.vector(0), vec({h, h, 0})) < 1e-15);
        CHECK(max_abs_diff(b.vector(1), vec({h, -h, 0})) < 1e-15);
    }

    TEST_CASE("zero candidate and full basis") {
        const std::vector<std::vector<double>> c{vec({0, 0}), vec({3, 0}), vec({1, 1}), vec({5, 7})};
        const OrthoBasis b = mgs_extend(OrthoBasis(2), c);
        CHECK(b.size() == 2);
    }

    TEST_CASE("dimension mismatch names the offending candidate") {
        const std::vector<std::vector<double>> c{vec({1, 0, 0}), vec({1, 0})};
        try {
            (void)mgs_extend(OrthoBasis(3), c);
            FAIL("expected InvalidArgument");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("candidate 1") != std::string::npos);
        }
    }

    TEST_CASE("fuzz: prefix preserved, orthonormal, spans the inputs") {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const std::size_t m = 3 + seed % 17;
            const std::size_t k = seed % std::min<std::size_t>(m, 5);
            const std::size_t l = 1 + seed % 7;
            const OrthoBasis base = random_orthonormal(m, k, seed * 3 + 1);
            DenseMatrix g = gaussian(m, l, seed * 3 + 2);
            std::vector<std::vector<double>> cand;
            for (std::size_t j = 0; j < l; ++j) cand.push_back(g.column(j));
            // Some exactly dependent candidates: copies and sums of earlier ones.
            if (l >= 2) {
                cand.push_back(cand[0]);
                std::vector<double> s(m);
                for (std::size_t r = 0; r < m; ++r) s[r] = cand[0][r] + 2.0 * cand[1][r];
                cand.push_back(s);
            }
            const OrthoBasis out = mgs_extend(base, cand);
            CHECK(out.size() >= k);
            CHECK(out.size() <= std::min(m, k + cand.size()));
            CHECK(out.prefix(k) == base);
            CHECK(gram_deviation(out) <= 1e-10);
            for (const auto& c : cand) CHECK(projection_residual(out, c) <= 1e-8);
            for (std::size_t i = 0; i < k; ++i)
                CHECK(projection_residual(out, std::vector<double>(base.vector(i).begin(), base.vector(i).end())) <= 1e-8);
        }
    }

    TEST_CASE("nearly dependent candidate stays orthogonal") {
        std::vector<double> a = vec({1, 0, 0, 0});
        std::vector<double> b = vec({1, 1e-9, 0, 0});
        const std::vector<std::vector<double>> c{a, b};
        const OrthoBasis out = mgs_extend(OrthoBasis(4), c);
        REQUIRE(out.size() == 2);
        CHECK(gram_deviation(out) <= 1e-10);
    }
}

TEST_SUITE("eigh_descending") {
    TEST_CASE("diagonal input") {
        SymmetricMatrix s(2);
        s.set(0, 0, 3.0);
        s.set(1, 1, 1.0);
        const EigenResult r = eigh_descending(s);
        CHECK(r.values == vec({3, 1}));
        CHECK(r.vectors == DenseMatrix::identity(2));
    }

    TEST_CASE("diagonal input in ascending order is reordered") {
        SymmetricMatrix s(2);
        s.set(0, 0, 1.0);
        s.set(1, 1, 3.0);
        const EigenResult r = eigh_descending(s);
        CHECK(r.values == vec({3, 1}));
        CHECK(r.vectors == DenseMatrix::from_rows({{0, 1}, {1, 0}}));
    }

    TEST_CASE("classic 2x2") {
        const EigenResult r = eigh_descending(SymmetricMatrix::from_dense(DenseMatrix::from_rows({{2, 1}, {1, 2}})));
        CHECK(r.values[0] == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(r.values[1] == doctest::Approx(1.0).epsilon(1e-15));
        const double h = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(r.vectors(0, 0) - h) < 1e-15);
        CHECK(std::abs(r.vectors(1, 0) - h) < 1e-15);
        // Tie in magnitude: lowest index gets the positive sign.
        CHECK(std::abs(r.vectors(0, 1) - h) < 1e-15);
        CHECK(std::abs(r.vectors(1, 1) + h) < 1e-15);
    }

    TEST_CASE("zero and 1x1 matrices") {
        const EigenResult z = eigh_descending(SymmetricMatrix(3));
        CHECK(z.values == vec({0, 0, 0}));
        CHECK(z.vectors == DenseMatrix::identity(3));
        SymmetricMatrix one(1);
        one.set(0, 0, -4.0);
        CHECK(eigh_descending(one).values == vec({-4}));
        CHECK(eigh_descending(SymmetricMatrix(0)).values.empty());
    }

    TEST_CASE("random symmetric: residuals, trace, orthonormality, signs") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const std::size_t p = seed == 0 ? 6 : 1 + seed % 24;
            const SymmetricMatrix s = random_symmetric(p, seed);
            const EigenResult r = eigh_descending(s);
            const DenseMatrix full = s.to_dense();
            const double fro = s.frobenius_norm();
            for (std::size_t i = 0; i < p; ++i) {
                double res = 0.0;
                double maxabs = 0.0;
                int lead = 0;
                for (std::size_t a = 0; a < p; ++a) {
                    double sv = 0.0;
                    for (std::size_t b = 0; b < p; ++b) sv += full(a, b) * r.vectors(b, i);
                    const double d = sv - r.values[i] * r.vectors(a, i);
                    res += d * d;
                    if (std::abs(r.vectors(a, i)) > maxabs) {
                        maxabs = std::abs(r.vectors(a, i));
                        lead = static_cast<int>(a);
                    }
                }
                CHECK(std::sqrt(res) <= 1e-8 * std::max(1.0, fro));
                CHECK(r.vectors(lead, i) > 0.0);
                if (i > 0) CHECK(r.values[i - 1] >= r.values[i]);
            }
            const double sum = std::accumulate(r.values.begin(), r.values.end(), 0.0);
            CHECK(std::abs(sum - s.trace()) <= 1e-10 * std::max(1.0, std::abs(s.trace()) + fro));
            std::vector<double> cols;
            for (std::size_t c = 0; c < p; ++c)
                for (std::size_t a = 0; a < p; ++a) cols.push_back(r.vectors(a, c));
            CHECK(gram_deviation(OrthoBasis(p, cols)) <= 1e-10);
        }
    }

    TEST_CASE("eigenvalues invariant under symmetric permutation") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const std::size_t p = 2 + seed % 10;
            const SymmetricMatrix s = random_symmetric(p, 100 + seed);
            std::vector<std::size_t> perm(p);
            std::iota(perm.begin(), perm.end(), 0);
            std::mt19937_64 gen(seed);
            std::shuffle(perm.begin(), perm.end(), gen);
            SymmetricMatrix t(p);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = i; j < p; ++j) t.set(i, j, s(perm[i], perm[j]));
            const auto a = eigh_descending(s).values;
            const auto b = eigh_descending(t).values;
            CHECK(max_abs_diff(a, b) <= 1e-8 * std::max(1.0, s.frobenius_norm()));
        }
    }

    TEST_CASE("Ky Fan: random orthonormal frames never beat the top-k eigenvalue sum") {
        for (std::uint64_t seed = 0; seed < 300; ++seed) {
            const std::size_t p = 2 + seed % 12;
            const std::size_t k = 1 + seed % p;
            const SymmetricMatrix s = random_symmetric(p, 500 + seed);
            const auto values = eigh_descending(s).values;
            const double bound = std::accumulate(values.begin(), values.begin() + k, 0.0);
            const OrthoBasis x = random_orthonormal(p, k, 900 + seed);
            double frame = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t a = 0; a < p; ++a)
                    for (std::size_t b = 0; b < p; ++b) frame += x.vector(i)[a] * s(a, b) * x.vector(i)[b];
            CHECK(frame <= bound + 1e-8 * s.frobenius_norm());
        }
    }
}

TEST_SUITE("gram_of_columns") {
    TEST_CASE("small cases") {
        CHECK(gram_of_columns(DenseMatrix::identity(2)).to_dense() == DenseMatrix::identity(2));
        const auto y = DenseMatrix::from_rows({{1, 1}, {0, 1}});
        CHECK(gram_of_columns(y).to_dense() == DenseMatrix::from_rows({{1, 1}, {1, 2}}));
    }

    TEST_CASE("random 7x3 equals the triple loop exactly") {
        const DenseMatrix y = gaussian(7, 3, 42);
        const SymmetricMatrix s = gram_of_columns(y);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (std::size_t r = 0; r < 7; ++r) acc += y(r, i) * y(r, j);
                CHECK(s(i, j) == acc);
            }
    }
}

TEST_SUITE("transpose_times_basis") {
    TEST_CASE("small cases") {
        const std::vector<std::vector<double>> e2{vec({0, 1, 0})};
        const OrthoBasis x = mgs_extend(OrthoBasis(3), e2);
        const DenseMatrix y = transpose_times_basis(DenseMatrix::identity(3), x);
        CHECK(y == DenseMatrix(3, 1, vec({0, 1, 0})));

        const std::vector<std::vector<double>> e1{vec({1, 0})};
        const DenseMatrix y2 =
            transpose_times_basis(DenseMatrix::from_rows({{1, 2}, {3, 4}}), mgs_extend(OrthoBasis(2), e1));
        CHECK(y2 == DenseMatrix(2, 1, vec({1, 2})));
    }

    TEST_CASE("dimension mismatch") {
        CHECK_THROWS_AS(transpose_times_basis(DenseMatrix(3, 2), OrthoBasis(4)), InvalidArgument);
    }

    TEST_CASE("random 50x20 agrees with the serial product exactly") {
        const DenseMatrix a = gaussian(50, 20, 7);
        const OrthoBasis x = random_orthonormal(50, 5, 8);
        const DenseMatrix y = transpose_times_basis(a, x);
        for (std::size_t j = 0; j < 20; ++j)
            for (std::size_t i = 0; i < 5; ++i) {
                double s = 0.0;
                for (std::size_t r = 0; r < 50; ++r) s += a(r, j) * x.vector(i)[r];
                CHECK(y(j, i) == s);
            }
    }

    TEST_CASE("result does not depend on worker count") {
        const DenseMatrix a = gaussian(400, 90, 11);
        const OrthoBasis x = random_orthonormal(400, 6, 12);
        const DenseMatrix serial = transpose_times_basis(a, x, 1);
        for (unsigned w : {2u, 3u, 7u, 64u, 200u}) CHECK(transpose_times_basis(a, x, w) == serial);
    }
}

TEST_SUITE("svd_oracle") {
    TEST_CASE("diagonal") {
        const SvdResult r = svd_oracle(DenseMatrix::from_rows({{5, 0}, {0, 3}}));
        CHECK(r.singular_values == vec({5, 3}));
        CHECK(r.left == DenseMatrix::identity(2));
        CHECK(r.right == DenseMatrix::identity(2));
    }

    TEST_CASE("zero matrix has rank 0") {
        const SvdResult r = svd_oracle(DenseMatrix(4, 3));
        CHECK(r.rank() == 0);
        CHECK(r.left.cols() == 0);
    }

    TEST_CASE("cap") {
        CHECK_THROWS_AS(svd_oracle(DenseMatrix(kOracleMaxMinDim + 1, kOracleMaxMinDim + 1)), CapExceeded);
    }

    TEST_CASE("random tall and wide: reconstruction, energy, triplet relations") {
        for (auto [m, n, seed] : {std::tuple{30, 8, 1}, {8, 30, 2}, {25, 25, 3}, {40, 10, 4}, {1, 6, 5}}) {
            const DenseMatrix a = gaussian(m, n, seed);
            const SvdResult r = svd_oracle(a);
            const double s1 = r.singular_values[0];
            double energy = 0.0;
            for (double s : r.singular_values) energy += s * s;
            CHECK(std::abs(energy - frobenius_norm_sq(a)) <= 1e-8 * frobenius_norm_sq(a));
            DenseMatrix rec(m, n);
            for (std::size_t q = 0; q < r.rank(); ++q)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) rec(i, j) += r.singular_values[q] * r.left(i, q) * r.right(j, q);
            double err = 0.0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) err += (a(i, j) - rec(i, j)) * (a(i, j) - rec(i, j));
            CHECK(std::sqrt(err) <= 1e-8 * s1);
            for (std::size_t q = 0; q < r.rank(); ++q) {
                double av = 0.0, atu = 0.0;
                for (int i = 0; i < m; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < n; ++j) s += a(i, j) * r.right(j, q);
                    av = std::max(av, std::abs(s - r.singular_values[q] * r.left(i, q)));
                }
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int i = 0; i < m; ++i) s += a(i, j) * r.left(i, q);
                    atu = std::max(atu, std::abs(s - r.singular_values[q] * r.right(j, q)));
                }
                CHECK(av <= 1e-8 * s1);
                CHECK(atu <= 1e-8 * s1);
                if (q > 0) CHECK(r.singular_values[q - 1] >= r.singular_values[q]);
            }
        }
    }

    TEST_CASE("singular values match the square roots of eig(A^T A)") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const DenseMatrix a = gaussian(12 + seed % 9, 3 + seed % 7, 300 + seed);
            const SvdResult r = svd_oracle(a);
            // Independent route: Gram matrix via the naive product.
            const DenseMatrix g = naive_matmul(a.transposed(), a);
            const auto ev = eigh_descending(SymmetricMatrix::from_dense(g)).values;
            for (std::size_t i = 0; i < r.rank(); ++i) {
                if (r.singular_values[i] < 1e-6 * r.singular_values[0]) continue;
                CHECK(std::abs(r.singular_values[i] - std::sqrt(ev[i])) <= 1e-7 * r.singular_values[i]);
            }
        }
    }

    TEST_CASE("rank-deficient input drops null directions") {
        const DenseMatrix a = low_rank(20, 9, 4, 17);
        const SvdResult r = svd_oracle(a);
        CHECK(r.rank() == 4);
    }
}
