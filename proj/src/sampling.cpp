#include "lowrank/sampling.hpp"

#include "lowrank/errors.hpp"
#include "lowrank/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lowrank {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

std::size_t Rng::next_index(std::size_t n) {
    const auto i = static_cast<std::size_t>(next_double() * static_cast<double>(n));
    return std::min(i, n - 1);
}

std::string to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::uniform_with_replacement: return "uniform-wr";
        case SamplerKind::uniform_without_replacement: return "uniform-wor";
        case SamplerKind::weighted: return "weighted";
    }
    return "unknown";
}

std::string to_string(Orientation o) { return o == Orientation::rows ? "rows" : "cols"; }

Sampler::Sampler(SamplerKind kind, std::size_t n, std::uint64_t seed)
    : kind_(kind), n_(n), rng_(seed) {
    if (n == 0) throw InvalidArgument("Sampler: index space is empty");
}

Sampler Sampler::uniform_with_replacement(std::size_t n, std::uint64_t seed) {
    Sampler s(SamplerKind::uniform_with_replacement, n, seed);
    s.cumulative_.resize(n);
    for (std::size_t j = 0; j < n; ++j) s.cumulative_[j] = static_cast<double>(j + 1);
    return s;
}

Sampler Sampler::uniform_without_replacement(std::size_t n, std::uint64_t seed, bool strict) {
    Sampler s(SamplerKind::uniform_without_replacement, n, seed);
    s.strict_ = strict;
    s.refill();
    return s;
}

Sampler Sampler::weighted(std::vector<double> weights, std::uint64_t seed) {
    Sampler s(SamplerKind::weighted, weights.size(), seed);
    double wmax = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (!std::isfinite(weights[j]) || weights[j] < 0.0)
            throw InvalidArgument("Sampler: weight " + std::to_string(j) + " is negative or not finite");
        wmax = std::max(wmax, weights[j]);
    }
    if (wmax == 0.0) throw InvalidArgument("Sampler: all weights are zero");
    s.cumulative_.resize(weights.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        acc += weights[j] / wmax;
        s.cumulative_[j] = acc;
    }
    return s;
}

void Sampler::refill() {
    pool_.resize(n_);
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    ++epoch_;
}

std::size_t Sampler::draw_inverted() {
    const double target = rng_.next_double() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    // Zero-weight entries share the cumulative value of their predecessor and
    // upper_bound never lands on them.
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
}

std::vector<std::size_t> Sampler::next_indices(std::size_t l) {
    if (l == 0) throw InvalidArgument("Sampler::next_indices: l must be positive");
    std::vector<std::size_t> out;
    out.reserve(l);
    for (std::size_t d = 0; d < l; ++d) {
        if (kind_ != SamplerKind::uniform_without_replacement) {
            out.push_back(draw_inverted());
            continue;
        }
        if (pool_.empty()) {
            if (strict_) break;
            refill();
        }
        const std::size_t slot = rng_.next_index(pool_.size());
        out.push_back(pool_[slot]);
        pool_[slot] = pool_.back();
        pool_.pop_back();
    }
    return out;
}

std::vector<double> weights_from_row_norms(const DenseMatrix& a, Orientation axis) {
    std::vector<double> w(axis == Orientation::rows ? a.rows() : a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double v = a(i, j);
            w[axis == Orientation::rows ? i : j] += v * v;
        }
    return w;
}

std::vector<double> weights_from_gradient_image(const DenseMatrix& img, Orientation axis) {
    const std::size_t m = img.rows();
    const std::size_t n = img.cols();
    if (m < 2 || n < 2)
        throw InvalidArgument("weights_from_gradient_image: image must be at least 2x2");

    auto diff = [](double lo, double hi, double span) { return (hi - lo) / span; };
    std::vector<double> w(axis == Orientation::rows ? m : n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double gx;
            if (j == 0) gx = diff(img(i, 0), img(i, 1), 1.0);
            else if (j == n - 1) gx = diff(img(i, n - 2), img(i, n - 1), 1.0);
            else gx = diff(img(i, j - 1), img(i, j + 1), 2.0);
            double gy;
            if (i == 0) gy = diff(img(0, j), img(1, j), 1.0);
            else if (i == m - 1) gy = diff(img(m - 2, j), img(m - 1, j), 1.0);
            else gy = diff(img(i - 1, j), img(i + 1, j), 2.0);
            w[axis == Orientation::rows ? i : j] += std::sqrt(gx * gx + gy * gy);
        }
    }
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }))
        std::fill(w.begin(), w.end(), 1.0);
    return w;
}

void write_weights_csv(const std::vector<double>& weights, const std::string& path) {
    DenseMatrix col(weights.size(), 1, weights);
    write_matrix_csv(col, path);
}

std::vector<double> read_weights_csv(const std::string& path) {
    const DenseMatrix col = read_matrix_csv(path);
    if (col.cols() != 1) throw IoError(path + ": weight file must have exactly one column");
    return col.column(0);
}

}  // namespace lowrank
