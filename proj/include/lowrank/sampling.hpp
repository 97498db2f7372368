#pragma once

#include "lowrank/matrix.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace lowrank {

/// xoshiro256** seeded by expanding a 64-bit seed through SplitMix64.
/// next_double() maps the top 53 bits of next() onto [0, 1).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next();
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Uniform index in [0, n) by inversion: floor(next_double() * n).
    std::size_t next_index(std::size_t n);

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::array<std::uint64_t, 4> s_{};
};

enum class Orientation { columns, rows };

enum class SamplerKind { uniform_with_replacement, uniform_without_replacement, weighted };

std::string to_string(SamplerKind kind);
std::string to_string(Orientation o);

/// Seeded index stream over [0, n). Indices are 0-based.
///
/// Uniform with replacement and weighted sampling both invert one uniform
/// draw against cumulative weights (unit weights in the uniform case), so a
/// weighted sampler with all weights equal reproduces the uniform stream.
/// Without replacement draws from a pool and starts a new epoch when the pool
/// runs dry, unless `strict` is set, in which case it returns the remainder
/// and then nothing.
class Sampler {
public:
    static Sampler uniform_with_replacement(std::size_t n, std::uint64_t seed);
    static Sampler uniform_without_replacement(std::size_t n, std::uint64_t seed, bool strict = false);
    /// Throws InvalidArgument for negative, non-finite or all-zero weights.
    static Sampler weighted(std::vector<double> weights, std::uint64_t seed);

    /// Throws InvalidArgument when l == 0.
    std::vector<std::size_t> next_indices(std::size_t l);

    SamplerKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return n_; }
    std::uint64_t epoch() const noexcept { return epoch_; }
    std::size_t remaining() const noexcept { return pool_.size(); }

private:
    Sampler(SamplerKind kind, std::size_t n, std::uint64_t seed);
    std::size_t draw_inverted();
    void refill();

    SamplerKind kind_;
    std::size_t n_;
    Rng rng_;
    bool strict_ = false;
    std::uint64_t epoch_ = 0;
    std::vector<std::size_t> pool_;
    std::vector<double> cumulative_;  // weighted only, normalized by the max weight
};

/// Squared Euclidean norm of every row (Orientation::rows) or column.
std::vector<double> weights_from_row_norms(const DenseMatrix& a, Orientation axis);

/// Per-row (or per-column) sums of the gradient magnitude of a grayscale
/// image. Gradients use central differences in the interior and one-sided
/// differences on the border. All-zero weights fall back to uniform.
/// Throws InvalidArgument when either image dimension is < 2.
std::vector<double> weights_from_gradient_image(const DenseMatrix& img,
                                                Orientation axis = Orientation::rows);

void write_weights_csv(const std::vector<double>& weights, const std::string& path);
std::vector<double> read_weights_csv(const std::string& path);

}  // namespace lowrank
