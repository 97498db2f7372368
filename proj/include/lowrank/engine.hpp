#pragma once

// Iterative Monte-Carlo rank-k approximation.
//
// The approximant is kept in factored form B = sum_i x_i y_i^T with
// orthonormal x_i and y_i = A^T x_i, so ||B||_F^2 = sum_i ||y_i||^2 and
// ||A - B||_F^2 = ||A||_F^2 - ||B||_F^2. Each update appends freshly sampled
// columns of A to the basis, orthonormalizes them, and keeps the k-dimensional
// subspace that captures the most of A. That can never lose ground against the
// previous basis, which is a subset of the candidates.

#include "lowrank/matrix.hpp"
#include "lowrank/sampling.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lowrank {

enum class UpdateStrategy {
    gram_eig,   // eigen-decomposition of S = Y_p^T Y_p
    small_svd,  // right singular vectors of Y_p
};

std::string to_string(UpdateStrategy s);

/// Largest k + l accepted (the small eigenproblem is dense p x p).
inline constexpr std::size_t kMaxWorkingRank = 1024;
/// lambda below this is treated as zero when normalizing v-hat.
inline constexpr double kDegenerateLambda = 1e-24;
/// Slack allowed on the sum of lambdas decreasing, relative to ||A||_F^2.
inline constexpr double kMonotoneSlack = 1e-8;
/// Tolerance of the lambda_i == ||A^T x_i||^2 cross-check.
inline constexpr double kLambdaCheckTol = 1e-8;

struct Config {
    std::size_t k = 1;
    std::size_t l = 0;  // 0 means "same as k"
    std::size_t max_iterations = 20;
    double epsilon = 1e-3;
    std::uint64_t seed = 0;
    Orientation orientation = Orientation::columns;
    UpdateStrategy strategy = UpdateStrategy::gram_eig;
    unsigned threads = 1;
    /// Also stop once the relative error drops to this value.
    std::optional<double> target_relative_error;

    std::size_t samples_per_iteration() const noexcept { return l == 0 ? k : l; }
};

/// Throws InvalidArgument if cfg cannot be run on an m x n matrix (after
/// orientation is applied).
void validate(const Config& cfg, std::size_t m, std::size_t n);

/// Nominal multiply-add counts following the textbook cost of each step:
/// MGS m*(q+c)^2, products m*n per vector, Gram n*p*(p+1)/2, eigen p^3,
/// rotation keep*p*m.
struct FlopCounters {
    std::uint64_t mgs = 0;
    std::uint64_t product = 0;
    std::uint64_t gram = 0;
    std::uint64_t eigen = 0;
    std::uint64_t rotation = 0;

    std::uint64_t total() const noexcept { return mgs + product + gram + eigen + rotation; }
    FlopCounters& operator+=(const FlopCounters& o) noexcept;
    friend bool operator==(const FlopCounters&, const FlopCounters&) = default;
};

/// Bookkeeping reported by init_state and update_step.
struct StepStats {
    FlopCounters flops;
    std::size_t basis_size = 0;  // p: basis size after orthonormalization
    bool no_op = false;          // no sampled column added a direction
};

/// Rank-k approximant of the oriented matrix (A in columns mode, A^T in rows
/// mode): x holds the orthonormal left factors, column i of y is A^T x_i and
/// lambdas[i] == ||y_i||^2, non-increasing.
struct ApproxState {
    Orientation orientation = Orientation::columns;
    OrthoBasis x;
    DenseMatrix y;
    std::vector<double> lambdas;
    std::size_t iteration = 0;
    std::vector<std::size_t> columns_seen;  // sorted, unique

    std::size_t rank() const noexcept { return lambdas.size(); }
    double norm_sq() const noexcept;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double norm_b_sq = 0.0;
    double residual_sq = 0.0;
    double relative_error = 0.0;
    double improvement_ratio = 1.0;  // ||B_{t-1}|| / ||B_t||
    double ratio_to_initial = 1.0;   // ||B_0|| / ||B_t||
    std::vector<std::size_t> indices;
    std::size_t samples_total = 0;
    std::size_t basis_size = 0;  // p after orthonormalization
    bool no_op = false;
    double wall_time = 0.0;  // seconds
    FlopCounters flops;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

enum class StopReason { epsilon, target, max_iterations, sampler_exhausted };

std::string to_string(StopReason r);

struct ConvergenceTrace {
    std::size_t k = 0;
    std::size_t l = 0;
    std::size_t max_iterations = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::string sampler;
    std::string strategy;
    std::string orientation;
    std::size_t m = 0;  // of the input matrix, before orientation
    std::size_t n = 0;
    double a_norm_sq = 0.0;
    std::optional<double> optimum_relative_error;
    std::vector<IterationRecord> records;
    std::size_t stop_iteration = 0;
    std::string stop_reason;

    friend bool operator==(const ConvergenceTrace&, const ConvergenceTrace&) = default;
};

struct RunResult {
    ApproxState state;
    ConvergenceTrace trace;
};

/// Builds B_0 from the given columns of the oriented matrix `a`. Duplicate or
/// dependent columns are replaced by unseen ones (in a seeded random order)
/// until k directions are found or the column space is exhausted. The result
/// is rotated into the eigenbasis of its own Gram matrix so lambdas are exact.
ApproxState init_state(const DenseMatrix& a, const Config& cfg,
                       std::span<const std::size_t> init_indices, StepStats* stats = nullptr);

/// One improvement step with the given new columns. When none of them adds a
/// direction the state is returned unchanged apart from iteration and
/// columns_seen. Throws NumericalError if the lambda cross-check or the
/// monotonicity guarantee fails.
ApproxState update_step(const DenseMatrix& a, const ApproxState& state,
                        std::span<const std::size_t> new_indices, const Config& cfg,
                        StepStats* stats = nullptr);

/// Full algorithm on `a` (transposed internally in rows mode). The sampler
/// must range over the columns of the oriented matrix. Records iteration 0
/// (the initial approximant) and every update; stops when
/// ||B_{t-1}|| / ||B_t|| > 1 - epsilon, on the target error, or after
/// max_iterations updates.
RunResult run(const DenseMatrix& a, const Config& cfg, Sampler& sampler);

/// ||A||_F^2 - sum lambda_i, clamped at zero.
double residual_norm_sq(double a_norm_sq, const ApproxState& state);

struct SingularTripletEstimates {
    std::vector<double> sigma;
    DenseMatrix u;  // m x k, left singular vector estimates of the input matrix
    DenseMatrix v;  // n x k
    std::vector<bool> degenerate;
};

/// sigma_i = sqrt(lambda_i), u_i = x_i, v_i = y_i / ||y_i|| (swapped in rows
/// mode so u and v always refer to the input matrix).
SingularTripletEstimates triplet_estimates(const ApproxState& state);

/// Entry (i, j) of B in the input matrix's coordinates. Throws InvalidArgument
/// when out of range.
double reconstruct_entry(const ApproxState& state, std::size_t i, std::size_t j);

/// Sampler over the columns of the oriented matrix, by CLI name:
/// uniform-wr, uniform-wor, weighted-norms, weighted-gradient.
Sampler make_sampler(const std::string& name, const DenseMatrix& a, Orientation orientation,
                     std::uint64_t seed);

/// Resolves `auto` to rows when m < n.
Orientation choose_orientation(std::size_t m, std::size_t n);

}  // namespace lowrank
