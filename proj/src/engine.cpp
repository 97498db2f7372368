#include "lowrank/engine.hpp"

#include "lowrank/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace lowrank {

namespace {

constexpr std::uint64_t kResampleSalt = 0x5eed'1a17'c0de'0001ULL;

std::string describe(const char* what, double lhs, double rhs) {
    return std::string(what) + ": " + std::to_string(lhs) + " vs " + std::to_string(rhs);
}

void merge_seen(std::vector<std::size_t>& seen, std::span<const std::size_t> idx) {
    seen.insert(seen.end(), idx.begin(), idx.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
}

void check_indices(std::span<const std::size_t> idx, std::size_t n) {
    for (std::size_t j : idx) {
        if (j >= n) {
            throw InvalidArgument("column index " + std::to_string(j) + " out of range [0, " +
                                  std::to_string(n) + ")");
        }
    }
}

std::vector<std::vector<double>> gather_columns(const DenseMatrix& a,
                                                std::span<const std::size_t> idx) {
    std::vector<std::vector<double>> cols;
    cols.reserve(idx.size());
    for (std::size_t j : idx) cols.push_back(a.column(j));
    return cols;
}

// Columns [from, to) of the basis as their own basis.
OrthoBasis slice(const OrthoBasis& x, std::size_t from, std::size_t to) {
    const auto d = x.data();
    return OrthoBasis(x.dim(), std::vector<double>(d.begin() + from * x.dim(), d.begin() + to * x.dim()));
}

DenseMatrix hconcat(const DenseMatrix& left, const DenseMatrix& right) {
    DenseMatrix out(left.rows(), left.cols() + right.cols());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < left.cols(); ++c) out(r, c) = left(r, c);
        for (std::size_t c = 0; c < right.cols(); ++c) out(r, left.cols() + c) = right(r, c);
    }
    return out;
}

struct Rotation {
    DenseMatrix o;  // p x keep, orthonormal columns
    std::vector<double> lambdas;
};

Rotation top_eigenpairs(const DenseMatrix& yp, std::size_t keep, UpdateStrategy strategy,
                        FlopCounters& flops) {
    const std::size_t p = yp.cols();
    const std::size_t n = yp.rows();
    Rotation rot{DenseMatrix(p, keep), std::vector<double>(keep, 0.0)};

    if (strategy == UpdateStrategy::gram_eig) {
        const EigenResult eig = eigh_descending(gram_of_columns(yp));
        flops.gram += n * p * (p + 1) / 2;
        flops.eigen += p * p * p;
        for (std::size_t c = 0; c < keep; ++c) {
            rot.lambdas[c] = eig.values[c];
            for (std::size_t i = 0; i < p; ++i) rot.o(i, c) = eig.vectors(i, c);
        }
        return rot;
    }

    const SvdResult svd = svd_oracle(yp, 0.0);
    const std::size_t q = std::min(n, p);
    flops.gram += n * q * (q + 1) / 2;
    flops.eigen += q * q * q;
    const std::size_t r = std::min(keep, svd.rank());
    OrthoBasis cols(p);
    {
        std::vector<std::vector<double>> vs;
        for (std::size_t c = 0; c < r; ++c) vs.push_back(svd.right.column(c));
        cols = mgs_extend(cols, vs, 0.0);
    }
    // A rank-deficient Y_p has fewer than `keep` nonzero singular values; pad
    // with an orthonormal completion carrying lambda = 0.
    for (std::size_t e = 0; cols.size() < keep && e < p; ++e) {
        std::vector<std::vector<double>> unit(1, std::vector<double>(p, 0.0));
        unit[0][e] = 1.0;
        cols = mgs_extend(cols, unit);
    }
    for (std::size_t c = 0; c < keep; ++c) {
        if (c < r) rot.lambdas[c] = svd.singular_values[c] * svd.singular_values[c];
        const auto v = cols.vector(c);
        for (std::size_t i = 0; i < p; ++i) rot.o(i, c) = v[i];
    }
    return rot;
}

// Rotates the orthonormal basis xp (with Y_p = A^T xp) onto the `keep`
// leading eigenvectors of Y_p^T Y_p and recomputes Y from A.
ApproxState rotate_to_top(const DenseMatrix& a, const OrthoBasis& xp, const DenseMatrix& yp,
                          std::size_t keep, const Config& cfg, FlopCounters& flops) {
    const std::size_t p = xp.size();
    const std::size_t m = xp.dim();
    keep = std::min(keep, p);
    const Rotation rot = top_eigenpairs(yp, keep, cfg.strategy, flops);

    std::vector<double> xt(keep * m, 0.0);
    for (std::size_t c = 0; c < keep; ++c) {
        double* dst = xt.data() + c * m;
        for (std::size_t i = 0; i < p; ++i) {
            const double w = rot.o(i, c);
            const auto xi = xp.vector(i);
            for (std::size_t r = 0; r < m; ++r) dst[r] += w * xi[r];
        }
    }
    flops.rotation += keep * p * m;

    ApproxState out;
    out.orientation = cfg.orientation;
    out.x = OrthoBasis(m, std::move(xt));
    out.y = transpose_times_basis(a, out.x, cfg.threads);
    flops.product += keep * m * a.cols();
    out.lambdas = rot.lambdas;

    const double top = keep == 0 ? 0.0 : std::max(rot.lambdas[0], 0.0);
    for (std::size_t c = 0; c < keep; ++c) {
        double& lam = out.lambdas[c];
        lam = std::max(lam, 0.0);
        double ny = 0.0;
        for (std::size_t r = 0; r < out.y.rows(); ++r) ny += out.y(r, c) * out.y(r, c);
        const double scale = std::max({lam, ny, 1e-4 * top});
        if (std::abs(lam - ny) > kLambdaCheckTol * scale) {
            throw NumericalError(describe("eigenvalue does not match ||A^T x||^2", lam, ny));
        }
    }
    // Clamping can break ties in the wrong direction by an ulp.
    for (std::size_t c = 1; c < keep; ++c) out.lambdas[c] = std::min(out.lambdas[c], out.lambdas[c - 1]);
    return out;
}

}  // namespace

std::string to_string(UpdateStrategy s) { return s == UpdateStrategy::gram_eig ? "gram" : "svd"; }

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::epsilon: return "epsilon";
        case StopReason::target: return "target";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::sampler_exhausted: return "sampler_exhausted";
    }
    return "unknown";
}

FlopCounters& FlopCounters::operator+=(const FlopCounters& o) noexcept {
    mgs += o.mgs;
    product += o.product;
    gram += o.gram;
    eigen += o.eigen;
    rotation += o.rotation;
    return *this;
}

double ApproxState::norm_sq() const noexcept {
    return std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
}

void validate(const Config& cfg, std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) throw InvalidArgument("matrix is empty");
    if (cfg.k == 0) throw InvalidArgument("k must be positive");
    if (cfg.k > std::min(m, n)) {
        throw InvalidArgument("k = " + std::to_string(cfg.k) + " exceeds min(m, n) = " +
                              std::to_string(std::min(m, n)) +
                              "; a rank-k approximation needs k <= min(m, n)");
    }
    if (cfg.k + cfg.samples_per_iteration() > kMaxWorkingRank) {
        throw InvalidArgument("k + l = " + std::to_string(cfg.k + cfg.samples_per_iteration()) +
                              " exceeds the working-rank cap of " + std::to_string(kMaxWorkingRank));
    }
    if (cfg.max_iterations == 0) throw InvalidArgument("max_iterations must be positive");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
}

ApproxState init_state(const DenseMatrix& a, const Config& cfg,
                       std::span<const std::size_t> init_indices, StepStats* stats) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m == 0 || n == 0) throw InvalidArgument("init_state: matrix is empty");
    if (cfg.k > std::min(m, n)) {
        throw InvalidArgument("init_state: k = " + std::to_string(cfg.k) + " exceeds min(m, n) = " +
                              std::to_string(std::min(m, n)));
    }
    check_indices(init_indices, n);
    FlopCounters local;

    std::vector<std::size_t> used;
    for (std::size_t j : init_indices) {
        if (std::find(used.begin(), used.end(), j) == used.end()) used.push_back(j);
    }
    OrthoBasis x = mgs_extend(OrthoBasis(m), gather_columns(a, used));
    local.mgs += m * used.size() * used.size();

    if (x.size() < cfg.k) {
        std::vector<std::size_t> unseen;
        for (std::size_t j = 0; j < n; ++j)
            if (std::find(used.begin(), used.end(), j) == used.end()) unseen.push_back(j);
        Rng rng(cfg.seed ^ kResampleSalt);
        for (std::size_t i = unseen.size(); i > 1; --i) std::swap(unseen[i - 1], unseen[rng.next_index(i)]);
        for (std::size_t j : unseen) {
            if (x.size() == cfg.k) break;
            const std::vector<std::vector<double>> one{a.column(j)};
            x = mgs_extend(x, one);
            used.push_back(j);
            local.mgs += m * x.size();
        }
    }

    const DenseMatrix y = transpose_times_basis(a, x, cfg.threads);
    local.product += x.size() * m * n;
    ApproxState s = rotate_to_top(a, x, y, cfg.k, cfg, local);
    s.iteration = 0;
    merge_seen(s.columns_seen, used);
    if (stats) *stats = StepStats{local, x.size(), false};
    return s;
}

ApproxState update_step(const DenseMatrix& a, const ApproxState& state,
                        std::span<const std::size_t> new_indices, const Config& cfg,
                        StepStats* stats) {
    const std::size_t m = a.rows();
    if (state.x.dim() != m || state.y.rows() != a.cols()) {
        throw InvalidArgument("update_step: state dimensions do not match the matrix");
    }
    check_indices(new_indices, a.cols());
    FlopCounters local;

    const std::size_t q = state.x.size();
    const OrthoBasis xp = mgs_extend(state.x, gather_columns(a, new_indices));
    local.mgs += m * (q + new_indices.size()) * (q + new_indices.size());
    const std::size_t p = xp.size();

    if (p == q) {
        ApproxState same = state;
        same.iteration = state.iteration + 1;
        merge_seen(same.columns_seen, new_indices);
        if (stats) *stats = StepStats{local, p, true};
        return same;
    }

    const DenseMatrix y_new = transpose_times_basis(a, slice(xp, q, p), cfg.threads);
    local.product += (p - q) * m * a.cols();
    const DenseMatrix yp = q == 0 ? y_new : hconcat(state.y, y_new);

    ApproxState next = rotate_to_top(a, xp, yp, cfg.k, cfg, local);
    next.iteration = state.iteration + 1;
    next.columns_seen = state.columns_seen;
    merge_seen(next.columns_seen, new_indices);

    const double before = state.norm_sq();
    const double after = next.norm_sq();
    if (after < before - kMonotoneSlack * frobenius_norm_sq(a)) {
        throw NumericalError(describe("update decreased ||B||_F^2", after, before));
    }
    if (stats) *stats = StepStats{local, p, false};
    return next;
}

double residual_norm_sq(double a_norm_sq, const ApproxState& state) {
    return std::max(0.0, a_norm_sq - state.norm_sq());
}

Orientation choose_orientation(std::size_t m, std::size_t n) {
    return m < n ? Orientation::rows : Orientation::columns;
}

Sampler make_sampler(const std::string& name, const DenseMatrix& a, Orientation orientation,
                     std::uint64_t seed) {
    // Sampled "columns" are columns of the oriented matrix, i.e. rows of A in
    // rows mode.
    const Orientation axis = orientation == Orientation::rows ? Orientation::rows : Orientation::columns;
    const std::size_t count = axis == Orientation::rows ? a.rows() : a.cols();
    if (name == "uniform-wr") return Sampler::uniform_with_replacement(count, seed);
    if (name == "uniform-wor") return Sampler::uniform_without_replacement(count, seed);
    if (name == "weighted-norms") return Sampler::weighted(weights_from_row_norms(a, axis), seed);
    if (name == "weighted-gradient") return Sampler::weighted(weights_from_gradient_image(a, axis), seed);
    throw InvalidArgument("unknown sampler '" + name + "'");
}

RunResult run(const DenseMatrix& input, const Config& cfg, Sampler& sampler) {
    const bool rows_mode = cfg.orientation == Orientation::rows;
    const DenseMatrix transposed = rows_mode ? input.transposed() : DenseMatrix();
    const DenseMatrix& a = rows_mode ? transposed : input;
    validate(cfg, a.rows(), a.cols());
    if (sampler.size() != a.cols()) {
        throw InvalidArgument("sampler ranges over " + std::to_string(sampler.size()) +
                              " indices but the oriented matrix has " + std::to_string(a.cols()) +
                              " columns");
    }

    using clock = std::chrono::steady_clock;
    const double a_norm_sq = frobenius_norm_sq(a);
    const double tiny_norm = 1e-15 * std::sqrt(a_norm_sq);

    RunResult result;
    ConvergenceTrace& trace = result.trace;
    trace.k = cfg.k;
    trace.l = cfg.samples_per_iteration();
    trace.max_iterations = cfg.max_iterations;
    trace.epsilon = cfg.epsilon;
    trace.seed = cfg.seed;
    trace.sampler = to_string(sampler.kind());
    trace.strategy = to_string(cfg.strategy);
    trace.orientation = to_string(cfg.orientation);
    trace.m = input.rows();
    trace.n = input.cols();
    trace.a_norm_sq = a_norm_sq;

    auto record = [&](const ApproxState& s, std::vector<std::size_t> idx, std::size_t basis_size,
                      bool no_op, double prev_norm_sq, double init_norm_sq, double seconds,
                      const FlopCounters& flops, std::size_t samples_total) {
        IterationRecord r;
        r.iteration = s.iteration;
        r.norm_b_sq = s.norm_sq();
        r.residual_sq = residual_norm_sq(a_norm_sq, s);
        r.relative_error = a_norm_sq > 0.0 ? r.residual_sq / a_norm_sq : 0.0;
        const double cur = std::sqrt(r.norm_b_sq);
        r.improvement_ratio = cur <= tiny_norm ? 1.0 : std::sqrt(prev_norm_sq) / cur;
        r.ratio_to_initial = cur <= tiny_norm ? 1.0 : std::sqrt(init_norm_sq) / cur;
        r.indices = std::move(idx);
        r.samples_total = samples_total;
        r.basis_size = basis_size;
        r.no_op = no_op;
        r.wall_time = seconds;
        r.flops = flops;
        trace.records.push_back(std::move(r));
        return trace.records.back();
    };

    auto t0 = clock::now();
    std::vector<std::size_t> init_idx = sampler.next_indices(cfg.k);
    StepStats init_stats;
    ApproxState state = init_state(a, cfg, init_idx, &init_stats);
    std::size_t samples_total = init_idx.size();
    const double init_norm_sq = state.norm_sq();
    record(state, std::move(init_idx), init_stats.basis_size, false, init_norm_sq, init_norm_sq,
           std::chrono::duration<double>(clock::now() - t0).count(), init_stats.flops, samples_total);

    StopReason reason = StopReason::max_iterations;
    for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
        t0 = clock::now();
        std::vector<std::size_t> idx = sampler.next_indices(cfg.samples_per_iteration());
        if (idx.empty()) {
            reason = StopReason::sampler_exhausted;
            break;
        }
        samples_total += idx.size();
        StepStats step;
        const double prev = state.norm_sq();
        state = update_step(a, state, idx, cfg, &step);
        const IterationRecord& r =
            record(state, std::move(idx), step.basis_size, step.no_op, prev, init_norm_sq,
                   std::chrono::duration<double>(clock::now() - t0).count(), step.flops, samples_total);

        if (cfg.target_relative_error && r.relative_error <= *cfg.target_relative_error) {
            reason = StopReason::target;
            break;
        }
        if (r.improvement_ratio > 1.0 - cfg.epsilon) {
            reason = StopReason::epsilon;
            break;
        }
    }
    trace.stop_iteration = state.iteration;
    trace.stop_reason = to_string(reason);
    result.state = std::move(state);
    return result;
}

SingularTripletEstimates triplet_estimates(const ApproxState& state) {
    const std::size_t k = state.rank();
    const std::size_t dim_x = state.x.dim();
    const std::size_t dim_y = state.y.rows();
    DenseMatrix xs(dim_x, k);
    DenseMatrix ys(dim_y, k);
    SingularTripletEstimates est;
    est.sigma.resize(k);
    est.degenerate.assign(k, false);
    for (std::size_t c = 0; c < k; ++c) {
        const double lam = state.lambdas[c];
        est.sigma[c] = std::sqrt(lam);
        const auto xc = state.x.vector(c);
        for (std::size_t r = 0; r < dim_x; ++r) xs(r, c) = xc[r];
        if (lam < kDegenerateLambda) {
            est.degenerate[c] = true;
            continue;
        }
        double ny = 0.0;
        for (std::size_t r = 0; r < dim_y; ++r) ny += state.y(r, c) * state.y(r, c);
        ny = std::sqrt(ny);
        for (std::size_t r = 0; r < dim_y; ++r) ys(r, c) = state.y(r, c) / ny;
    }
    if (state.orientation == Orientation::rows) {
        est.u = std::move(ys);
        est.v = std::move(xs);
    } else {
        est.u = std::move(xs);
        est.v = std::move(ys);
    }
    return est;
}

double reconstruct_entry(const ApproxState& state, std::size_t i, std::size_t j) {
    if (state.orientation == Orientation::rows) std::swap(i, j);
    if (i >= state.x.dim() || j >= state.y.rows()) {
        throw InvalidArgument("reconstruct_entry: index (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") out of range");
    }
    double acc = 0.0;
    for (std::size_t q = 0; q < state.rank(); ++q) acc += state.x.vector(q)[i] * state.y(j, q);
    return acc;
}

}  // namespace lowrank
