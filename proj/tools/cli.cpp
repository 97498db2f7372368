#include "cli.hpp"

#include "lowrank/engine.hpp"
#include "lowrank/errors.hpp"
#include "lowrank/io.hpp"
#include "lowrank/matrix.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lowrank::cli {

namespace {

using ojson = nlohmann::ordered_json;
using clock = std::chrono::steady_clock;

struct InputFlags {
    std::string path;
    std::string format = "csv";
    unsigned threads = 1;
};

struct RunFlags {
    std::size_t k = 0;
    std::size_t l = 0;
    std::size_t iters = 20;
    double epsilon = 1e-3;
    std::uint64_t seed = 0;
    std::string sampler = "uniform-wor";
    std::string orientation = "auto";
    std::string strategy = "gram";
};

void add_input_flags(CLI::App* cmd, InputFlags& f) {
    cmd->add_option("--input", f.path, "Matrix file")->required();
    cmd->add_option("--format", f.format, "Input format")
        ->check(CLI::IsMember({"csv", "mm", "pgm"}))
        ->capture_default_str();
    cmd->add_option("--threads", f.threads, "Worker cap for the A^T X product")
        ->check(CLI::Range(1u, 256u))
        ->capture_default_str();
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_seed) {
    cmd->add_option("--k", f.k, "Target rank")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--l", f.l, "Columns sampled per iteration (default: k)");
    cmd->add_option("--iters", f.iters, "Maximum number of updates")->capture_default_str();
    cmd->add_option("--epsilon", f.epsilon, "Stop when ||B_{t-1}||/||B_t|| > 1 - epsilon")
        ->capture_default_str();
    if (with_seed) cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--sampler", f.sampler, "Sampling scheme")
        ->check(CLI::IsMember({"uniform-wr", "uniform-wor", "weighted-norms", "weighted-gradient"}))
        ->capture_default_str();
    cmd->add_option("--orientation", f.orientation, "Sample columns, rows, or pick by shape")
        ->check(CLI::IsMember({"cols", "rows", "auto"}))
        ->capture_default_str();
    cmd->add_option("--strategy", f.strategy, "Small eigenproblem route")
        ->check(CLI::IsMember({"gram", "svd"}))
        ->capture_default_str();
}

Config make_config(const RunFlags& f, const DenseMatrix& a, unsigned threads) {
    Config cfg;
    cfg.k = f.k;
    cfg.l = f.l;
    cfg.max_iterations = f.iters;
    cfg.epsilon = f.epsilon;
    cfg.seed = f.seed;
    cfg.threads = threads;
    cfg.strategy = f.strategy == "svd" ? UpdateStrategy::small_svd : UpdateStrategy::gram_eig;
    if (f.orientation == "rows") cfg.orientation = Orientation::rows;
    else if (f.orientation == "cols") cfg.orientation = Orientation::columns;
    else cfg.orientation = choose_orientation(a.rows(), a.cols());
    const bool rows = cfg.orientation == Orientation::rows;
    validate(cfg, rows ? a.cols() : a.rows(), rows ? a.rows() : a.cols());
    return cfg;
}

struct TimedRun {
    RunResult result;
    double seconds = 0.0;
};

TimedRun timed_run(const DenseMatrix& a, const Config& cfg, const std::string& sampler_name) {
    const auto t0 = clock::now();
    Sampler sampler = make_sampler(sampler_name, a, cfg.orientation, cfg.seed);
    TimedRun r{run(a, cfg, sampler), 0.0};
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return r;
}

// ||A - A_k||^2 / ||A||^2 from the exact singular values.
double optimum_relative_error(const SvdResult& svd, double a_norm_sq, std::size_t k) {
    if (a_norm_sq == 0.0) return 0.0;
    double tail = 0.0;
    for (std::size_t q = k; q < svd.rank(); ++q) tail += svd.singular_values[q] * svd.singular_values[q];
    return tail / a_norm_sq;
}

ojson vectors_json(const DenseMatrix& cols, std::size_t count) {
    ojson arr = ojson::array();
    for (std::size_t c = 0; c < count; ++c) arr.push_back(cols.column(c));
    return arr;
}

std::string fmt(double v, int precision = 6) {
    std::ostringstream ss;
    ss << std::setprecision(precision) << v;
    return ss.str();
}

int cmd_approximate(const InputFlags& in, const RunFlags& rf, const std::string& trace_path,
                    const std::string& trace_format, bool trace_timing,
                    const std::string& factors_out, const std::string& triplets_out,
                    std::ostream& out) {
    const DenseMatrix a = read_matrix(in.path, in.format);
    const Config cfg = make_config(rf, a, in.threads);
    const TimedRun tr = timed_run(a, cfg, rf.sampler);
    const RunResult& res = tr.result;
    const IterationRecord& last = res.trace.records.back();

    if (!trace_path.empty()) {
        write_trace(res.trace, trace_path, trace_format == "csv" ? TraceFormat::csv : TraceFormat::json,
                    trace_timing);
    }
    if (!factors_out.empty()) write_factors(res.state, factors_out);
    if (!triplets_out.empty()) {
        const SingularTripletEstimates est = triplet_estimates(res.state);
        ojson j;
        j["sigma"] = est.sigma;
        j["u"] = vectors_json(est.u, est.sigma.size());
        j["v"] = vectors_json(est.v, est.sigma.size());
        j["degenerate"] = est.degenerate;
        write_file_atomic(triplets_out, j.dump(2) + "\n");
    }

    out << "orientation: " << to_string(cfg.orientation) << "\n"
        << "iterations: " << res.trace.stop_iteration << " (" << res.trace.stop_reason << ")\n"
        << "sum_lambda: " << format_double(last.norm_b_sq) << "\n"
        << "relative_error: " << format_double(last.relative_error) << "\n"
        << "ratio_prev: " << format_double(last.improvement_ratio) << "\n"
        << "ratio_initial: " << format_double(last.ratio_to_initial) << "\n"
        << "time_seconds: " << fmt(tr.seconds) << "\n";
    return kOk;
}

int cmd_svd(const InputFlags& in, std::size_t top, const std::string& out_path, std::ostream& out) {
    const DenseMatrix a = read_matrix(in.path, in.format);
    const SvdResult svd = svd_oracle(a);
    const std::size_t shown = top == 0 ? svd.rank() : std::min(top, svd.rank());
    out << "rank " << svd.rank() << "\n";
    for (std::size_t i = 0; i < shown; ++i) out << "sigma_" << i + 1 << " " << format_double(svd.singular_values[i]) << "\n";
    if (!out_path.empty()) {
        ojson j;
        j["rank"] = svd.rank();
        j["singular_values"] =
            std::vector<double>(svd.singular_values.begin(), svd.singular_values.begin() + shown);
        j["u"] = vectors_json(svd.left, shown);
        j["v"] = vectors_json(svd.right, shown);
        write_file_atomic(out_path, j.dump(2) + "\n");
    }
    return kOk;
}

int cmd_compare(const InputFlags& in, RunFlags rf, const std::string& seeds, std::ostream& out) {
    const DenseMatrix a = read_matrix(in.path, in.format);
    const SvdResult svd = svd_oracle(a);
    const double a_norm_sq = frobenius_norm_sq(a);
    const double optimum = optimum_relative_error(svd, a_norm_sq, rf.k);

    std::vector<unsigned long long> seed_list =
        seeds.empty() ? std::vector<unsigned long long>{rf.seed} : parse_seed_list(seeds);
    std::vector<double> ratios;
    out << "optimum_relative_error " << format_double(optimum) << "\n";
    out << "seed achieved optimum ratio iterations\n";
    for (auto s : seed_list) {
        rf.seed = s;
        const Config cfg = make_config(rf, a, in.threads);
        const TimedRun tr = timed_run(a, cfg, rf.sampler);
        const double achieved = tr.result.trace.records.back().relative_error;
        const double ratio = re_ratio(achieved, optimum);
        ratios.push_back(ratio);
        out << s << " " << format_double(achieved) << " " << format_double(optimum) << " "
            << format_double(ratio) << " " << tr.result.trace.stop_iteration << "\n";
    }
    if (ratios.size() > 1) {
        const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / ratios.size();
        out << "ratio_mean " << format_double(mean) << "\n"
            << "ratio_min " << format_double(*std::min_element(ratios.begin(), ratios.end())) << "\n"
            << "ratio_max " << format_double(*std::max_element(ratios.begin(), ratios.end())) << "\n";
    }
    return kOk;
}

int cmd_bench(const InputFlags& in, const RunFlags& rf, double target_ratio, std::string label,
              const std::string& report_path, std::ostream& out) {
    const DenseMatrix a = read_matrix(in.path, in.format);
    Config cfg = make_config(rf, a, in.threads);
    if (label.empty()) label = std::filesystem::path(in.path).stem().string();

    auto t0 = clock::now();
    const SvdResult svd = svd_oracle(a);
    const double time_oracle = std::chrono::duration<double>(clock::now() - t0).count();
    const double a_norm_sq = frobenius_norm_sq(a);
    const double optimum = optimum_relative_error(svd, a_norm_sq, rf.k);

    cfg.target_relative_error = std::max(target_ratio * optimum, kZeroRelativeError);
    const TimedRun tr = timed_run(a, cfg, rf.sampler);
    const IterationRecord& last = tr.result.trace.records.back();
    const double achieved = last.relative_error;
    const double ratio = re_ratio(achieved, optimum);
    const bool reached = achieved <= *cfg.target_relative_error;
    const double time_mc = std::max(tr.seconds, 1e-9);

    ojson j;
    j["dataset"] = label;
    j["m"] = a.rows();
    j["n"] = a.cols();
    j["k"] = rf.k;
    j["l"] = cfg.samples_per_iteration();
    j["target_ratio"] = target_ratio;
    j["reached"] = reached;
    j["time_mc"] = time_mc;
    j["time_oracle"] = time_oracle;
    j["speedup"] = time_oracle / time_mc;
    j["achieved_relative_error"] = achieved;
    j["optimum_relative_error"] = optimum;
    j["re_ratio"] = ratio;
    j["iterations"] = tr.result.trace.stop_iteration;
    j["samples_total"] = last.samples_total;
    j["flops_total"] = std::accumulate(
        tr.result.trace.records.begin(), tr.result.trace.records.end(), std::uint64_t{0},
        [](std::uint64_t s, const IterationRecord& r) { return s + r.flops.total(); });
    if (!report_path.empty()) write_file_atomic(report_path, j.dump(2) + "\n");

    out << std::left << std::setw(16) << "dataset" << std::setw(12) << "size" << std::setw(6) << "k"
        << std::setw(12) << "speedup" << std::setw(12) << "re_ratio" << std::setw(7) << "iters"
        << "reached\n";
    out << std::setw(16) << label << std::setw(12) << (std::to_string(a.rows()) + "x" + std::to_string(a.cols()))
        << std::setw(6) << rf.k << std::setw(12) << fmt(time_oracle / time_mc, 4) << std::setw(12)
        << fmt(ratio, 6) << std::setw(7) << tr.result.trace.stop_iteration << (reached ? "yes" : "no")
        << "\n";
    out << j.dump() << "\n";
    return kOk;
}

}  // namespace

double re_ratio(double achieved, double optimum) {
    if (optimum <= kZeroRelativeError) {
        return achieved <= kZeroRelativeError ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return achieved / optimum;
}

std::vector<unsigned long long> parse_seed_list(const std::string& spec) {
    std::vector<unsigned long long> seeds;
    auto num = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty() || s[0] == '-') throw InvalidArgument("bad seed '" + s + "'");
        return v;
    };
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const auto lo = num(spec.substr(0, dots));
        const auto hi = num(spec.substr(dots + 2));
        if (hi < lo) throw InvalidArgument("empty seed range '" + spec + "'");
        if (hi - lo >= 100000) throw InvalidArgument("seed range too large");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        seeds.push_back(num(spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return seeds;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Iterative Monte-Carlo rank-k matrix approximation", "lowrank"};
    app.require_subcommand(1);

    InputFlags in;
    RunFlags rf;

    auto* approx = app.add_subcommand("approximate", "Run the Monte-Carlo approximation");
    add_input_flags(approx, in);
    add_run_flags(approx, rf, true);
    std::string trace_path, trace_format = "json", factors_out, triplets_out;
    bool trace_timing = false;
    approx->add_option("--trace", trace_path, "Write the convergence trace here");
    approx->add_option("--trace-format", trace_format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    approx->add_flag("--trace-timing", trace_timing, "Include wall-clock times in the trace");
    approx->add_option("--factors-out", factors_out, "Write the X/Y factors here");
    approx->add_option("--triplets-out", triplets_out, "Write singular triplet estimates here (JSON)");

    auto* svd = app.add_subcommand("svd", "Exact SVD of a desk-scale matrix");
    InputFlags svd_in;
    std::size_t top = 0;
    std::string svd_out;
    add_input_flags(svd, svd_in);
    svd->add_option("--top", top, "Print only the leading singular values");
    svd->add_option("--out", svd_out, "Write triplets here (JSON)");

    auto* compare = app.add_subcommand("compare", "Achieved vs optimal relative error");
    InputFlags cmp_in;
    RunFlags cmp_rf;
    std::string seeds;
    add_input_flags(compare, cmp_in);
    add_run_flags(compare, cmp_rf, true);
    compare->add_option("--seeds", seeds, "Seed range a..b or list a,b,c");

    auto* bench = app.add_subcommand("bench", "Time the approximation against the exact SVD");
    InputFlags bench_in;
    RunFlags bench_rf;
    double target_ratio = 2.0;
    std::string label, report;
    add_input_flags(bench, bench_in);
    add_run_flags(bench, bench_rf, true);
    bench->add_option("--target-ratio", target_ratio, "Stop once relative error <= ratio * optimum")
        ->check(CLI::Range(1.0, 1e12))
        ->capture_default_str();
    bench->add_option("--label", label, "Dataset label (default: input file stem)");
    bench->add_option("--report", report, "Write the report here (JSON)");

    std::vector<const char*> argv{"lowrank"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadFlags;
    }

    try {
        if (*approx) {
            return cmd_approximate(in, rf, trace_path, trace_format, trace_timing, factors_out,
                                   triplets_out, out);
        }
        if (*svd) return cmd_svd(svd_in, top, svd_out, out);
        if (*compare) return cmd_compare(cmp_in, cmp_rf, seeds, out);
        if (*bench) return cmd_bench(bench_in, bench_rf, target_ratio, label, report, out);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kBadFlags;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const CapExceeded& e) {
        err << "refused: " << e.what() << "\n";
        return kOracleRefused;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
    return kBadFlags;
}

}  // namespace lowrank::cli
