#include "lowrank/errors.hpp"
#include "lowrank/io.hpp"

#include <json.hpp>

namespace lowrank {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kTraceFormatName = "lowrank-trace";
constexpr int kTraceVersion = 1;

ojson flops_to_json(const FlopCounters& f) {
    return ojson{{"mgs", f.mgs},   {"product", f.product},   {"gram", f.gram},
                 {"eigen", f.eigen}, {"rotation", f.rotation}, {"total", f.total()}};
}

}  // namespace

std::string format_trace_json(const ConvergenceTrace& trace, bool include_timing) {
    ojson j;
    j["format"] = kTraceFormatName;
    j["version"] = kTraceVersion;
    j["config"] = ojson{{"k", trace.k},
                        {"l", trace.l},
                        {"max_iterations", trace.max_iterations},
                        {"epsilon", trace.epsilon},
                        {"seed", trace.seed},
                        {"sampler", trace.sampler},
                        {"strategy", trace.strategy},
                        {"orientation", trace.orientation}};
    j["m"] = trace.m;
    j["n"] = trace.n;
    j["a_norm_sq"] = trace.a_norm_sq;
    j["optimum_relative_error"] =
        trace.optimum_relative_error ? ojson(*trace.optimum_relative_error) : ojson(nullptr);
    j["stop_iteration"] = trace.stop_iteration;
    j["stop_reason"] = trace.stop_reason;
    ojson records = ojson::array();
    for (const auto& r : trace.records) {
        ojson o{{"iteration", r.iteration},
                {"samples_total", r.samples_total},
                {"relative_error", r.relative_error},
                {"norm_b_sq", r.norm_b_sq},
                {"residual_sq", r.residual_sq},
                {"improvement_ratio", r.improvement_ratio},
                {"ratio_to_initial", r.ratio_to_initial},
                {"basis_size", r.basis_size},
                {"no_op", r.no_op},
                {"indices", r.indices},
                {"flops", flops_to_json(r.flops)}};
        if (include_timing) o["wall_time"] = r.wall_time;
        records.push_back(std::move(o));
    }
    j["records"] = std::move(records);
    return j.dump(2) + "\n";
}

ConvergenceTrace parse_trace_json(const std::string& text) {
    ConvergenceTrace t;
    try {
        const ojson j = ojson::parse(text);
        if (j.at("format").get<std::string>() != kTraceFormatName)
            throw IoError("trace: unexpected format tag");
        if (j.at("version").get<int>() != kTraceVersion) throw IoError("trace: unsupported version");
        const ojson& c = j.at("config");
        t.k = c.at("k").get<std::size_t>();
        t.l = c.at("l").get<std::size_t>();
        t.max_iterations = c.at("max_iterations").get<std::size_t>();
        t.epsilon = c.at("epsilon").get<double>();
        t.seed = c.at("seed").get<std::uint64_t>();
        t.sampler = c.at("sampler").get<std::string>();
        t.strategy = c.at("strategy").get<std::string>();
        t.orientation = c.at("orientation").get<std::string>();
        t.m = j.at("m").get<std::size_t>();
        t.n = j.at("n").get<std::size_t>();
        t.a_norm_sq = j.at("a_norm_sq").get<double>();
        if (!j.at("optimum_relative_error").is_null())
            t.optimum_relative_error = j.at("optimum_relative_error").get<double>();
        t.stop_iteration = j.at("stop_iteration").get<std::size_t>();
        t.stop_reason = j.at("stop_reason").get<std::string>();
        for (const auto& o : j.at("records")) {
            IterationRecord r;
            r.iteration = o.at("iteration").get<std::size_t>();
            r.samples_total = o.at("samples_total").get<std::size_t>();
            r.relative_error = o.at("relative_error").get<double>();
            r.norm_b_sq = o.at("norm_b_sq").get<double>();
            r.residual_sq = o.at("residual_sq").get<double>();
            r.improvement_ratio = o.at("improvement_ratio").get<double>();
            r.ratio_to_initial = o.at("ratio_to_initial").get<double>();
            r.basis_size = o.at("basis_size").get<std::size_t>();
            r.no_op = o.at("no_op").get<bool>();
            r.indices = o.at("indices").get<std::vector<std::size_t>>();
            const ojson& f = o.at("flops");
            r.flops.mgs = f.at("mgs").get<std::uint64_t>();
            r.flops.product = f.at("product").get<std::uint64_t>();
            r.flops.gram = f.at("gram").get<std::uint64_t>();
            r.flops.eigen = f.at("eigen").get<std::uint64_t>();
            r.flops.rotation = f.at("rotation").get<std::uint64_t>();
            if (o.contains("wall_time")) r.wall_time = o.at("wall_time").get<double>();
            t.records.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("trace: malformed JSON: ") + e.what());
    }
    return t;
}

std::string format_trace_csv(const ConvergenceTrace& trace, bool include_timing) {
    std::string out =
        "iteration,samples_total,relative_error,norm_b_sq,residual_sq,improvement_ratio,"
        "ratio_to_initial,basis_size,no_op,flops_mgs,flops_product,flops_gram,flops_eigen,"
        "flops_rotation,flops_total,indices";
    if (include_timing) out += ",wall_time";
    out += '\n';
    for (const auto& r : trace.records) {
        std::string idx;
        for (std::size_t i = 0; i < r.indices.size(); ++i) {
            if (i) idx += ';';
            idx += std::to_string(r.indices[i]);
        }
        out += std::to_string(r.iteration) + ',' + std::to_string(r.samples_total) + ',' +
               format_double(r.relative_error) + ',' + format_double(r.norm_b_sq) + ',' +
               format_double(r.residual_sq) + ',' + format_double(r.improvement_ratio) + ',' +
               format_double(r.ratio_to_initial) + ',' + std::to_string(r.basis_size) + ',' +
               (r.no_op ? "1" : "0") + ',' + std::to_string(r.flops.mgs) + ',' +
               std::to_string(r.flops.product) + ',' + std::to_string(r.flops.gram) + ',' +
               std::to_string(r.flops.eigen) + ',' + std::to_string(r.flops.rotation) + ',' +
               std::to_string(r.flops.total()) + ',' + idx;
        if (include_timing) out += ',' + format_double(r.wall_time);
        out += '\n';
    }
    return out;
}

void write_trace(const ConvergenceTrace& trace, const std::string& path, TraceFormat format,
                 bool include_timing) {
    write_file_atomic(path, format == TraceFormat::json ? format_trace_json(trace, include_timing)
                                                        : format_trace_csv(trace, include_timing));
}

ConvergenceTrace read_trace_json(const std::string& path) {
    try {
        return parse_trace_json(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace lowrank
