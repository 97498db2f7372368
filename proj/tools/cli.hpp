#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lowrank::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kBadFlags = 2,
    kIoFailure = 3,
    kNumericalFailure = 4,
    kOracleRefused = 5,
};

/// Entry point of the `lowrank` tool. Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Relative errors at or below this are treated as zero when forming ratios.
inline constexpr double kZeroRelativeError = 1e-12;

/// achieved / optimum, with 0/0 (both below kZeroRelativeError) defined as 1.
double re_ratio(double achieved, double optimum);

/// Parses "a..b" (inclusive) or "a,b,c".
std::vector<unsigned long long> parse_seed_list(const std::string& spec);

}  // namespace lowrank::cli
