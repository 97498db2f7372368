#pragma once

// File formats. Readers throw IoError with the file name and, where it makes
// sense, the line or entry that failed. Writers go through a temporary file
// and rename it into place, so a failed write never leaves a partial file.

#include "lowrank/engine.hpp"
#include "lowrank/matrix.hpp"

#include <cstdint>
#include <string>

namespace lowrank {

/// One matrix row per line, comma-separated.
DenseMatrix read_matrix_csv(const std::string& path);
DenseMatrix parse_matrix_csv(const std::string& text, const std::string& source = "<string>");
/// Values are written with 17 significant digits, which round-trips doubles.
void write_matrix_csv(const DenseMatrix& a, const std::string& path);

/// `%%MatrixMarket matrix {array|coordinate} {real|integer} general`.
/// Symmetric, skew-symmetric, hermitian, complex and pattern files are rejected.
DenseMatrix read_matrix_market(const std::string& path);
DenseMatrix parse_matrix_market(const std::string& text, const std::string& source = "<string>");
/// Array (column-major) layout.
void write_matrix_market(const DenseMatrix& a, const std::string& path);

/// P2 or P5 with maxval <= 255. Pixel values become doubles in [0, maxval].
DenseMatrix read_pgm(const std::string& path);
DenseMatrix parse_pgm(const std::string& bytes, const std::string& source = "<string>");
/// Values are rounded and clamped to [0, 255].
void write_pgm(const DenseMatrix& img, const std::string& path, bool binary);

/// Dispatches on "csv", "mm" or "pgm".
DenseMatrix read_matrix(const std::string& path, const std::string& format);

enum class TraceFormat { json, csv };

/// `include_timing` adds per-iteration wall_time; leave it off when traces
/// must be byte-identical across runs.
std::string format_trace_json(const ConvergenceTrace& trace, bool include_timing = false);
std::string format_trace_csv(const ConvergenceTrace& trace, bool include_timing = false);
ConvergenceTrace parse_trace_json(const std::string& text);
void write_trace(const ConvergenceTrace& trace, const std::string& path, TraceFormat format,
                 bool include_timing = false);
ConvergenceTrace read_trace_json(const std::string& path);

/// Binary factor file, little-endian:
///
///   offset  size  field
///        0     8  magic "LRFACT01"
///        8     4  format version (uint32, currently 1)
///       12     4  orientation (uint32, 0 = columns, 1 = rows)
///       16     8  m: dimension of the x vectors (uint64)
///       24     8  n: dimension of the y vectors (uint64)
///       32     8  k (uint64)
///       40     8  iteration (uint64)
///       48     8  FNV-1a 64 checksum of the payload
///       56        payload: x_1..x_k (k*m doubles), y_1..y_k (k*n doubles),
///                 lambda_1..lambda_k (k doubles)
inline constexpr std::uint32_t kFactorFormatVersion = 1;
inline constexpr std::size_t kFactorHeaderBytes = 56;

std::string encode_factors(const ApproxState& state);
ApproxState decode_factors(const std::string& bytes, const std::string& source = "<string>");
void write_factors(const ApproxState& state, const std::string& path);
ApproxState read_factors(const std::string& path);

/// Reads a whole file; throws IoError.
std::string read_file(const std::string& path);
/// Writes through `path.tmp` + rename; throws IoError.
void write_file_atomic(const std::string& path, const std::string& contents);
/// printf("%.17g").
std::string format_double(double v);

}  // namespace lowrank
