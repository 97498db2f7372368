#include "lowrank/errors.hpp"
#include "lowrank/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace lowrank {

static_assert(std::endian::native == std::endian::little,
              "factor files are little-endian; add byte swapping for this host");

namespace {

constexpr char kMagic[8] = {'L', 'R', 'F', 'A', 'C', 'T', '0', '1'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
    T v;
    std::memcpy(&v, in.data() + offset, sizeof(T));
    return v;
}

}  // namespace

std::string encode_factors(const ApproxState& state) {
    const std::uint64_t m = state.x.dim();
    const std::uint64_t n = state.y.rows();
    const std::uint64_t k = state.rank();

    std::string payload;
    payload.reserve((k * (m + n) + k) * sizeof(double));
    for (double v : state.x.data()) put(payload, v);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < n; ++r) put(payload, state.y(r, c));
    for (double v : state.lambdas) put(payload, v);

    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kFactorFormatVersion);
    put<std::uint32_t>(out, state.orientation == Orientation::rows ? 1u : 0u);
    put<std::uint64_t>(out, m);
    put<std::uint64_t>(out, n);
    put<std::uint64_t>(out, k);
    put<std::uint64_t>(out, state.iteration);
    put<std::uint64_t>(out, fnv1a(payload.data(), payload.size()));
    out += payload;
    return out;
}

ApproxState decode_factors(const std::string& bytes, const std::string& source) {
    if (bytes.size() < kFactorHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw IoError(source + ": not a factor file");
    }
    const auto version = get<std::uint32_t>(bytes, 8);
    if (version != kFactorFormatVersion) {
        throw IoError(source + ": factor format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFactorFormatVersion) + ")");
    }
    const auto orientation = get<std::uint32_t>(bytes, 12);
    const auto m = get<std::uint64_t>(bytes, 16);
    const auto n = get<std::uint64_t>(bytes, 24);
    const auto k = get<std::uint64_t>(bytes, 32);
    const auto iteration = get<std::uint64_t>(bytes, 40);
    const auto checksum = get<std::uint64_t>(bytes, 48);
    if (orientation > 1) throw IoError(source + ": bad orientation field");
    if (k > m || (m > 0 && k > (bytes.size() / sizeof(double)) / (m + n + 1))) {
        throw IoError(source + ": inconsistent dimensions in header");
    }
    const std::size_t expected = kFactorHeaderBytes + (k * (m + n) + k) * sizeof(double);
    if (bytes.size() != expected) {
        throw IoError(source + ": payload is " + std::to_string(bytes.size() - kFactorHeaderBytes) +
                      " bytes, header implies " + std::to_string(expected - kFactorHeaderBytes));
    }
    if (fnv1a(bytes.data() + kFactorHeaderBytes, bytes.size() - kFactorHeaderBytes) != checksum) {
        throw IoError(source + ": checksum mismatch");
    }

    std::size_t off = kFactorHeaderBytes;
    auto next = [&] {
        const double v = get<double>(bytes, off);
        off += sizeof(double);
        if (!std::isfinite(v)) {
            throw IoError(source + ": non-finite value at byte offset " + std::to_string(off - sizeof(double)));
        }
        return v;
    };
    std::vector<double> xdata(k * m);
    for (double& v : xdata) v = next();
    ApproxState s;
    s.orientation = orientation == 1 ? Orientation::rows : Orientation::columns;
    s.iteration = iteration;
    s.x = OrthoBasis(m, std::move(xdata));
    s.y = DenseMatrix(n, k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < n; ++r) s.y(r, c) = next();
    s.lambdas.resize(k);
    for (double& v : s.lambdas) v = next();
    return s;
}

void write_factors(const ApproxState& state, const std::string& path) {
    write_file_atomic(path, encode_factors(state));
}

ApproxState read_factors(const std::string& path) { return decode_factors(read_file(path), path); }

}  // namespace lowrank
