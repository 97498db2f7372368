#include "lowrank/errors.hpp"
#include "lowrank/io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstring>
#include <functional>
#include <filesystem>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace lowrank;
using namespace lowrank::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("lowrank_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const IoError& e) {
        return e.what();
    }
    return "";
}

ConvergenceTrace small_trace(std::size_t records) {
    const DenseMatrix a = gaussian(40, 30, 5);
    Config cfg;
    cfg.k = 3;
    cfg.l = 2;
    cfg.max_iterations = records + 2;
    cfg.epsilon = 1e-12;
    Sampler s = Sampler::uniform_with_replacement(30, 3);
    ConvergenceTrace t = run(a, cfg, s).trace;
    REQUIRE(t.records.size() >= records);
    t.records.resize(records);
    for (auto& r : t.records) r.wall_time = 0.0;
    return t;
}

// Random PSD-free state with the given shape; lambdas are arbitrary doubles.
ApproxState random_state(std::size_t m, std::size_t n, std::size_t k, std::uint64_t seed) {
    ApproxState s;
    s.orientation = seed % 2 ? Orientation::rows : Orientation::columns;
    s.x = random_orthonormal(m, k, seed);
    s.y = gaussian(n, k, seed + 1);
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < k; ++i) s.lambdas.push_back(std::ldexp(static_cast<double>(gen() >> 11), -40));
    s.iteration = seed % 17;
    return s;
}

bool bit_equal(const ApproxState& a, const ApproxState& b) {
    auto same = [](std::span<const double> u, std::span<const double> v) {
        return u.size() == v.size() && std::memcmp(u.data(), v.data(), u.size() * sizeof(double)) == 0;
    };
    std::vector<double> xa, xb;
    for (std::size_t i = 0; i < a.x.size(); ++i) xa.insert(xa.end(), a.x.vector(i).begin(), a.x.vector(i).end());
    for (std::size_t i = 0; i < b.x.size(); ++i) xb.insert(xb.end(), b.x.vector(i).begin(), b.x.vector(i).end());
    return a.orientation == b.orientation && a.iteration == b.iteration && a.x.dim() == b.x.dim() &&
           a.y.rows() == b.y.rows() && a.y.cols() == b.y.cols() && same(xa, xb) && same(a.y.data(), b.y.data()) &&
           same(a.lambdas, b.lambdas);
}

}  // namespace

TEST_SUITE("csv") {
    TEST_CASE("basic parse") {
        CHECK(parse_matrix_csv("1,2\n3,4") == DenseMatrix::from_rows({{1, 2}, {3, 4}}));
        CHECK(parse_matrix_csv("1,2\r\n3,4\r\n\n") == DenseMatrix::from_rows({{1, 2}, {3, 4}}));
        CHECK(parse_matrix_csv(" -1.5e3 , 2\n") == DenseMatrix::from_rows({{-1500, 2}}));
    }

    TEST_CASE("errors are located") {
        CHECK(message_of([] { parse_matrix_csv("1,2\n3", "m.csv"); }).find("m.csv:2") != std::string::npos);
        CHECK(message_of([] { parse_matrix_csv("1,2\n3", "m.csv"); }).find("ragged") != std::string::npos);
        CHECK(message_of([] { parse_matrix_csv("1,x\n", "m.csv"); }).find("m.csv:1 field 2") != std::string::npos);
        CHECK(message_of([] { parse_matrix_csv("", "m.csv"); }).find("empty") != std::string::npos);
        CHECK(message_of([] { parse_matrix_csv("1,nan\n", "m.csv"); }).find("m.csv:1") != std::string::npos);
        CHECK_THROWS_AS(parse_matrix_csv("1,inf\n"), IoError);
        CHECK_THROWS_AS(parse_matrix_csv("1,\n"), IoError);
        CHECK_THROWS_AS(read_matrix_csv("/nonexistent/dir/m.csv"), IoError);
    }

    TEST_CASE("1000-line round trip is bit-exact") {
        TempDir dir;
        std::mt19937_64 gen(1);
        DenseMatrix a(1000, 7);
        for (double& v : a.data()) v = std::ldexp(static_cast<double>(gen() >> 11), static_cast<int>(gen() % 200) - 150) *
                                       (gen() % 2 ? 1.0 : -1.0);
        write_matrix_csv(a, dir.file("a.csv"));
        CHECK(read_matrix_csv(dir.file("a.csv")) == a);
        CHECK(!fs::exists(dir.file("a.csv.tmp")));
    }
}

TEST_SUITE("matrix market") {
    TEST_CASE("coordinate entries are 1-based and scattered") {
        const std::string text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n2 1 5.0\n";
        CHECK(parse_matrix_market(text) == DenseMatrix::from_rows({{0, 0}, {5, 0}}));
    }

    TEST_CASE("array layout is column-major") {
        const std::string text = "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n";
        CHECK(parse_matrix_market(text) == DenseMatrix::from_rows({{1, 2}, {3, 4}}));
        CHECK(parse_matrix_market("%%MatrixMarket matrix array integer general\n1 2\n7\n-3\n") ==
              DenseMatrix::from_rows({{7, -3}}));
    }

    TEST_CASE("rejections") {
        CHECK(message_of([] { parse_matrix_market("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n"); })
                  .find("unsupported symmetry") != std::string::npos);
        CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix array complex general\n1 1\n1 0\n"), IoError);
        CHECK_THROWS_AS(parse_matrix_market("MatrixMarket matrix array real general\n1 1\n1\n"), IoError);
        CHECK(message_of([] {
                  parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
              }).find("out of") != std::string::npos);
        CHECK(message_of([] {
                  parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 1 2\n");
              }).find("duplicate") != std::string::npos);
        CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1\n"), IoError);
        CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n"), IoError);
        CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\n1\n2\n"), IoError);
        CHECK_THROWS_AS(parse_matrix_market("%%MatrixMarket matrix array real general\n1 1\nnan\n"), IoError);
    }

    TEST_CASE("write then read") {
        TempDir dir;
        const DenseMatrix a = gaussian(9, 4, 3);
        write_matrix_market(a, dir.file("a.mtx"));
        CHECK(read_matrix_market(dir.file("a.mtx")) == a);
        CHECK(read_matrix(dir.file("a.mtx"), "mm") == a);
        CHECK_THROWS_AS(read_matrix(dir.file("a.mtx"), "xlsx"), InvalidArgument);
    }
}

TEST_SUITE("pgm") {
    TEST_CASE("P2 and P5 examples") {
        const DenseMatrix expect = DenseMatrix::from_rows({{0, 255}, {255, 0}});
        CHECK(parse_pgm("P2 2 2 255 0 255 255 0") == expect);
        CHECK(parse_pgm(std::string("P5\n2 2\n255\n\x00\xff\xff\x00", 15)) == expect);
        CHECK(parse_pgm("P2\n# a comment\n3 1\n# another\n9\n1 2 9\n") == DenseMatrix::from_rows({{1, 2, 9}}));
    }

    TEST_CASE("dual encodings parse identically") {
        TempDir dir;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 gen(seed);
            DenseMatrix img(1 + gen() % 30, 1 + gen() % 30);
            for (double& v : img.data()) v = static_cast<double>(gen() % 256);
            write_pgm(img, dir.file("a.pgm"), false);
            write_pgm(img, dir.file("b.pgm"), true);
            CHECK(read_pgm(dir.file("a.pgm")) == img);
            CHECK(read_pgm(dir.file("b.pgm")) == img);
        }
    }

    TEST_CASE("rejections") {
        CHECK(message_of([] { parse_pgm("P6 1 1 255 0 0 0"); }).find("magic") != std::string::npos);
        CHECK(message_of([] { parse_pgm("P2 2 2 255 0 1 2"); }).find("truncated") != std::string::npos);
        CHECK(message_of([] { parse_pgm(std::string("P5 2 2 255\n\x01\x02", 13)); }).find("truncated") !=
              std::string::npos);
        CHECK(message_of([] { parse_pgm("P2 1 1 65535 7"); }).find("16-bit") != std::string::npos);
        CHECK_THROWS_AS(parse_pgm("P2 1 1 9 10"), IoError);
        CHECK_THROWS_AS(parse_pgm("P2 0 1 9"), IoError);
    }
}

TEST_SUITE("trace") {
    TEST_CASE("empty trace gives a header-only CSV") {
        const std::string csv = format_trace_csv(small_trace(0));
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
        CHECK(csv.rfind("iteration,samples_total,relative_error", 0) == 0);
    }

    TEST_CASE("3-iteration trace gives 3 non-increasing rows") {
        const ConvergenceTrace t = small_trace(3);
        REQUIRE(t.records.size() == 3);
        std::istringstream in(format_trace_csv(t));
        std::string line;
        std::getline(in, line);
        std::vector<double> rel;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string field;
            std::getline(row, field, ',');
            std::getline(row, field, ',');
            std::getline(row, field, ',');
            rel.push_back(std::stod(field));
        }
        REQUIRE(rel.size() == 3);
        CHECK(rel[1] <= rel[0] + 1e-10);
        CHECK(rel[2] <= rel[1] + 1e-10);
    }

    TEST_CASE("JSON round trip is byte-identical") {
        TempDir dir;
        for (std::size_t records : {0u, 1u, 4u}) {
            ConvergenceTrace t = small_trace(records);
            if (records == 4) t.optimum_relative_error = 0.123456789;
            write_trace(t, dir.file("t.json"), TraceFormat::json);
            const ConvergenceTrace back = read_trace_json(dir.file("t.json"));
            CHECK(back == t);
            CHECK(format_trace_json(back) == read_file(dir.file("t.json")));
        }
    }

    TEST_CASE("timing is opt-in") {
        const ConvergenceTrace t = small_trace(2);
        CHECK(format_trace_json(t).find("wall_time") == std::string::npos);
        CHECK(format_trace_json(t, true).find("wall_time") != std::string::npos);
        CHECK(format_trace_csv(t, true).find("wall_time") != std::string::npos);
    }

    TEST_CASE("malformed JSON and unwritable paths") {
        CHECK_THROWS_AS(parse_trace_json("{"), IoError);
        CHECK_THROWS_AS(parse_trace_json("{\"format\":\"other\"}"), IoError);
        CHECK_THROWS_AS(write_trace(small_trace(1), "/nonexistent/dir/t.json", TraceFormat::json), IoError);
    }
}

TEST_SUITE("factors") {
    TEST_CASE("k = 0 is header-only") {
        ApproxState s;
        s.x = OrthoBasis(4);
        s.y = DenseMatrix(3, 0);
        const std::string bytes = encode_factors(s);
        CHECK(bytes.size() == kFactorHeaderBytes);
        CHECK(bytes.substr(0, 8) == "LRFACT01");
        CHECK(bit_equal(decode_factors(bytes), s));
    }

    TEST_CASE("100x50, k = 5: documented size") {
        const ApproxState s = random_state(100, 50, 5, 4);
        const std::string bytes = encode_factors(s);
        CHECK(bytes.size() == 5 * 150 * 8 + 5 * 8 + kFactorHeaderBytes);
        TempDir dir;
        write_factors(s, dir.file("f.bin"));
        CHECK(fs::file_size(dir.file("f.bin")) == bytes.size());
        CHECK(bit_equal(read_factors(dir.file("f.bin")), s));
    }

    TEST_CASE("bit-exact round trips") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const ApproxState s = random_state(3 + seed % 11, 2 + seed % 7, seed % 3, seed);
            CHECK(bit_equal(decode_factors(encode_factors(s)), s));
        }
    }

    TEST_CASE("version mismatch, checksum failure, truncation") {
        const std::string good = encode_factors(random_state(6, 4, 2, 1));
        std::string v = good;
        v[8] = 2;
        CHECK(message_of([&] { decode_factors(v); }).find("version") != std::string::npos);
        std::string c = good;
        c[kFactorHeaderBytes + 3] ^= 0x10;
        CHECK(message_of([&] { decode_factors(c); }).find("checksum") != std::string::npos);
        CHECK_THROWS_AS(decode_factors(good.substr(0, good.size() - 8)), IoError);
        CHECK_THROWS_AS(decode_factors(good.substr(0, 20)), IoError);
        std::string magic = good;
        magic[0] = 'X';
        CHECK_THROWS_AS(decode_factors(magic), IoError);
    }
}
