#include "lowrank/errors.hpp"
#include "lowrank/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace lowrank {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t j = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (j < i) out.push_back(s.substr(j, i - j));
    }
    return out;
}

// Parses a complete token as a finite double; `where` locates the error.
double parse_number(std::string_view tok, const std::string& where) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw IoError(where + ": not a number: '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v)) throw IoError(where + ": non-finite value '" + std::string(tok) + "'");
    return v;
}

std::size_t parse_count(std::string_view tok, const std::string& where) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw IoError(where + ": expected a non-negative integer, got '" + std::string(tok) + "'");
    }
    return v;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path + ": read failed");
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path + ": cannot open for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError(path + ": write failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(path + ": cannot move temporary file into place");
    }
}

DenseMatrix parse_matrix_csv(const std::string& text, const std::string& source) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw IoError(source + ": empty file");

    std::size_t cols = 0;
    std::vector<double> data;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::string where = source + ":" + std::to_string(li + 1);
        if (trim(lines[li]).empty()) throw IoError(where + ": empty line");
        std::size_t count = 0;
        std::size_t start = 0;
        const std::string_view line = lines[li];
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view field =
                line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            data.push_back(parse_number(field, where + " field " + std::to_string(count + 1)));
            ++count;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (li == 0) {
            cols = count;
        } else if (count != cols) {
            throw IoError(where + ": ragged row, expected " + std::to_string(cols) + " fields, found " +
                          std::to_string(count));
        }
    }
    return DenseMatrix(lines.size(), cols, std::move(data));
}

DenseMatrix read_matrix_csv(const std::string& path) { return parse_matrix_csv(read_file(path), path); }

void write_matrix_csv(const DenseMatrix& a, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) out += ',';
            out += format_double(a(i, j));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

DenseMatrix parse_matrix_market(const std::string& text, const std::string& source) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw IoError(source + ": empty file");

    const auto header = split_ws(lines[0]);
    if (header.size() != 5 || lower(header[0]) != "%%matrixmarket" || lower(header[1]) != "matrix") {
        throw IoError(source + ":1: bad MatrixMarket header");
    }
    const std::string layout = lower(header[2]);
    const std::string field = lower(header[3]);
    const std::string symmetry = lower(header[4]);
    if (layout != "array" && layout != "coordinate")
        throw IoError(source + ":1: unknown layout '" + layout + "'");
    if (field != "real" && field != "integer" && field != "double")
        throw IoError(source + ":1: unsupported field '" + field + "'");
    if (symmetry != "general") throw IoError(source + ":1: unsupported symmetry '" + symmetry + "'");

    std::size_t li = 1;
    auto next_data_line = [&]() -> std::string_view {
        while (li < lines.size()) {
            const std::string_view l = trim(lines[li++]);
            if (!l.empty() && l.front() != '%') return l;
        }
        return {};
    };

    const auto size_tok = split_ws(next_data_line());
    const std::string size_where = source + ":" + std::to_string(li);
    const bool coordinate = layout == "coordinate";
    if (size_tok.size() != (coordinate ? 3u : 2u)) throw IoError(size_where + ": bad size line");
    const std::size_t m = parse_count(size_tok[0], size_where);
    const std::size_t n = parse_count(size_tok[1], size_where);

    DenseMatrix a(m, n);
    if (!coordinate) {
        for (std::size_t e = 0; e < m * n; ++e) {
            const std::string_view l = next_data_line();
            if (l.empty()) throw IoError(source + ": truncated, expected " + std::to_string(m * n) + " values");
            a(e % m, e / m) = parse_number(l, source + ":" + std::to_string(li));
        }
    } else {
        const std::size_t nnz = parse_count(size_tok[2], size_where);
        std::vector<bool> seen(m * n, false);
        for (std::size_t e = 0; e < nnz; ++e) {
            const std::string_view l = next_data_line();
            const std::string where = source + ":" + std::to_string(li);
            if (l.empty()) throw IoError(source + ": truncated, expected " + std::to_string(nnz) + " entries");
            const auto tok = split_ws(l);
            if (tok.size() != 3) throw IoError(where + ": expected 'row col value'");
            const std::size_t i = parse_count(tok[0], where);
            const std::size_t j = parse_count(tok[1], where);
            if (i < 1 || i > m || j < 1 || j > n) {
                throw IoError(where + ": index (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") out of bounds");
            }
            if (seen[(i - 1) * n + (j - 1)]) {
                throw IoError(where + ": duplicate entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            seen[(i - 1) * n + (j - 1)] = true;
            a(i - 1, j - 1) = parse_number(tok[2], where);
        }
    }
    if (!next_data_line().empty()) throw IoError(source + ":" + std::to_string(li) + ": trailing data");
    return a;
}

DenseMatrix read_matrix_market(const std::string& path) {
    return parse_matrix_market(read_file(path), path);
}

void write_matrix_market(const DenseMatrix& a, const std::string& path) {
    std::string out = "%%MatrixMarket matrix array real general\n";
    out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + "\n";
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) out += format_double(a(i, j)) + "\n";
    write_file_atomic(path, out);
}

DenseMatrix parse_pgm(const std::string& bytes, const std::string& source) {
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto token = [&]() -> std::string_view {
        skip_space_and_comments();
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#')
            ++pos;
        return std::string_view(bytes).substr(start, pos - start);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
        throw IoError(source + ": bad magic, expected P2 or P5");
    }
    const bool binary = bytes[1] == '5';
    pos = 2;
    const std::string where = source + ": header";
    const std::size_t width = parse_count(token(), where);
    const std::size_t height = parse_count(token(), where);
    const std::size_t maxval = parse_count(token(), where);
    if (width == 0 || height == 0) throw IoError(source + ": zero image dimension");
    if (maxval == 0) throw IoError(source + ": maxval must be positive");
    if (maxval > 255) throw IoError(source + ": 16-bit PGM (maxval > 255) is not supported");

    std::vector<double> px(width * height);
    if (binary) {
        if (pos >= bytes.size()) throw IoError(source + ": truncated payload");
        ++pos;  // single whitespace byte after maxval
        if (bytes.size() - pos < px.size()) {
            throw IoError(source + ": truncated payload, expected " + std::to_string(px.size()) +
                          " bytes, found " + std::to_string(bytes.size() - pos));
        }
        for (std::size_t i = 0; i < px.size(); ++i) {
            const auto v = static_cast<unsigned char>(bytes[pos + i]);
            if (v > maxval) throw IoError(source + ": pixel " + std::to_string(i) + " exceeds maxval");
            px[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < px.size(); ++i) {
            const std::string_view t = token();
            if (t.empty()) {
                throw IoError(source + ": truncated payload, expected " + std::to_string(px.size()) +
                              " pixels, found " + std::to_string(i));
            }
            const std::size_t v = parse_count(t, source + ": pixel " + std::to_string(i));
            if (v > maxval) throw IoError(source + ": pixel " + std::to_string(i) + " exceeds maxval");
            px[i] = static_cast<double>(v);
        }
    }
    return DenseMatrix(height, width, std::move(px));
}

DenseMatrix read_pgm(const std::string& path) { return parse_pgm(read_file(path), path); }

void write_pgm(const DenseMatrix& img, const std::string& path, bool binary) {
    std::string out = std::string(binary ? "P5" : "P2") + "\n" + std::to_string(img.cols()) + " " +
                      std::to_string(img.rows()) + "\n255\n";
    for (std::size_t i = 0; i < img.rows(); ++i) {
        for (std::size_t j = 0; j < img.cols(); ++j) {
            const int v = static_cast<int>(std::clamp(std::round(img(i, j)), 0.0, 255.0));
            if (binary) {
                out += static_cast<char>(static_cast<unsigned char>(v));
            } else {
                if (j) out += ' ';
                out += std::to_string(v);
            }
        }
        if (!binary) out += '\n';
    }
    write_file_atomic(path, out);
}

DenseMatrix read_matrix(const std::string& path, const std::string& format) {
    if (format == "csv") return read_matrix_csv(path);
    if (format == "mm") return read_matrix_market(path);
    if (format == "pgm") return read_pgm(path);
    throw InvalidArgument("unknown matrix format '" + format + "'");
}

}  // namespace lowrank
