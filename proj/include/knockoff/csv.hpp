#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "knockoff/model.hpp"

namespace knockoff::csv {

/// Fixed 12-significant-digit formatting used for every numeric CSV cell.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    const std::string text(trim(cell));
    auto fail = [&](const std::string& why) -> double {
        throw ParseError("malformed cell at row " + std::to_string(row) + ", column " + std::to_string(col) +
                             ": " + why,
                         row, col);
    };
    if (text.empty()) return fail("empty value");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) return fail("'" + text + "' is not a number");
    if (errno == ERANGE || !std::isfinite(v)) return fail("'" + text + "' is out of range");
    return v;
}

}  // namespace detail

/// Parse headerless numeric CSV. Blank lines are skipped; ragged rows and non-numeric
/// cells raise ParseError with 1-based row/column.
inline MatrixXd parse_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        std::size_t col = 1;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view cell(line.data() + start,
                                        (comma == std::string::npos ? line.size() : comma) - start);
            row.push_back(detail::parse_cell(cell, lineno, col));
            if (comma == std::string::npos) break;
            start = comma + 1;
            ++col;
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw ParseError("row " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                                 " columns, expected " + std::to_string(width),
                             lineno, row.size());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows", 0, 0);
    MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return m;
}

inline MatrixXd read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return parse_matrix(in);
}

inline Design read_design(const std::filesystem::path& path) { return Design(read_matrix(path)); }

inline Response read_response(const std::filesystem::path& path) {
    MatrixXd m = read_matrix(path);
    if (m.cols() != 1)
        throw ParseError(path.string() + ": response must have a single column, found " + std::to_string(m.cols()),
                         1, static_cast<std::size_t>(m.cols()));
    return Response(m.col(0));
}

inline std::string matrix_to_string(const MatrixXd& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_number(m(i, j));
        }
        out += '\n';
    }
    return out;
}

/// Write through a temporary sibling and rename, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw ConfigError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ConfigError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

/// Row-oriented builder for CSV tables with a header.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    Table& row() {
        rows_.emplace_back();
        return *this;
    }
    Table& add(const std::string& s) {
        rows_.back().push_back(s);
        return *this;
    }
    Table& add(double v) { return add(format_number(v)); }
    Table& add(long long v) { return add(std::to_string(v)); }
    Table& add(int v) { return add(std::to_string(v)); }
    Table& add(std::size_t v) { return add(std::to_string(v)); }

    std::string str() const {
        std::ostringstream os;
        write_line(os, header_);
        for (const auto& r : rows_) write_line(os, r);
        return os.str();
    }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace knockoff::csv
