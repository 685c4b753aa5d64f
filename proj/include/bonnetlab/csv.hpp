#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bonnetlab/errors.hpp"
#include "bonnetlab/field.hpp"

namespace bonnetlab {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string grid_csv_header(const Grid2& g) {
    std::string s = "# grid n1=" + std::to_string(g.n1) + " n2=" + std::to_string(g.n2);
    s += " x1=[" + format_double(g.x1_min) + "," + format_double(g.x1_max) + "]";
    s += " x2=[" + format_double(g.x2_min) + "," + format_double(g.x2_max) + "]";
    return s;
}

/// Annotation for tensor-component dumps, e.g. "# component g11 s_power=2".
struct ComponentTag {
    std::string name;
    int s_power = 0;
};

inline void write_field_csv(std::ostream& out, const ScalarField2& field,
                            const std::optional<ComponentTag>& tag = std::nullopt) {
    const Grid2& g = field.grid();
    out << grid_csv_header(g) << "\n";
    if (tag) out << "# component " << tag->name << " s_power=" << tag->s_power << "\n";
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            out << i << "," << j << "," << format_double(field(i, j)) << "\n";
}

inline void write_field_csv(const std::string& path, const ScalarField2& field,
                            const std::optional<ComponentTag>& tag = std::nullopt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_field_csv(out, field, tag);
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace detail {

inline double parse_double(const std::string& text, const std::string& where) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw IoError("malformed number '" + text + "' in " + where);
    return v;
}

inline int parse_int(const std::string& text, const std::string& where) {
    int v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw IoError("malformed integer '" + text + "' in " + where);
    return v;
}

// Pulls "key=[a,b]" or "key=v" tokens out of the grid header line.
inline std::string header_token(const std::string& header, const std::string& key) {
    const std::string needle = key + "=";
    auto pos = header.find(needle);
    if (pos == std::string::npos) throw IoError("grid header missing '" + key + "'");
    pos += needle.size();
    auto end = header.find(' ', pos);
    if (end == std::string::npos) end = header.size();
    return header.substr(pos, end - pos);
}

inline std::pair<double, double> parse_range(const std::string& token, const std::string& where) {
    if (token.size() < 5 || token.front() != '[' || token.back() != ']')
        throw IoError("malformed range '" + token + "' in " + where);
    const auto comma = token.find(',');
    if (comma == std::string::npos) throw IoError("malformed range '" + token + "' in " + where);
    return {parse_double(token.substr(1, comma - 1), where),
            parse_double(token.substr(comma + 1, token.size() - comma - 2), where)};
}

} // namespace detail

struct FieldCsv {
    ScalarField2 field;
    std::optional<ComponentTag> tag;
};

inline FieldCsv read_field_csv(std::istream& in, const std::string& where = "csv") {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# grid ", 0) != 0)
        throw IoError("missing '# grid' header in " + where);
    const int n1 = detail::parse_int(detail::header_token(header, "n1"), where);
    const int n2 = detail::parse_int(detail::header_token(header, "n2"), where);
    const auto r1 = detail::parse_range(detail::header_token(header, "x1"), where);
    const auto r2 = detail::parse_range(detail::header_token(header, "x2"), where);
    Grid2 grid(r1.first, r1.second, n1, r2.first, r2.second, n2);

    std::optional<ComponentTag> tag;
    std::string line;
    std::vector<double> values(grid.size(), 0.0);
    std::vector<char> seen(grid.size(), 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# component ", 0) == 0) {
            std::istringstream ls(line.substr(12));
            ComponentTag t;
            std::string spow;
            ls >> t.name >> spow;
            if (spow.rfind("s_power=", 0) != 0)
                throw IoError("malformed component annotation in " + where);
            t.s_power = detail::parse_int(spow.substr(8), where);
            tag = t;
            continue;
        }
        if (line.front() == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = (c1 == std::string::npos) ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw IoError("malformed row '" + line + "' in " + where);
        const int i = detail::parse_int(line.substr(0, c1), where);
        const int j = detail::parse_int(line.substr(c1 + 1, c2 - c1 - 1), where);
        const double v = detail::parse_double(line.substr(c2 + 1), where);
        if (i < 0 || i >= n1 || j < 0 || j >= n2)
            throw IoError("node (" + std::to_string(i) + "," + std::to_string(j) +
                          ") out of range in " + where);
        values[grid.index(i, j)] = v;
        seen[grid.index(i, j)] = 1;
        ++rows;
    }
    if (rows != grid.size())
        throw IoError("expected " + std::to_string(grid.size()) + " rows, got " +
                      std::to_string(rows) + " in " + where);
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k]) throw IoError("missing node row in " + where);
    return {ScalarField2(grid, std::move(values)), tag};
}

inline FieldCsv read_field_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_field_csv(in, path);
}

} // namespace bonnetlab
