#include "duprate/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace duprate::csv {

namespace {

// Reads one logical record; quoted fields may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            break;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    if (in_quotes) throw std::runtime_error("csv: unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

Table Table::parse(std::istream& in) {
    Table t;
    std::vector<std::string> fields;
    for (;;) {
        if (!read_record(in, fields)) return t;  // empty input: no header
        if (!fields.empty() && !fields[0].empty() && fields[0][0] == '#') continue;
        if (fields.size() == 1 && fields[0].empty()) continue;
        break;
    }
    t.header_ = fields;
    for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_.emplace(t.header_[i], i);
    while (read_record(in, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != t.header_.size())
            throw std::runtime_error("csv: row " + std::to_string(t.rows_.size() + 1) + " has " +
                                     std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(t.header_.size()));
        t.rows_.push_back(fields);
    }
    return t;
}

Table Table::read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse(in);
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Table::require_column(std::string_view name) const {
    auto c = column(name);
    if (!c) throw std::runtime_error("missing required column '" + std::string(name) + "'");
    return *c;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s == "inf" || s == "+inf" || s == "Infinity") return INFINITY;
    if (s == "-inf" || s == "-Infinity") return -INFINITY;
    if (s == "nan" || s == "NaN") return NAN;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace duprate::csv
