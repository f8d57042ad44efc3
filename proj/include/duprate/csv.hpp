#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace duprate::csv {

/// RFC-4180 table with a required header row. Lines starting with '#'
/// before the header are provenance comments and are skipped.
class Table {
public:
    static Table parse(std::istream& in);
    static Table read_file(const std::string& path);

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    std::optional<std::size_t> column(std::string_view name) const;
    /// Throws std::runtime_error naming the column when absent.
    std::size_t require_column(std::string_view name) const;

private:
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> rows_;
};

/// Quotes a field when it holds a comma, quote, or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal representation; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);

/// Strict numeric parse of a whole field.
std::optional<double> parse_double(std::string_view s);

}  // namespace duprate::csv
