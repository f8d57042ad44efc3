#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace duprate {

/// Fractional days since 1970-01-01T00:00:00Z.
using Days = double;

/// Parses ISO-8601 dates and date-times ("2020-08-04", "2020-08-04T12:00:00Z",
/// "2020-08-04 12:00:00.25+02:00"). Returns nullopt on malformed input.
std::optional<Days> parse_iso8601(std::string_view text);

/// UTC rendering with microsecond precision, e.g. "2020-08-04T12:00:00.000000Z".
std::string format_iso8601(Days t);

}  // namespace duprate
