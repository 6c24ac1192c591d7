#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace greenview::csv {

/// Reads one RFC 4180 record (quoted fields may span lines). Returns nothing
/// at end of input. Throws InvalidArgument on an unterminated quote.
std::optional<std::vector<std::string>> read_record(std::istream& in);

/// Quotes a field only when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict parse of a whole field; nothing on failure.
std::optional<double> parse_double(std::string_view text);

}  // namespace greenview::csv
