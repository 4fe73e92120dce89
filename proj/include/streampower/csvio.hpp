#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streampower::csv {

// Splits one CSV row. Understands double-quoted fields with embedded commas
// and doubled quotes; no multi-line fields.
std::vector<std::string> split_row(const std::string& line);

// Quotes the field only when it needs quoting.
std::string format_field(std::string_view value);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text);  // throws ValidationError
long long parse_integer(std::string_view text);

// Reads a header line and resolves required column names to indices.
// Missing columns raise SchemaError naming all of them.
struct Header {
    std::vector<std::string> columns;
    std::size_t index_of(std::string_view name) const;  // throws SchemaError
    std::optional<std::size_t> find(std::string_view name) const;
};

Header read_header(std::istream& in, std::span<const std::string_view> required);

void write_row(std::ostream& out, std::span<const std::string> fields);

}  // namespace streampower::csv
