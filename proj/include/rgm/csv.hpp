#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rgm::csv {

using Row = std::vector<std::string>;

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes;
// embedded newlines are not supported.
Row split(std::string_view line);

// Reads the next non-empty record; returns false at end of stream.
// Strips a trailing '\r' and a UTF-8 byte-order mark on the first line.
bool read_row(std::istream& in, Row& row, bool first_line = false);

std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

// Shortest representation that parses back to the same double.
std::string format_double(double x);

// Parse helpers that reject trailing garbage. Return false on failure.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long& out);

std::string trim(std::string_view s);

}  // namespace rgm::csv
