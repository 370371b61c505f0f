#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace adawls::csv {

/// Shortest round-trip decimal form ("%.17g"); "inf", "-inf", "nan" otherwise.
std::string format(double value);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string quote(std::string_view field);

void write_row(std::ostream& os, const std::vector<std::string>& fields);

/// Splits one record. Quoted fields may contain commas and doubled quotes;
/// embedded line breaks are not supported.
std::vector<std::string> split(std::string_view line);

/// Reads the next nonempty record, stripping a trailing CR. False at EOF.
bool read_row(std::istream& is, std::vector<std::string>& fields);

double parse_double(const std::string& field);
long long parse_int(const std::string& field);

}  // namespace adawls::csv
