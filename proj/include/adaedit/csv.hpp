#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace adaedit::csv {

/// Locale-independent decimal with 17 significant digits. Infinities print
/// as "inf"/"-inf", NaN as "nan".
std::string format(double value);

/// Writes one comma-separated row followed by '\n'.
void write_row(std::ostream& os, std::initializer_list<std::string_view> fields);

/// Splits a single CSV line on commas (no quoting; none of our files need it).
std::vector<std::string> split(std::string_view line);

double parse_double(std::string_view text);

}  // namespace adaedit::csv
