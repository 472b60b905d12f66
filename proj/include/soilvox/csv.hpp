#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace soilvox::csv {

// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format(double v);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

// Reads a CSV file, checks the header matches `expected_header` column by
// column, returns the data rows. Blank lines are skipped.
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path,
                                                 const std::vector<std::string>& expected_header);

}  // namespace soilvox::csv
