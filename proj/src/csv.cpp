#include "soilvox/csv.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "soilvox/error.hpp"

namespace soilvox::csv {

std::string format(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("cannot format value");
    return std::string(buf, end);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError("not a number: '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s) {
    s = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError("not an integer: '" + std::string(s) + "'");
    return v;
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path,
                                                 const std::vector<std::string>& expected_header) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    bool have_header = false;
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            if (cells != expected_header)
                throw InputError(path.string() + ": unexpected CSV header '" + line + "'");
            have_header = true;
            continue;
        }
        if (cells.size() != expected_header.size())
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(expected_header.size()) + " columns");
        rows.push_back(std::move(cells));
    }
    if (!have_header) throw InputError(path.string() + ": missing CSV header");
    return rows;
}

}  // namespace soilvox::csv
