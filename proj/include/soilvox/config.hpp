#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace soilvox {

/// Flat `key = value` run configuration. Unknown keys are rejected when the
/// file is parsed; every value read through a getter (defaults included) is
/// remembered so the fully resolved configuration can be echoed next to the
/// outputs.
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig parse(std::string_view text, const std::string& origin = "<config>");
    static RunConfig load(const std::filesystem::path& path);

    static const std::vector<std::string>& known_keys();

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.contains(key); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    const std::map<std::string, std::string>& resolved() const { return resolved_; }
    void write_resolved(const std::filesystem::path& path) const;

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
};

}  // namespace soilvox
