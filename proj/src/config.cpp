#include "soilvox/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "soilvox/csv.hpp"
#include "soilvox/error.hpp"

namespace soilvox {

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys{
        // geometry
        "image", "image_meta", "sub_origin", "sub_dims", "graph_cache", "balls", "grid_dims",
        // scenario
        "seed_kind", "initial_state", "axis", "layers", "dom_total", "mb_total", "n_spots", "som_total",
        "fom_total", "rng_seed", "mass_unit",
        // schedule
        "scheme", "transform_variant", "dt_diffusion_s", "dt_transform_s", "t_end_s", "record_every_s",
        // biology
        "rho", "mu", "beta", "v_som", "v_fom", "v_dom", "k_dom",
        // diffusion
        "d_coeff", "pcg_tol", "pcg_max_iter",
        // ball network
        "theta", "calib_data", "objective", "epochs", "batch_size", "lr0", "halve_every", "calib_scenarios",
        "calib_record_s", "calib_horizon_s", "calib_voxel_dt_s", "calib_mass_min", "calib_mass_max",
        "pngm_scheme", "pngm_dt_s", "pngm_transform", "pngm_dt_transform_s",
        // output
        "out_dir"};
    return keys;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = csv::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const auto where = origin + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos) throw InputError(where + ": expected 'key = value'");
        const std::string key(csv::trim(body.substr(0, eq)));
        const std::string value(csv::trim(body.substr(eq + 1)));
        if (key.empty()) throw InputError(where + ": empty key");
        if (cfg.values_.contains(key)) throw InputError(where + ": duplicate key '" + key + "'");
        cfg.set(key, value);
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw InputError("unknown config key '" + key + "'");
    values_[key] = value;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    const std::string v = it == values_.end() ? fallback : it->second;
    resolved_[key] = v;
    return v;
}

std::string RunConfig::require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw InputError("missing required config key '" + key + "'");
    resolved_[key] = it->second;
    return it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = csv::format(fallback);
        return fallback;
    }
    try {
        const double v = csv::parse_double(it->second);
        resolved_[key] = it->second;
        return v;
    } catch (const InputError&) {
        throw InputError("config key '" + key + "': expected a number, got '" + it->second + "'");
    }
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    try {
        const long long v = csv::parse_int(it->second);
        resolved_[key] = it->second;
        return v;
    } catch (const InputError&) {
        throw InputError("config key '" + key + "': expected an integer, got '" + it->second + "'");
    }
}

std::uint64_t RunConfig::get_seed(const std::string& key, std::uint64_t fallback) const {
    const long long v = get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw InputError("config key '" + key + "' must be >= 0");
    return static_cast<std::uint64_t>(v);
}

std::vector<int> RunConfig::get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        std::string s;
        for (std::size_t i = 0; i < fallback.size(); ++i) s += (i ? "," : "") + std::to_string(fallback[i]);
        resolved_[key] = s;
        return fallback;
    }
    std::vector<int> out;
    try {
        for (const auto& cell : csv::split(it->second)) out.push_back(static_cast<int>(csv::parse_int(cell)));
    } catch (const InputError&) {
        throw InputError("config key '" + key + "': expected comma-separated integers, got '" + it->second + "'");
    }
    resolved_[key] = it->second;
    return out;
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "# resolved configuration\n";
    for (const auto& [k, v] : resolved_) out << k << " = " << v << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace soilvox
