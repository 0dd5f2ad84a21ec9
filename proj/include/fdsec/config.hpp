#pragma once

// Flat "key = value" run configuration. '#' starts a comment. Keys are the
// SystemParams field names; a "_db" or "_dbm" suffix means the value is in
// decibels and is converted on load.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "fdsec/errors.hpp"
#include "fdsec/model.hpp"

namespace fdsec {

struct RunConfig {
    SystemParams params;
    int n_fading_points = 64;
    std::uint64_t seed = 1;
    bool printed_formulas = false;
    // simulator
    long sim_slots = 100000;
    long sim_burn_in = 1000;
    int sim_k = 100;
    double sim_initial_battery = 0.0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text, int line, const std::string& key) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ConfigError("bad numeric value '" + std::string(text) + "' for key '" + key + "'", line);
    return v;
}

inline long parse_integer(std::string_view text, int line, const std::string& key) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("bad integer value '" + std::string(text) + "' for key '" + key + "'", line);
    return v;
}

inline bool parse_bool(std::string_view text, int line, const std::string& key) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw ConfigError("bad boolean value '" + std::string(text) + "' for key '" + key + "'", line);
}

}  // namespace detail

/// Applies one key/value pair. Unknown keys are an error.
inline void apply_config_key(RunConfig& cfg, const std::string& key, std::string_view value, int line = 0) {
    auto& p = cfg.params;
    const auto num = [&] { return detail::parse_double(value, line, key); };

    // linear-valued fields
    static const std::map<std::string, double SystemParams::*> linear = {
        {"eta", &SystemParams::eta},         {"sigma1_sq", &SystemParams::sigma1_sq},
        {"sigma2_sq", &SystemParams::sigma2_sq}, {"sigma3_sq", &SystemParams::sigma3_sq},
        {"alpha1", &SystemParams::alpha1},   {"qbar1", &SystemParams::qbar1},
        {"alpha2", &SystemParams::alpha2},   {"p_et", &SystemParams::p_et},
        {"p_p", &SystemParams::p_p},         {"fc", &SystemParams::fc},
        {"gamma", &SystemParams::gamma},     {"d_ehu_et", &SystemParams::d_ehu_et},
        {"d_ehu_eve", &SystemParams::d_ehu_eve}, {"d_et_eve", &SystemParams::d_et_eve},
        {"bandwidth_hz", &SystemParams::bandwidth_hz},
    };
    static const std::map<std::string, double SystemParams::*> in_db = {
        {"alpha1_db", &SystemParams::alpha1},
        {"alpha2_db", &SystemParams::alpha2},
        {"eta_db", &SystemParams::eta},
    };
    static const std::map<std::string, double SystemParams::*> in_dbm = {
        {"sigma1_sq_dbm", &SystemParams::sigma1_sq}, {"sigma2_sq_dbm", &SystemParams::sigma2_sq},
        {"sigma3_sq_dbm", &SystemParams::sigma3_sq}, {"p_et_dbm", &SystemParams::p_et},
        {"p_p_dbm", &SystemParams::p_p},
    };

    if (auto it = linear.find(key); it != linear.end()) {
        p.*(it->second) = num();
    } else if (auto it2 = in_db.find(key); it2 != in_db.end()) {
        p.*(it2->second) = db_to_linear(num());
    } else if (auto it3 = in_dbm.find(key); it3 != in_dbm.end()) {
        p.*(it3->second) = dbm_to_watts(num());
    } else if (key == "qbar1_db") {
        // dB value of the power gain qbar1^2
        p.qbar1 = std::sqrt(db_to_linear(num()));
    } else if (key == "noise_dbm") {
        p.sigma1_sq = p.sigma2_sq = p.sigma3_sq = dbm_to_watts(num());
    } else if (key == "noise") {
        p.sigma1_sq = p.sigma2_sq = p.sigma3_sq = num();
    } else if (key == "n_fading_points") {
        const long n = detail::parse_integer(value, line, key);
        if (n < 1 || n > 4096) throw ConfigError("n_fading_points must lie in [1, 4096]", line);
        cfg.n_fading_points = static_cast<int>(n);
    } else if (key == "seed") {
        const long s = detail::parse_integer(value, line, key);
        if (s < 0) throw ConfigError("seed must be non-negative", line);
        cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "printed_formulas") {
        cfg.printed_formulas = detail::parse_bool(value, line, key);
    } else if (key == "sim_slots") {
        cfg.sim_slots = detail::parse_integer(value, line, key);
        if (cfg.sim_slots < 1) throw ConfigError("sim_slots must be >= 1", line);
    } else if (key == "sim_burn_in") {
        cfg.sim_burn_in = detail::parse_integer(value, line, key);
        if (cfg.sim_burn_in < 0) throw ConfigError("sim_burn_in must be >= 0", line);
    } else if (key == "sim_k") {
        const long k = detail::parse_integer(value, line, key);
        if (k < 1) throw ConfigError("sim_k must be >= 1", line);
        cfg.sim_k = static_cast<int>(k);
    } else if (key == "sim_initial_battery") {
        cfg.sim_initial_battery = num();
        if (cfg.sim_initial_battery < 0.0) throw ConfigError("sim_initial_battery must be >= 0", line);
    } else {
        throw ConfigError("unknown key '" + key + "'", line);
    }
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view s(raw);
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line);
        const std::string key(detail::trim(s.substr(0, eq)));
        const auto value = detail::trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("expected 'key = value'", line);
        apply_config_key(cfg, key, value, line);
    }
    try {
        cfg.params.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid parameters: ") + e.what());
    }
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

}  // namespace fdsec
