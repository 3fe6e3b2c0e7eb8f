#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipbac/error.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

struct EngineConfig {
    double alpha = 0.2645;                   // DS grant threshold (strict >)
    double theta = 1.0;                      // access level granted on fuzzy success
    double kappa = 50.0;                     // engagement saturation scale
    DurationMs half_life_ms = 2'592'000'000; // relevance decay half-life (30 days)
    std::string rule_base_path;              // empty -> built-in default rule base
    DurationMs clock_skew_ms = kDefaultClockSkewMs;
    std::uint64_t min_labeled_decisions = 100; // floor for threshold review

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct FieldError {
    std::string field;
    std::string message;
};

/// Field-level validation, one entry per violated invariant, so the config
/// endpoint can report exactly which knobs were rejected.
inline std::vector<FieldError> validate_config(const EngineConfig& c) {
    std::vector<FieldError> errs;
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) errs.push_back({"alpha", "must be in [0,1]"});
    if (!(c.theta > 0.0 && c.theta <= 1.0)) errs.push_back({"theta", "must be in (0,1]"});
    if (!(c.kappa > 0.0)) errs.push_back({"kappa", "must be > 0"});
    if (!(c.half_life_ms > 0)) errs.push_back({"half_life_ms", "must be > 0"});
    if (!(c.clock_skew_ms >= 0)) errs.push_back({"clock_skew_ms", "must be >= 0"});
    if (!(c.min_labeled_decisions >= 1)) errs.push_back({"min_labeled_decisions", "must be >= 1"});
    return errs;
}

inline void require_valid(const EngineConfig& c) {
    auto errs = validate_config(c);
    if (errs.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += " " + e.field + " " + e.message + ";";
    raise(Errc::invalid_config, msg);
}

inline void to_json(nlohmann::json& j, const EngineConfig& c) {
    j = {{"alpha", c.alpha},
         {"theta", c.theta},
         {"kappa", c.kappa},
         {"half_life_ms", c.half_life_ms},
         {"rule_base_path", c.rule_base_path},
         {"clock_skew_ms", c.clock_skew_ms},
         {"min_labeled_decisions", c.min_labeled_decisions}};
}

/// Partial documents are allowed: absent fields keep their defaults (or,
/// for config PUT, the currently active values).
inline void merge_from_json(EngineConfig& c, const nlohmann::json& j) {
    try {
        if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
        if (j.contains("theta")) c.theta = j.at("theta").get<double>();
        if (j.contains("kappa")) c.kappa = j.at("kappa").get<double>();
        if (j.contains("half_life_ms")) c.half_life_ms = j.at("half_life_ms").get<DurationMs>();
        if (j.contains("rule_base_path")) c.rule_base_path = j.at("rule_base_path").get<std::string>();
        if (j.contains("clock_skew_ms")) c.clock_skew_ms = j.at("clock_skew_ms").get<DurationMs>();
        if (j.contains("min_labeled_decisions"))
            c.min_labeled_decisions = j.at("min_labeled_decisions").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::invalid_config, std::string("config document: ") + e.what());
    }
}

inline void from_json(const nlohmann::json& j, EngineConfig& c) {
    c = EngineConfig{};
    merge_from_json(c, j);
}

inline EngineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(Errc::io_error, "cannot open config file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("config file: ") + e.what());
    }
    EngineConfig c = j.get<EngineConfig>();
    require_valid(c);
    return c;
}

} // namespace ipbac
