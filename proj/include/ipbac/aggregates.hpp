#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ipbac/types.hpp"

namespace ipbac {

/// First path segment of a resource name ("incident/42" -> "incident").
/// Relevance is tracked per class, matching the granularity of trailing-
/// wildcard permissions.
inline std::string resource_class(std::string_view resource) {
    auto slash = resource.find('/');
    return std::string(slash == std::string_view::npos ? resource : resource.substr(0, slash));
}

/// Running summary of one chain, updated on every append so that factor
/// computation never has to walk the records. Masses are exponentially
/// decayed success counts, expressed as of `last_interaction_at`; only
/// Success outcomes add mass, while every outcome counts toward totals.
///
/// Reconstruction from disk replays records through update() in order,
/// which reproduces the live aggregates bit for bit.
struct IncrementalAggregates {
    std::uint64_t total_interactions = 0;
    std::uint64_t successful_interactions = 0;
    std::map<std::string, std::uint64_t> success_by_class;
    std::optional<TimestampMs> last_interaction_at;
    std::map<std::string, double> decayed_mass_by_class;
    double total_decayed_mass = 0.0;
    DurationMs half_life_ms = 2'592'000'000; // 30 days

    void update(const ProvenanceRecord& record) {
        decay_to(record.recorded_at);
        total_interactions += 1;
        if (record.outcome == Outcome::Success) {
            successful_interactions += 1;
            auto cls = resource_class(record.resource);
            success_by_class[cls] += 1;
            decayed_mass_by_class[cls] += 1.0;
            total_decayed_mass += 1.0;
        }
        last_interaction_at = record.recorded_at;
    }

    /// Mass for one class decayed to `at` (chain time never runs backwards;
    /// queries older than the head see the head-time masses).
    double mass_at(const std::string& cls, TimestampMs at) const {
        auto it = decayed_mass_by_class.find(cls);
        if (it == decayed_mass_by_class.end()) return 0.0;
        return it->second * decay_factor(at);
    }

    double total_mass_at(TimestampMs at) const { return total_decayed_mass * decay_factor(at); }

    friend bool operator==(const IncrementalAggregates&, const IncrementalAggregates&) = default;

private:
    double decay_factor(TimestampMs at) const {
        if (!last_interaction_at || at <= *last_interaction_at) return 1.0;
        return std::exp2(-static_cast<double>(at - *last_interaction_at) /
                         static_cast<double>(half_life_ms));
    }

    void decay_to(TimestampMs at) {
        double f = decay_factor(at);
        if (f == 1.0) return;
        for (auto& [cls, mass] : decayed_mass_by_class) mass *= f;
        total_decayed_mass *= f;
    }
};

} // namespace ipbac
