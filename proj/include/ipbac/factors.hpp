#pragma once

#include <algorithm>
#include <cmath>

#include "ipbac/aggregates.hpp"
#include "ipbac/error.hpp"
#include "ipbac/fuzzy.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

struct FactorParams {
    double kappa = 50.0;                       // engagement saturation scale
    DurationMs half_life_ms = 2'592'000'000;   // relevance decay half-life (30 days)

    bool valid() const { return kappa > 0.0 && half_life_ms > 0; }
};

struct FuzzyFactors {
    double reliability = 0.0;
    double contextual_relevance = 0.0;
    double historical_engagement = 0.0;

    friend bool operator==(const FuzzyFactors&, const FuzzyFactors&) = default;
};

/// The three decision factors, all total functions of the aggregates:
///   reliability  — Laplace-smoothed success ratio (s+1)/(n+2), so an empty
///                  history reads as an uninformative 0.5;
///   relevance    — decayed success mass in the request's resource class
///                  over total decayed mass + 1 (the +1 keeps a lone stale
///                  success from reading as full relevance);
///   engagement   — 1 - exp(-n/kappa), saturating volume of history.
/// Masses decay at the aggregates' configured half-life; params.half_life_ms
/// is the same value plumbed from config (the engine sets both together).
inline FuzzyFactors compute_factors(const IncrementalAggregates& agg, const AccessRequest& request,
                                    const FactorParams& params = {}) {
    if (!params.valid()) raise(Errc::invalid_config, "factor params out of range");

    FuzzyFactors f;
    f.reliability = (static_cast<double>(agg.successful_interactions) + 1.0) /
                    (static_cast<double>(agg.total_interactions) + 2.0);

    double class_mass = agg.mass_at(resource_class(request.resource), request.requested_at);
    double total_mass = agg.total_mass_at(request.requested_at);
    f.contextual_relevance = std::clamp(class_mass / (total_mass + 1.0), 0.0, 1.0);

    f.historical_engagement =
        1.0 - std::exp(-static_cast<double>(agg.total_interactions) / params.kappa);
    return f;
}

inline Memberships fuzzify_factors(const FuzzyFactors& f, const RuleBase& rulebase) {
    Memberships m;
    const auto* rel = rulebase.find_input("reliability");
    const auto* ctx = rulebase.find_input("relevance");
    const auto* eng = rulebase.find_input("engagement");
    if (!rel || !ctx || !eng)
        raise(Errc::invalid_config, "rule base must define reliability, relevance and engagement");
    m["reliability"] = fuzzify(f.reliability, *rel);
    m["relevance"] = fuzzify(f.contextual_relevance, *ctx);
    m["engagement"] = fuzzify(f.historical_engagement, *eng);
    return m;
}

/// Full factor-triple -> Decision Score pipeline.
inline double compute_ds(const FuzzyFactors& factors, const RuleBase& rulebase) {
    return defuzzify_centroid(infer(fuzzify_factors(factors, rulebase), rulebase));
}

} // namespace ipbac
