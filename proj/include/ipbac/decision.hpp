#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ipbac/chain.hpp"
#include "ipbac/config.hpp"
#include "ipbac/error.hpp"
#include "ipbac/factors.hpp"
#include "ipbac/fuzzy.hpp"
#include "ipbac/policy.hpp"
#include "ipbac/rules_io.hpp"
#include "ipbac/store.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

enum class DecisionOutcome { full, partial, deny };
enum class DecisionPath { non_fuzzy, fuzzy };

inline std::string_view decision_outcome_name(DecisionOutcome o) {
    switch (o) {
        case DecisionOutcome::full: return "full";
        case DecisionOutcome::partial: return "partial";
        case DecisionOutcome::deny: return "deny";
    }
    return "?";
}

inline std::string_view decision_path_name(DecisionPath p) {
    return p == DecisionPath::non_fuzzy ? "non_fuzzy" : "fuzzy";
}

struct Decision {
    DecisionOutcome outcome = DecisionOutcome::deny;
    double theta = 0.0;                  // partial only: granted access level
    std::set<Permission> granted;        // partial only: masked permission set
    std::optional<double> ds;            // present iff the fuzzy stage produced a score
    DecisionPath path = DecisionPath::non_fuzzy;
    std::vector<std::string> trace;

    bool is_grant() const { return outcome != DecisionOutcome::deny; }
};

/// Tiered permission mask on the requested resource. The boundary values
/// belong to the lower tier; theta = 1 additionally unlocks delete.
inline std::set<Permission> mask_permissions(const AccessRequest& request, double theta) {
    if (!(theta > 0.0 && theta <= 1.0))
        raise(Errc::invalid_level, "theta " + std::to_string(theta) + " outside (0,1]");
    std::set<Permission> out{{request.resource, "read"}};
    if (theta <= 1.0 / 3.0) return out;
    out.insert({request.resource, "write"});
    if (theta <= 2.0 / 3.0) return out;
    out.insert({request.resource, "execute"});
    if (theta < 1.0) return out;
    out.insert({request.resource, "delete"});
    return out;
}

namespace detail {

inline std::string fmt_ds(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace detail

enum class EngineMode {
    rbac_only, // baseline: the fuzzy stage never runs, RBAC denies are final
    full,      // two-stage pipeline
};

/// The pure pipeline: evaluates the request against policies and the chain
/// without mutating anything. Callers append the returned self-record input
/// themselves (in-memory via chain, or durably via the store).
inline Decision evaluate_request(const AccessRequest& request, const PolicySet& policies,
                                 const ProvenanceChain& chain, const EngineConfig& config,
                                 const RuleBase& rulebase, EngineMode mode = EngineMode::full) {
    if (!request.valid()) raise(Errc::invalid_record, "malformed access request");
    if (chain.principal() != request.principal)
        raise(Errc::chain_mismatch, "chain belongs to '" + chain.principal().id + "', request from '" +
                                        request.principal.id + "'");

    Decision d;
    d.trace.push_back("User Request: '" + request.principal.id + "' requests '" + request.action +
                      "' on '" + request.resource + "'");
    const auto* roles = policies.roles_of(request.principal);
    d.trace.push_back("Check Policies: " + std::to_string(roles ? roles->size() : 0) +
                      " role(s) assigned");
    d.trace.push_back("Check Interaction Logs: " + std::to_string(chain.size()) + " record(s), " +
                      std::to_string(chain.aggregates().successful_interactions) + " successful");

    RbacResult rbac = evaluate_rbac(policies, request, chain);
    if (rbac.allowed) {
        d.outcome = DecisionOutcome::full;
        d.path = DecisionPath::non_fuzzy;
        d.trace.push_back("Evaluate Role: role '" + rbac.matched_role + "' permits the action");
        d.trace.push_back("Allow Access: full access via non-fuzzy evaluation");
        return d;
    }

    std::string reason(rbac_reason_name(rbac.reason));
    if (!rbac.failed_predicate.empty()) reason += " [" + rbac.failed_predicate + "]";
    if (mode == EngineMode::rbac_only) {
        d.outcome = DecisionOutcome::deny;
        d.path = DecisionPath::non_fuzzy;
        d.trace.push_back("Evaluate Role: denied (" + reason + ")");
        d.trace.push_back("Deny Access: non-fuzzy evaluation is final in RBAC-only mode");
        return d;
    }

    d.path = DecisionPath::fuzzy;
    d.trace.push_back("Evaluate Role: denied (" + reason + "); forwarding to fuzzy evaluation");
    try {
        FactorParams params{config.kappa, config.half_life_ms};
        FuzzyFactors f = compute_factors(chain.aggregates(), request, params);
        double ds = compute_ds(f, rulebase);
        d.ds = ds;
        d.trace.push_back("Fuzzy Evaluation: reliability=" + detail::fmt_ds(f.reliability) +
                          " relevance=" + detail::fmt_ds(f.contextual_relevance) +
                          " engagement=" + detail::fmt_ds(f.historical_engagement) +
                          " -> DS=" + detail::fmt_ds(ds));
        if (ds > config.alpha) {
            if (config.theta == 1.0) {
                d.outcome = DecisionOutcome::full;
                d.trace.push_back("Allow Access: DS " + detail::fmt_ds(ds) + " exceeds threshold " +
                                  detail::fmt_ds(config.alpha) + "; full access (theta=1)");
            } else {
                d.outcome = DecisionOutcome::partial;
                d.theta = config.theta;
                d.granted = mask_permissions(request, config.theta);
                d.trace.push_back("Allow Access: DS " + detail::fmt_ds(ds) + " exceeds threshold " +
                                  detail::fmt_ds(config.alpha) + "; partial access (theta=" +
                                  detail::fmt_ds(config.theta) + ", " +
                                  std::to_string(d.granted.size()) + " permission(s))");
            }
        } else {
            d.outcome = DecisionOutcome::deny;
            d.trace.push_back("Deny Access: DS " + detail::fmt_ds(ds) + " does not exceed threshold " +
                              detail::fmt_ds(config.alpha));
        }
    } catch (const Error& e) {
        // Fail closed: any fuzzy-stage error denies. No score is reported
        // because none was computed.
        d.outcome = DecisionOutcome::deny;
        d.ds.reset();
        d.trace.push_back(std::string("Deny Access: fuzzy evaluation failed (") + errc_name(e.code()) +
                          ": " + e.what() + "); failing closed");
    }
    return d;
}

/// The self-record a decision writes back into the principal's chain. The
/// event reference is deterministic (chain length at decision time), so a
/// replayed workload produces byte-identical chains.
inline RecordInput decision_record_input(const AccessRequest& request, const Decision& d,
                                         std::size_t chain_len_before) {
    RecordInput in;
    in.principal = request.principal;
    in.interaction.event_ref =
        "dec-" + request.principal.id + "-" + std::to_string(chain_len_before);
    in.interaction.participants = {request.principal, PrincipalId{"ipbac-engine"}};
    in.resource = request.resource;
    in.action = request.action;
    in.outcome = d.is_grant() ? Outcome::Success : Outcome::Denied;
    in.context_tags = request.context_tags;
    in.recorded_at = request.requested_at;
    return in;
}

/// Spec-shaped convenience: evaluate and append the self-record to the
/// given in-memory chain. Requests more than clock_skew_ms older than the
/// chain head are refused up front, before any evaluation.
inline Decision decide(const AccessRequest& request, const PolicySet& policies, ProvenanceChain& chain,
                       const EngineConfig& config, const RuleBase& rulebase,
                       EngineMode mode = EngineMode::full) {
    if (!request.valid()) raise(Errc::invalid_record, "malformed access request");
    if (!chain.empty() && chain.head_recorded_at() - request.requested_at > config.clock_skew_ms)
        raise(Errc::chronology_violation, "request timestamp too far behind the chain head");
    Decision d = evaluate_request(request, policies, chain, config, rulebase, mode);
    chain.append(decision_record_input(request, d, chain.size()), config.clock_skew_ms);
    return d;
}

inline Decision decide(const AccessRequest& request, const PolicySet& policies, ProvenanceChain& chain,
                       const EngineConfig& config, EngineMode mode = EngineMode::full) {
    static const RuleBase default_base = RuleBase::default_level_sum();
    return decide(request, policies, chain, config, default_base, mode);
}

// --- threshold review -------------------------------------------------------

struct LabeledDecision {
    Decision decision;
    bool correct = true; // operator's verdict on the decision as made
};

struct ThresholdReview {
    double suggested_alpha = 0.0;
    double accuracy = 0.0;    // labeled accuracy at the suggested threshold
    std::size_t sample_size = 0;
};

/// Offline sweep over candidate thresholds (every observed DS, the current
/// alpha, and 0) choosing the alpha that maximizes labeled accuracy; ties
/// prefer the current alpha, otherwise the suggestion lands mid-gap between
/// adjacent observed scores so the classification is robust to jitter.
/// Report-only: nothing is applied.
inline ThresholdReview review_threshold(const std::vector<LabeledDecision>& log,
                                        const EngineConfig& config) {
    struct Point {
        double ds;
        bool should_grant;
    };
    std::vector<Point> pts;
    for (const auto& [decision, correct] : log) {
        if (!decision.ds) continue; // only fuzzy-path decisions carry a score
        bool granted = decision.is_grant();
        pts.push_back({*decision.ds, correct == granted});
    }
    if (pts.size() < config.min_labeled_decisions)
        raise(Errc::insufficient_data,
              "have " + std::to_string(pts.size()) + " labeled fuzzy decisions, need " +
                  std::to_string(config.min_labeled_decisions));

    std::vector<double> candidates{config.alpha, 0.0};
    for (const auto& p : pts) candidates.push_back(p.ds);

    auto accuracy_at = [&](double alpha) {
        std::size_t hits = 0;
        for (const auto& p : pts)
            if ((p.ds > alpha) == p.should_grant) ++hits;
        return static_cast<double>(hits) / static_cast<double>(pts.size());
    };

    double best_alpha = config.alpha;
    double best_acc = accuracy_at(config.alpha);
    for (double c : candidates)
        if (double a = accuracy_at(c); a > best_acc) {
            best_acc = a;
            best_alpha = c;
        }

    if (best_alpha != config.alpha) {
        // center the threshold in the gap up to the next observed score
        double next = 2.0; // above any reachable DS
        for (const auto& p : pts)
            if (p.ds > best_alpha && p.ds < next) next = p.ds;
        if (next < 2.0) best_alpha = (best_alpha + next) / 2.0;
    }
    return {best_alpha, best_acc, pts.size()};
}

// --- engine ------------------------------------------------------------------

struct Decided {
    Decision decision;
    ProvenanceRecord record; // the self-record as appended
};

/// Binds store, policies and config into the long-lived object the service
/// and the benchmark drive. Decisions for one principal are serialized by
/// that principal's writer mutex; the config (with its parsed rule base) is
/// swapped atomically and each decision reads one consistent snapshot.
class DecisionEngine {
public:
    struct Snapshot {
        EngineConfig config;
        RuleBase rulebase;
    };

    DecisionEngine(ChainStore& store, PolicySet policies, const EngineConfig& config,
                   EngineMode mode = EngineMode::full)
        : store_(store), policies_(std::move(policies)), mode_(mode) {
        policies_.validate();
        set_config(config);
    }

    EngineMode mode() const { return mode_; }

    std::shared_ptr<const Snapshot> snapshot() const {
        std::lock_guard lk(mu_);
        return snap_;
    }

    EngineConfig config() const { return snapshot()->config; }

    /// Validates, loads the rule base, swaps. A changed half-life triggers
    /// an aggregate rebuild across all chains before the swap, so scores
    /// after the call reflect the new decay everywhere.
    void set_config(const EngineConfig& config) {
        require_valid(config);
        auto next = std::make_shared<Snapshot>();
        next->config = config;
        next->rulebase =
            config.rule_base_path.empty() ? RuleBase::default_level_sum() : load_rule_base(config.rule_base_path);
        next->rulebase.validate();
        store_.set_half_life(config.half_life_ms);
        std::lock_guard lk(mu_);
        snap_ = std::move(next);
    }

    Decided decide(const AccessRequest& request) {
        if (!request.valid()) raise(Errc::invalid_record, "malformed access request");
        auto snap = snapshot();
        std::lock_guard lk(store_.principal_mutex(request.principal));
        auto& chain = store_.chain(request.principal);
        if (!chain.empty() &&
            chain.head_recorded_at() - request.requested_at > snap->config.clock_skew_ms)
            raise(Errc::chronology_violation, "request timestamp too far behind the chain head");
        Decided out;
        out.decision =
            evaluate_request(request, policies_, chain, snap->config, snap->rulebase, mode_);
        out.record =
            store_.append(decision_record_input(request, out.decision, chain.size()));
        return out;
    }

    struct Recorded {
        ProvenanceRecord record;
        std::size_t chain_length = 0;
    };

    /// Non-decision interaction ingestion (the /v1/interactions path).
    /// Returns a copy taken under the chain's writer lock — a reference
    /// into the chain could be invalidated by the next append.
    Recorded record_interaction(const RecordInput& input) {
        std::lock_guard lk(store_.principal_mutex(input.principal));
        Recorded out;
        out.record = store_.append(input);
        out.chain_length = store_.chain(input.principal).size();
        return out;
    }

    ChainStore& store() { return store_; }
    const PolicySet& policies() const { return policies_; }

private:
    ChainStore& store_;
    PolicySet policies_;
    EngineMode mode_;
    mutable std::mutex mu_;
    std::shared_ptr<const Snapshot> snap_;
};

} // namespace ipbac
