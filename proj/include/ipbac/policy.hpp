#pragma once

#include <compare>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ipbac/chain.hpp"
#include "ipbac/error.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

/// (resource pattern, action). The pattern is an exact resource name or a
/// trailing wildcard: the final '/'-separated segment may be "*", which
/// matches one or more remaining segments ("incident/*" matches
/// "incident/42" and "incident/42/notes", never bare "incident").
struct Permission {
    std::string resource;
    std::string action;

    auto operator<=>(const Permission&) const = default;

    bool valid() const {
        if (resource.empty() || action.empty()) return false;
        std::string_view r = resource;
        for (std::size_t pos = 0; pos != std::string_view::npos;) {
            auto slash = r.find('/', pos);
            auto seg = r.substr(pos, slash == std::string_view::npos ? r.npos : slash - pos);
            bool last = slash == std::string_view::npos;
            if (seg.empty()) return false;
            if (seg.find('*') != std::string_view::npos && !(last && seg == "*")) return false;
            pos = last ? std::string_view::npos : slash + 1;
        }
        return true;
    }

    bool matches(std::string_view req_resource, std::string_view req_action) const {
        if (action != req_action) return false;
        std::string_view pat = resource;
        if (!pat.ends_with("*")) return pat == req_resource;
        // strip "*"; the remaining prefix (with its trailing '/') must match
        // and at least one more segment must follow.
        auto prefix = pat.substr(0, pat.size() - 1);
        if (prefix.empty()) return !req_resource.empty();
        return req_resource.size() > prefix.size() && req_resource.substr(0, prefix.size()) == prefix;
    }
};

struct Role {
    std::string name;
    std::set<Permission> permissions;
};

struct HistoryPredicate {
    enum class Kind { min_successful_interactions, no_outcome_in_window };

    Kind kind = Kind::min_successful_interactions;
    std::uint64_t n = 0;          // min_successful_interactions only
    Outcome outcome = Outcome::Failure; // no_outcome_in_window only
    DurationMs window_ms = 0;

    bool valid() const { return window_ms > 0; }

    std::string describe() const {
        if (kind == Kind::min_successful_interactions)
            return "min_successful_interactions(n=" + std::to_string(n) +
                   ", window_ms=" + std::to_string(window_ms) + ")";
        return "no_outcome_in_window(outcome=" + std::string(outcome_name(outcome)) +
               ", window_ms=" + std::to_string(window_ms) + ")";
    }

    /// Evaluated against the chain with the request time as "now"; only
    /// records inside [now - window, now] count.
    bool holds(const ProvenanceChain& history, TimestampMs now) const {
        TimestampMs cutoff = now - window_ms;
        if (kind == Kind::min_successful_interactions) {
            std::uint64_t count = 0;
            for (const auto& r : history.records())
                if (r.recorded_at >= cutoff && r.recorded_at <= now && r.outcome == Outcome::Success)
                    ++count;
            return count >= n;
        }
        for (const auto& r : history.records())
            if (r.recorded_at >= cutoff && r.recorded_at <= now && r.outcome == outcome)
                return false;
        return true;
    }
};

struct PolicySet {
    std::map<std::string, Role> roles;
    std::map<std::string, std::set<std::string>> assignments; // principal id -> role names
    std::map<std::string, std::vector<HistoryPredicate>> predicates; // role name -> predicates

    void validate() const {
        for (const auto& [name, role] : roles) {
            if (name != role.name) raise(Errc::invalid_config, "role map key '" + name + "' != role name");
            for (const auto& p : role.permissions)
                if (!p.valid())
                    raise(Errc::invalid_config, "role '" + name + "' has malformed permission '" +
                                                    p.resource + "'");
        }
        for (const auto& [principal, names] : assignments)
            for (const auto& rn : names)
                if (!roles.contains(rn))
                    raise(Errc::invalid_config,
                          "assignment of '" + principal + "' references unknown role '" + rn + "'");
        for (const auto& [rn, preds] : predicates) {
            if (!roles.contains(rn))
                raise(Errc::invalid_config, "predicates reference unknown role '" + rn + "'");
            for (const auto& p : preds)
                if (!p.valid()) raise(Errc::invalid_config, "predicate on '" + rn + "' needs window > 0");
        }
    }

    const std::set<std::string>* roles_of(const PrincipalId& p) const {
        auto it = assignments.find(p.id);
        return it == assignments.end() ? nullptr : &it->second;
    }
};

inline std::set<Permission> permissions_for(const PolicySet& policies, const PrincipalId& principal) {
    std::set<Permission> out;
    if (const auto* names = policies.roles_of(principal))
        for (const auto& rn : *names) {
            auto it = policies.roles.find(rn);
            if (it != policies.roles.end())
                out.insert(it->second.permissions.begin(), it->second.permissions.end());
        }
    return out;
}

enum class RbacReason { allowed, no_matching_permission, predicate_failed };

inline std::string_view rbac_reason_name(RbacReason r) {
    switch (r) {
        case RbacReason::allowed: return "Allowed";
        case RbacReason::no_matching_permission: return "NoMatchingPermission";
        case RbacReason::predicate_failed: return "PredicateFailed";
    }
    return "?";
}

struct RbacResult {
    bool allowed = false;
    RbacReason reason = RbacReason::no_matching_permission;
    std::string matched_role;     // on Allow: the role that granted access
    std::string failed_predicate; // on PredicateFailed: which predicate
};

/// Permissive union over the principal's roles: Allow iff some assigned
/// role both grants a matching permission and passes all of its own
/// predicates. Roles are tried in name order, so results and reported
/// reasons are deterministic. Removing an assignment can only remove Allow
/// outcomes, never create them.
inline RbacResult evaluate_rbac(const PolicySet& policies, const AccessRequest& request,
                                const ProvenanceChain& history) {
    RbacResult result;
    const auto* names = policies.roles_of(request.principal);
    if (!names) return result;

    for (const auto& rn : *names) {
        auto it = policies.roles.find(rn);
        if (it == policies.roles.end()) continue;
        bool grants = false;
        for (const auto& perm : it->second.permissions)
            if (perm.matches(request.resource, request.action)) {
                grants = true;
                break;
            }
        if (!grants) continue;

        bool predicates_hold = true;
        if (auto pit = policies.predicates.find(rn); pit != policies.predicates.end())
            for (const auto& pred : pit->second)
                if (!pred.holds(history, request.requested_at)) {
                    predicates_hold = false;
                    if (result.reason != RbacReason::predicate_failed) {
                        result.reason = RbacReason::predicate_failed;
                        result.failed_predicate = rn + ": " + pred.describe();
                    }
                    break;
                }
        if (predicates_hold) {
            result.allowed = true;
            result.reason = RbacReason::allowed;
            result.matched_role = rn;
            result.failed_predicate.clear();
            return result;
        }
    }
    return result;
}

// --- policy file (JSON) ---------------------------------------------------
//
// {
//   "roles":       { "viewer": [ {"resource": "incident/*", "action": "read"} ] },
//   "assignments": { "alice": ["viewer"] },
//   "predicates":  { "viewer": [ {"kind": "min_successful_interactions",
//                                 "n": 5, "window_ms": 2592000000},
//                                {"kind": "no_outcome_in_window",
//                                 "outcome": "failure", "window_ms": 86400000} ] }
// }

inline PolicySet policy_set_from_json(const nlohmann::json& j) {
    PolicySet ps;
    try {
        if (j.contains("roles"))
            for (const auto& [name, perms] : j.at("roles").items()) {
                Role role;
                role.name = name;
                for (const auto& p : perms)
                    role.permissions.insert(
                        {p.at("resource").get<std::string>(), p.at("action").get<std::string>()});
                ps.roles.emplace(name, std::move(role));
            }
        if (j.contains("assignments"))
            for (const auto& [principal, names] : j.at("assignments").items())
                for (const auto& rn : names)
                    ps.assignments[principal].insert(rn.get<std::string>());
        if (j.contains("predicates"))
            for (const auto& [rn, preds] : j.at("predicates").items())
                for (const auto& pj : preds) {
                    HistoryPredicate hp;
                    auto kind = pj.at("kind").get<std::string>();
                    if (kind == "min_successful_interactions") {
                        hp.kind = HistoryPredicate::Kind::min_successful_interactions;
                        hp.n = pj.at("n").get<std::uint64_t>();
                    } else if (kind == "no_outcome_in_window") {
                        hp.kind = HistoryPredicate::Kind::no_outcome_in_window;
                        hp.outcome = outcome_from_name(pj.at("outcome").get<std::string>());
                    } else {
                        raise(Errc::invalid_config, "unknown predicate kind '" + kind + "'");
                    }
                    hp.window_ms = pj.at("window_ms").get<DurationMs>();
                    ps.predicates[rn].push_back(hp);
                }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::invalid_config, std::string("policy document: ") + e.what());
    }
    ps.validate();
    return ps;
}

inline nlohmann::json policy_set_to_json(const PolicySet& ps) {
    nlohmann::json roles(nlohmann::json::value_t::object);
    for (const auto& [name, role] : ps.roles) {
        auto perms = nlohmann::json::array();
        for (const auto& p : role.permissions)
            perms.push_back({{"resource", p.resource}, {"action", p.action}});
        roles[name] = perms;
    }
    nlohmann::json assignments(nlohmann::json::value_t::object);
    for (const auto& [principal, names] : ps.assignments) assignments[principal] = names;
    nlohmann::json predicates(nlohmann::json::value_t::object);
    for (const auto& [rn, preds] : ps.predicates) {
        auto arr = nlohmann::json::array();
        for (const auto& hp : preds) {
            nlohmann::json pj{{"window_ms", hp.window_ms}};
            if (hp.kind == HistoryPredicate::Kind::min_successful_interactions) {
                pj["kind"] = "min_successful_interactions";
                pj["n"] = hp.n;
            } else {
                pj["kind"] = "no_outcome_in_window";
                pj["outcome"] = std::string(outcome_name(hp.outcome));
            }
            arr.push_back(pj);
        }
        predicates[rn] = arr;
    }
    return {{"roles", roles}, {"assignments", assignments}, {"predicates", predicates}};
}

inline PolicySet load_policy_set(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(Errc::io_error, "cannot open policy file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("policy file: ") + e.what());
    }
    return policy_set_from_json(j);
}

} // namespace ipbac
