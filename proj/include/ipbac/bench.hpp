#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipbac/config.hpp"
#include "ipbac/decision.hpp"
#include "ipbac/error.hpp"
#include "ipbac/policy.hpp"
#include "ipbac/store.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

/// splitmix64: tiny, seedable, identical across platforms. The standard
/// <random> distributions are implementation-defined, which would break the
/// "same seed, same workload" guarantee, so sampling is done by hand here.
struct DetRng {
    std::uint64_t state = 0;

    explicit DetRng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection-free modulo is fine here: n is
    /// tiny relative to 2^64, so the bias is unmeasurable.
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    bool chance(double p) { return next_unit() < p; }
};

struct WorkloadSpec {
    std::uint64_t seed = 20240601;
    std::size_t num_principals = 20;
    std::size_t num_resources = 64;
    double role_assignment_density = 0.05; // chance of each extra area role
    double out_of_role_fraction = 0.25;    // requests outside assigned permissions
    std::size_t history_len = 2;           // pre-seeded records per principal
    std::vector<std::size_t> checkpoints{10, 50, 100, 200, 500};
    // shape knobs beyond the headline fields (committed defaults; see README)
    std::size_t num_requests = 0;          // 0 -> last checkpoint
    std::size_t num_areas = 8;             // resource classes, one role each
    double home_bias = 0.8;                // in-role requests aimed at the home area
    double foreign_fraction = 1.0;         // out-of-role requests to unassigned areas
    std::int64_t preseed_age_days = 75;    // how stale the seeded history is

    std::size_t effective_requests() const {
        if (num_requests) return num_requests;
        return checkpoints.empty() ? 0 : checkpoints.back();
    }

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!num_principals || !num_resources || !num_areas)
            raise(Errc::invalid_config, "workload needs principals, resources and areas");
        if (!in01(role_assignment_density) || !in01(out_of_role_fraction) || !in01(home_bias) ||
            !in01(foreign_fraction))
            raise(Errc::invalid_config, "workload densities must be in [0,1]");
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            if (checkpoints[i] <= checkpoints[i - 1])
                raise(Errc::invalid_config, "checkpoints must be strictly increasing");
        if (effective_requests() == 0) raise(Errc::invalid_config, "workload has no requests");
        if (!checkpoints.empty() && effective_requests() < checkpoints.back())
            raise(Errc::invalid_config, "num_requests smaller than the last checkpoint");
    }
};

inline void from_json(const nlohmann::json& j, WorkloadSpec& s) {
    s = WorkloadSpec{};
    try {
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("num_principals")) s.num_principals = j.at("num_principals").get<std::size_t>();
        if (j.contains("num_resources")) s.num_resources = j.at("num_resources").get<std::size_t>();
        if (j.contains("role_assignment_density"))
            s.role_assignment_density = j.at("role_assignment_density").get<double>();
        if (j.contains("out_of_role_fraction"))
            s.out_of_role_fraction = j.at("out_of_role_fraction").get<double>();
        if (j.contains("history_len")) s.history_len = j.at("history_len").get<std::size_t>();
        if (j.contains("checkpoints")) s.checkpoints = j.at("checkpoints").get<std::vector<std::size_t>>();
        if (j.contains("num_requests")) s.num_requests = j.at("num_requests").get<std::size_t>();
        if (j.contains("num_areas")) s.num_areas = j.at("num_areas").get<std::size_t>();
        if (j.contains("home_bias")) s.home_bias = j.at("home_bias").get<double>();
        if (j.contains("foreign_fraction")) s.foreign_fraction = j.at("foreign_fraction").get<double>();
        if (j.contains("preseed_age_days"))
            s.preseed_age_days = j.at("preseed_age_days").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::invalid_config, std::string("workload spec: ") + e.what());
    }
}

inline WorkloadSpec load_workload_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(Errc::io_error, "cannot open workload spec: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("workload spec: ") + e.what());
    }
    auto s = j.get<WorkloadSpec>();
    s.validate();
    return s;
}

struct Workload {
    PolicySet policies;
    std::vector<RecordInput> preseed;      // chronological, across all principals
    std::vector<AccessRequest> requests;   // the measured stream
    std::size_t preseed_total = 0;         // == num_principals * history_len
    TimestampMs base_time = 0;
};

/// Deterministic synthetic workload. Layout:
///   - resources "area{a}/res{i}", one role per area granting read on
///     "area{a}/*";
///   - every principal holds their home-area role (p mod areas) plus extra
///     area roles at the configured density;
///   - pre-seeded history: `history_len` stale records per principal in the
///     home area, alternating success/failure;
///   - request stream: in-role reads (mostly home area), and out-of-role
///     requests split between home-area writes (no role grants write, but
///     history there is relevant) and reads of unassigned areas.
inline Workload generate_workload(const WorkloadSpec& spec) {
    spec.validate();
    DetRng rng(spec.seed);
    Workload w;
    w.base_time = 1'755'000'000'000; // fixed logical epoch; nothing reads wall clock

    std::size_t areas = std::min(spec.num_areas, spec.num_resources);
    auto area_of = [&](std::size_t r) { return r % areas; };
    auto resource_name = [&](std::size_t r) {
        return "area" + std::to_string(area_of(r)) + "/res" + std::to_string(r);
    };
    auto principal_name = [](std::size_t p) { return "user" + std::to_string(p); };

    for (std::size_t a = 0; a < areas; ++a) {
        Role role;
        role.name = "role-area" + std::to_string(a);
        role.permissions.insert({"area" + std::to_string(a) + "/*", "read"});
        w.policies.roles.emplace(role.name, role);
    }

    std::vector<std::vector<std::size_t>> assigned(spec.num_principals);
    for (std::size_t p = 0; p < spec.num_principals; ++p) {
        std::size_t home = p % areas;
        assigned[p].push_back(home);
        for (std::size_t a = 0; a < areas; ++a)
            if (a != home && rng.chance(spec.role_assignment_density)) assigned[p].push_back(a);
        std::sort(assigned[p].begin(), assigned[p].end());
        for (auto a : assigned[p])
            w.policies.assignments[principal_name(p)].insert("role-area" + std::to_string(a));
    }
    w.policies.validate();

    // resources grouped by area for sampling
    std::vector<std::vector<std::size_t>> by_area(areas);
    for (std::size_t r = 0; r < spec.num_resources; ++r) by_area[area_of(r)].push_back(r);

    TimestampMs preseed_start = w.base_time - spec.preseed_age_days * 86'400'000;
    for (std::size_t p = 0; p < spec.num_principals; ++p) {
        std::size_t home = p % areas;
        for (std::size_t i = 0; i < spec.history_len; ++i) {
            RecordInput in;
            in.principal = PrincipalId{principal_name(p)};
            in.interaction.event_ref = "seed-" + std::to_string(p) + "-" + std::to_string(i);
            in.interaction.participants = {in.principal, PrincipalId{"registry"}};
            const auto& pool = by_area[home];
            in.resource = resource_name(pool[rng.below(pool.size())]);
            in.action = "read";
            in.outcome = (i % 2 == 0) ? Outcome::Success : Outcome::Failure;
            in.recorded_at = preseed_start + static_cast<TimestampMs>(p) * 60'000 +
                             static_cast<TimestampMs>(i) * 1'000;
            w.preseed.push_back(std::move(in));
        }
    }
    w.preseed_total = w.preseed.size();
    std::sort(w.preseed.begin(), w.preseed.end(),
              [](const RecordInput& a, const RecordInput& b) { return a.recorded_at < b.recorded_at; });

    std::size_t n = spec.effective_requests();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = rng.below(spec.num_principals);
        std::size_t home = p % areas;
        AccessRequest req;
        req.principal = PrincipalId{principal_name(p)};
        req.requested_at = w.base_time + static_cast<TimestampMs>(k) * 1'000;

        bool out_of_role = rng.chance(spec.out_of_role_fraction);
        if (out_of_role && areas > 1 && rng.chance(spec.foreign_fraction)) {
            // read in an unassigned area
            std::vector<std::size_t> foreign;
            for (std::size_t a = 0; a < areas; ++a)
                if (!std::binary_search(assigned[p].begin(), assigned[p].end(), a))
                    foreign.push_back(a);
            if (!foreign.empty()) {
                const auto& pool = by_area[foreign[rng.below(foreign.size())]];
                req.resource = resource_name(pool[rng.below(pool.size())]);
                req.action = "read";
                w.requests.push_back(std::move(req));
                continue;
            }
            // fully assigned principal: fall through to a home-area write
        }
        if (out_of_role) {
            // write in the home area: no role grants writes, but the
            // principal's history lives here
            const auto& pool = by_area[home];
            req.resource = resource_name(pool[rng.below(pool.size())]);
            req.action = "write";
        } else {
            std::size_t a = (assigned[p].size() > 1 && !rng.chance(spec.home_bias))
                                ? assigned[p][rng.below(assigned[p].size())]
                                : home;
            const auto& pool = by_area[a];
            req.resource = resource_name(pool[rng.below(pool.size())]);
            req.action = "read";
        }
        w.requests.push_back(std::move(req));
    }
    return w;
}

struct CheckpointRow {
    std::size_t checkpoint = 0;
    std::size_t rbac_grants = 0;
    std::size_t ipbac_grants = 0;
};

struct LatencySummary {
    double median_us = 0.0;
    double p99_us = 0.0;
    double post_warmup_cov = 0.0; // stddev/mean over requests after the warmup index
    std::size_t warmup = 100;
};

struct ComparisonReport {
    std::vector<CheckpointRow> rows;
    std::vector<double> latency_us; // per-request, from the full-pipeline run
    LatencySummary latency;
    std::size_t preseed_total = 0;
    std::size_t requests_total = 0;
};

inline LatencySummary summarize_latency(const std::vector<double>& us, std::size_t warmup = 100) {
    LatencySummary s;
    s.warmup = warmup;
    if (us.empty()) return s;
    std::vector<double> sorted = us;
    std::sort(sorted.begin(), sorted.end());
    s.median_us = sorted[sorted.size() / 2];
    s.p99_us = sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(
                                                      static_cast<double>(sorted.size()) * 0.99))];
    if (us.size() > warmup + 1) {
        double mean = 0.0;
        std::size_t n = us.size() - warmup;
        for (std::size_t i = warmup; i < us.size(); ++i) mean += us[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = warmup; i < us.size(); ++i) var += (us[i] - mean) * (us[i] - mean);
        var /= static_cast<double>(n - 1);
        s.post_warmup_cov = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
    }
    return s;
}

/// Replays the stream against one engine mode over a fresh in-memory copy
/// of the initial state. Grant counts are cumulative at each checkpoint.
/// Latencies (microseconds per decide) are captured when `latency_out` is
/// given.
inline std::vector<std::size_t> replay_grants(const Workload& w, const EngineConfig& config,
                                              EngineMode mode, const std::vector<std::size_t>& checkpoints,
                                              std::vector<double>* latency_out = nullptr) {
    ChainStore store({}); // ephemeral
    DecisionEngine engine(store, w.policies, config, mode);
    for (const auto& in : w.preseed) engine.record_interaction(in);

    std::vector<std::size_t> grants_at;
    std::size_t grants = 0;
    std::size_t next_cp = 0;
    for (std::size_t k = 0; k < w.requests.size(); ++k) {
        if (latency_out) {
            auto t0 = std::chrono::steady_clock::now();
            auto res = engine.decide(w.requests[k]);
            auto t1 = std::chrono::steady_clock::now();
            latency_out->push_back(
                std::chrono::duration<double, std::micro>(t1 - t0).count());
            if (res.decision.is_grant()) ++grants;
        } else {
            if (engine.decide(w.requests[k]).decision.is_grant()) ++grants;
        }
        while (next_cp < checkpoints.size() && k + 1 == checkpoints[next_cp]) {
            grants_at.push_back(grants);
            ++next_cp;
        }
    }
    while (next_cp++ < checkpoints.size()) grants_at.push_back(grants);
    return grants_at;
}

/// The side-by-side run: identical initial state, identical request stream,
/// RBAC-only versus the full pipeline. Single-threaded and deterministic
/// for a given (spec seed, config).
inline ComparisonReport run_comparison(const Workload& w, const WorkloadSpec& spec,
                                       const EngineConfig& config) {
    ComparisonReport rep;
    rep.preseed_total = w.preseed_total;
    rep.requests_total = w.requests.size();

    auto rbac = replay_grants(w, config, EngineMode::rbac_only, spec.checkpoints);
    auto ipbac = replay_grants(w, config, EngineMode::full, spec.checkpoints, &rep.latency_us);
    for (std::size_t i = 0; i < spec.checkpoints.size(); ++i)
        rep.rows.push_back({spec.checkpoints[i], rbac[i], ipbac[i]});
    rep.latency = summarize_latency(rep.latency_us);
    return rep;
}

/// In-process per-request latency of the full pipeline on the given
/// workload (the comparison run minus the RBAC-only leg).
inline std::vector<double> measure_latency(const Workload& w, const EngineConfig& config) {
    std::vector<double> us;
    replay_grants(w, config, EngineMode::full, {}, &us);
    return us;
}

// --- output files -----------------------------------------------------------

inline void write_grants_csv(const ComparisonReport& rep, const std::string& path) {
    std::ofstream f(path);
    if (!f) raise(Errc::io_error, "cannot write " + path);
    f << "checkpoint,rbac,ipbac\n";
    for (const auto& r : rep.rows) f << r.checkpoint << ',' << r.rbac_grants << ',' << r.ipbac_grants << '\n';
}

inline void write_latency_csv(const std::vector<double>& us, const std::string& path) {
    std::ofstream f(path);
    if (!f) raise(Errc::io_error, "cannot write " + path);
    f << "index,micros\n";
    for (std::size_t i = 0; i < us.size(); ++i) f << i << ',' << us[i] << '\n';
}

inline void write_report_txt(const ComparisonReport& rep, const WorkloadSpec& spec,
                             const EngineConfig& config, const std::string& path) {
    std::ofstream f(path);
    if (!f) raise(Errc::io_error, "cannot write " + path);
    f << "workload: seed=" << spec.seed << " principals=" << spec.num_principals
      << " resources=" << spec.num_resources << " requests=" << rep.requests_total
      << " preseeded_records=" << rep.preseed_total << '\n';
    f << "engine: alpha=" << config.alpha << " theta=" << config.theta << '\n';
    f << '\n' << "grants (cumulative)\n";
    f << "  checkpoint   rbac  ipbac\n";
    for (const auto& r : rep.rows) {
        f << "  " << r.checkpoint;
        for (std::size_t pad = std::to_string(r.checkpoint).size(); pad < 11; ++pad) f << ' ';
        f << ' ' << r.rbac_grants << "     " << r.ipbac_grants << '\n';
    }
    f << '\n' << "latency (full pipeline, in-process)\n";
    f << "  median_us=" << rep.latency.median_us << " p99_us=" << rep.latency.p99_us
      << " post_warmup_cov=" << rep.latency.post_warmup_cov << " (warmup=" << rep.latency.warmup
      << " requests)\n";
}

} // namespace ipbac
