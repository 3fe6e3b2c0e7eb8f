#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "ipbac/bench.hpp"

using namespace ipbac;

TEST_CASE("the deterministic rng is the pinned splitmix64") {
    DetRng rng(0);
    // first outputs of splitmix64 seeded with 0 (cross-checked against the
    // published reference sequence)
    CHECK(rng.next_u64() == 0xe220a8397b1dcdafull);
    CHECK(rng.next_u64() == 0x6e789e6aa1b965f4ull);
    CHECK(rng.next_u64() == 0x06c45d188009454full);

    DetRng unit(20240601);
    for (int i = 0; i < 1000; ++i) {
        double u = unit.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("workload generation is deterministic in the seed") {
    WorkloadSpec spec;
    spec.num_principals = 10;
    spec.checkpoints = {10, 50};

    auto a = generate_workload(spec);
    auto b = generate_workload(spec);
    REQUIRE(a.requests.size() == b.requests.size());
    for (std::size_t i = 0; i < a.requests.size(); ++i) {
        CHECK(a.requests[i].principal == b.requests[i].principal);
        CHECK(a.requests[i].resource == b.requests[i].resource);
        CHECK(a.requests[i].action == b.requests[i].action);
    }
    REQUIRE(a.preseed.size() == b.preseed.size());
    for (std::size_t i = 0; i < a.preseed.size(); ++i)
        CHECK(a.preseed[i].recorded_at == b.preseed[i].recorded_at);

    spec.seed += 1;
    auto c = generate_workload(spec);
    bool any_differs = false;
    for (std::size_t i = 0; i < std::min(a.requests.size(), c.requests.size()); ++i)
        if (a.requests[i].principal != c.requests[i].principal ||
            a.requests[i].resource != c.requests[i].resource)
            any_differs = true;
    CHECK(any_differs);
}

TEST_CASE("generated workloads respect their spec") {
    WorkloadSpec spec;
    auto w = generate_workload(spec);

    CHECK(w.preseed_total == spec.num_principals * spec.history_len);
    CHECK(w.preseed.size() == w.preseed_total);
    CHECK(w.requests.size() == spec.effective_requests());
    CHECK_NOTHROW(w.policies.validate());
    CHECK(w.policies.roles.size() == spec.num_areas);

    SECTION("preseed is chronological and in the past") {
        for (std::size_t i = 1; i < w.preseed.size(); ++i)
            CHECK(w.preseed[i - 1].recorded_at <= w.preseed[i].recorded_at);
        CHECK(w.preseed.back().recorded_at < w.base_time);
    }
    SECTION("request timestamps advance strictly") {
        for (std::size_t i = 1; i < w.requests.size(); ++i)
            CHECK(w.requests[i - 1].requested_at < w.requests[i].requested_at);
    }
    SECTION("every principal holds their home-area role") {
        for (std::size_t p = 0; p < spec.num_principals; ++p) {
            auto it = w.policies.assignments.find("user" + std::to_string(p));
            REQUIRE(it != w.policies.assignments.end());
            CHECK(it->second.contains("role-area" + std::to_string(p % spec.num_areas)));
        }
    }
}

TEST_CASE("workload spec validation") {
    WorkloadSpec spec;
    SECTION("checkpoints must increase") {
        spec.checkpoints = {10, 10};
        CHECK_THROWS_MATCHES(spec.validate(), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.code() == Errc::invalid_config;
                             }));
    }
    SECTION("request count cannot undershoot the last checkpoint") {
        spec.num_requests = 100;
        spec.checkpoints = {10, 500};
        CHECK_THROWS_AS(spec.validate(), Error);
    }
    SECTION("densities are probabilities") {
        spec.out_of_role_fraction = 1.5;
        CHECK_THROWS_AS(spec.validate(), Error);
    }
}

TEST_CASE("grant counts: ipbac is a superset of rbac on the same stream") {
    WorkloadSpec spec;
    spec.num_principals = 12;
    spec.checkpoints = {10, 50, 100, 200};
    auto w = generate_workload(spec);
    auto report = run_comparison(w, spec, {});

    REQUIRE(report.rows.size() == 4);
    std::size_t prev_rbac = 0, prev_ipbac = 0;
    for (const auto& row : report.rows) {
        CHECK(row.ipbac_grants >= row.rbac_grants); // fuzzy stage only adds grants
        CHECK(row.rbac_grants >= prev_rbac);        // cumulative counters
        CHECK(row.ipbac_grants >= prev_ipbac);
        prev_rbac = row.rbac_grants;
        prev_ipbac = row.ipbac_grants;
    }
    CHECK(report.latency_us.size() == w.requests.size());
    CHECK(report.preseed_total == w.preseed_total);
}

TEST_CASE("with no out-of-role requests, both modes grant identically") {
    WorkloadSpec spec;
    spec.num_principals = 12;
    spec.out_of_role_fraction = 0.0;
    spec.checkpoints = {50, 100};
    auto w = generate_workload(spec);
    auto report = run_comparison(w, spec, {});
    for (const auto& row : report.rows) CHECK(row.rbac_grants == row.ipbac_grants);
}

TEST_CASE("grant replay is deterministic") {
    WorkloadSpec spec;
    spec.num_principals = 12;
    spec.checkpoints = {50, 100};
    auto w = generate_workload(spec);
    auto a = replay_grants(w, {}, EngineMode::full, spec.checkpoints);
    auto b = replay_grants(w, {}, EngineMode::full, spec.checkpoints);
    CHECK(a == b);
}

TEST_CASE("latency summary statistics") {
    std::vector<double> flat(300, 10.0);
    auto s = summarize_latency(flat, 100);
    CHECK(s.median_us == 10.0);
    CHECK(s.p99_us == 10.0);
    CHECK(s.post_warmup_cov == 0.0);

    std::vector<double> spiky(300, 10.0);
    spiky[0] = 10'000.0; // warmup outliers are excluded from the CoV
    auto t = summarize_latency(spiky, 100);
    CHECK(t.post_warmup_cov == 0.0);
    CHECK(summarize_latency({}, 100).median_us == 0.0);
}

TEST_CASE("workload spec loads from JSON with defaults for absent fields") {
    auto j = nlohmann::json{{"seed", 7}, {"num_principals", 5}, {"checkpoints", {5, 25}}};
    auto spec = j.get<WorkloadSpec>();
    CHECK(spec.seed == 7);
    CHECK(spec.num_principals == 5);
    CHECK(spec.checkpoints == std::vector<std::size_t>{5, 25});
    CHECK(spec.num_resources == WorkloadSpec{}.num_resources);
    CHECK(spec.effective_requests() == 25);
}
