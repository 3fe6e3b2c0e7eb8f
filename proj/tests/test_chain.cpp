#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "ipbac/chain.hpp"

using namespace ipbac;

namespace {

RecordInput basic_input(const std::string& principal, TimestampMs at,
                        Outcome outcome = Outcome::Success,
                        const std::string& resource = "incident/1") {
    RecordInput in;
    in.principal = PrincipalId{principal};
    in.interaction.event_ref = "evt-" + std::to_string(at);
    in.interaction.participants = {PrincipalId{principal}, PrincipalId{"peer"}};
    in.resource = resource;
    in.action = "read";
    in.outcome = outcome;
    in.recorded_at = at;
    return in;
}

std::vector<std::string> read_lines(const std::string& rel) {
    std::ifstream f(std::string(IPBAC_TEST_DIR) + "/" + rel);
    REQUIRE(f.is_open());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    return lines;
}

} // namespace

TEST_CASE("appends link up from the genesis hash") {
    ProvenanceChain chain(PrincipalId{"alice"});
    CHECK(chain.head_hash() == kGenesisHash);

    const auto& r1 = chain.append(basic_input("alice", 1000));
    CHECK(r1.prev_hash == kGenesisHash);
    CHECK(r1.record_hash == compute_record_hash(r1));

    const auto& r2 = chain.append(basic_input("alice", 2000));
    CHECK(r2.prev_hash == chain.records()[0].record_hash);
    CHECK(chain.head_hash() == r2.record_hash);
    CHECK(chain.size() == 2);
    CHECK(chain.verify().valid);
}

TEST_CASE("append rejects foreign principals and malformed inputs") {
    ProvenanceChain chain(PrincipalId{"alice"});
    CHECK_THROWS_MATCHES(chain.append(basic_input("bob", 1000)), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::principal_mismatch; }));

    auto bad = basic_input("alice", 1000);
    bad.interaction.participants.clear(); // < 2 participants
    CHECK_THROWS_MATCHES(chain.append(bad), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::invalid_record; }));
    CHECK(chain.empty());
}

TEST_CASE("timestamps behind the head are clamped within the skew tolerance") {
    ProvenanceChain chain(PrincipalId{"alice"});
    chain.append(basic_input("alice", 10'000));

    SECTION("small regression clamps up to the head") {
        const auto& r = chain.append(basic_input("alice", 9'000), 5'000);
        CHECK(r.recorded_at == 10'000);
        CHECK(chain.verify().valid);
    }
    SECTION("regression beyond the skew is refused") {
        CHECK_THROWS_MATCHES(chain.append(basic_input("alice", 3'000), 5'000), Error,
                             Catch::Matchers::Predicate<Error>([](const Error& e) {
                                 return e.code() == Errc::chronology_violation;
                             }));
        CHECK(chain.size() == 1);
    }
}

TEST_CASE("query filters by time, resource and outcome") {
    ProvenanceChain chain(PrincipalId{"alice"});
    chain.append(basic_input("alice", 1000, Outcome::Success, "incident/1"));
    chain.append(basic_input("alice", 2000, Outcome::Failure, "incident/2"));
    chain.append(basic_input("alice", 3000, Outcome::Success, "report/9"));

    HistoryFilter any, newer, by_resource, by_outcome, combined;
    newer.since = 2000;
    by_resource.resource = "incident/2";
    by_outcome.outcome = Outcome::Success;
    combined.since = 2500;
    combined.outcome = Outcome::Success;
    CHECK(chain.query(any).size() == 3);
    CHECK(chain.query(newer).size() == 2);
    CHECK(chain.query(by_resource).size() == 1);
    CHECK(chain.query(by_outcome).size() == 2);
    CHECK(chain.query(combined).size() == 1);
}

TEST_CASE("verify pinpoints in-memory tampering") {
    ProvenanceChain chain(PrincipalId{"alice"});
    for (int i = 0; i < 4; ++i) chain.append(basic_input("alice", 1000 * (i + 1)));
    REQUIRE(chain.verify().valid);

    SECTION("edited payload breaks the record hash") {
        ProvenanceChain tampered(PrincipalId{"alice"});
        for (std::size_t i = 0; i < chain.records().size(); ++i) {
            auto r = chain.records()[i];
            if (i == 2) r.resource = "incident/99";
            tampered.restore(std::move(r));
        }
        auto report = tampered.verify();
        CHECK_FALSE(report.valid);
        REQUIRE(report.first_bad_index.has_value());
        CHECK(*report.first_bad_index == 2);
    }
    SECTION("recomputing the hash after an edit still breaks the link") {
        ProvenanceChain tampered(PrincipalId{"alice"});
        for (std::size_t i = 0; i < chain.records().size(); ++i) {
            auto r = chain.records()[i];
            if (i == 1) {
                r.outcome = Outcome::Denied;
                r.record_hash = compute_record_hash(r); // forged hash
            }
            tampered.restore(std::move(r));
        }
        auto report = tampered.verify();
        CHECK_FALSE(report.valid);
        CHECK(*report.first_bad_index == 2); // record 2's prev no longer matches
    }
}

TEST_CASE("the golden 3-record chain file verifies and loads") {
    auto lines = read_lines("golden/chain3.log");
    REQUIRE(lines.size() == 3);
    PrincipalId alice{"alice"};
    CHECK(verify_chain_lines(lines, &alice).valid);

    ProvenanceChain chain(alice);
    for (const auto& l : lines) {
        auto parsed = parse_chain_line(l);
        REQUIRE(parsed.has_value());
        chain.restore(std::move(parsed->record));
    }
    CHECK(chain.verify().valid);
    CHECK(chain.size() == 3);
    CHECK(chain.aggregates().total_interactions == 3);
    CHECK(chain.aggregates().successful_interactions == 1);
    CHECK(chain.records()[2].outcome == Outcome::Denied);
}

TEST_CASE("verify_chain_lines catches every class of line damage") {
    ProvenanceChain chain(PrincipalId{"alice"});
    for (int i = 0; i < 3; ++i) chain.append(basic_input("alice", 1000 * (i + 1)));
    std::vector<std::string> lines;
    for (const auto& r : chain.records()) lines.push_back(format_chain_line(r));
    REQUIRE(verify_chain_lines(lines).valid);

    SECTION("garbage line") {
        lines[1] = "not hex at all";
        auto rep = verify_chain_lines(lines);
        CHECK_FALSE(rep.valid);
        CHECK(*rep.first_bad_index == 1);
    }
    SECTION("body bit flip") {
        lines[1][4] = lines[1][4] == '0' ? '1' : '0';
        auto rep = verify_chain_lines(lines);
        CHECK_FALSE(rep.valid);
        CHECK(*rep.first_bad_index <= 1);
    }
    SECTION("stored-hash bit flip") {
        lines[2][lines[2].size() - 1] = lines[2].back() == '0' ? '1' : '0';
        auto rep = verify_chain_lines(lines);
        CHECK_FALSE(rep.valid);
        CHECK(*rep.first_bad_index == 2);
    }
    SECTION("deleted line breaks the next link") {
        lines.erase(lines.begin() + 1);
        auto rep = verify_chain_lines(lines);
        CHECK_FALSE(rep.valid);
        CHECK(*rep.first_bad_index == 1);
    }
    SECTION("reordered lines") {
        std::swap(lines[0], lines[1]);
        auto rep = verify_chain_lines(lines);
        CHECK_FALSE(rep.valid);
        CHECK(*rep.first_bad_index == 0);
    }
    SECTION("wrong principal") {
        PrincipalId bob{"bob"};
        auto rep = verify_chain_lines(lines, &bob);
        CHECK_FALSE(rep.valid);
        CHECK(*rep.first_bad_index == 0);
    }
    SECTION("truncation from the tail is indistinguishable from never-written") {
        lines.pop_back();
        CHECK(verify_chain_lines(lines).valid); // prefix remains a valid chain
    }
}

TEST_CASE("set_half_life replays the chain identically to a reload") {
    ProvenanceChain chain(PrincipalId{"alice"});
    for (int i = 0; i < 5; ++i)
        chain.append(basic_input("alice", 1'000'000 * (i + 1),
                                 i % 2 ? Outcome::Failure : Outcome::Success));
    chain.set_half_life(60'000);

    ProvenanceChain rebuilt(PrincipalId{"alice"}, 60'000);
    for (const auto& r : chain.records()) rebuilt.restore(r);
    CHECK(chain.aggregates() == rebuilt.aggregates());
}
