#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>

#include "ipbac/serialize.hpp"

using namespace ipbac;

namespace {

std::string read_file(const std::string& rel) {
    std::ifstream f(std::string(IPBAC_TEST_DIR) + "/" + rel, std::ios::binary);
    REQUIRE(f.is_open());
    std::string all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return all;
}

std::string strip_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

/// The record the reference encoder pins (see tests/oracle/encode_record.py).
ProvenanceRecord sample_record() {
    ProvenanceRecord r;
    r.principal = PrincipalId{"alice"};
    r.interaction.event_ref = "evt-0001";
    r.interaction.participants = {PrincipalId{"alice"}, PrincipalId{"bob"}};
    r.interaction.messages = {
        {0, PrincipalId{"alice"}, PrincipalId{"bob"}, sha256(std::string_view("hello"))},
        {1, PrincipalId{"bob"}, PrincipalId{"alice"}, sha256(std::string_view("ack"))},
    };
    r.resource = "incident/42";
    r.action = "read";
    r.outcome = Outcome::Success;
    r.context_tags = {"emergency", "after-hours"};
    r.recorded_at = 1723600000123;
    r.prev_hash = kGenesisHash;
    return r;
}

} // namespace

TEST_CASE("canonical encoding matches the reference encoder byte for byte") {
    auto rec = sample_record();
    auto bytes = serialize_record(rec);
    CHECK(to_hex(std::span(bytes.data(), bytes.size())) ==
          strip_newline(read_file("golden/sample_record.hex")));
    CHECK(to_hex(compute_record_hash(rec)) == strip_newline(read_file("golden/sample_record.hash")));
}

TEST_CASE("parse_record inverts serialize_record") {
    auto rec = sample_record();
    auto bytes = serialize_record(rec);
    auto back = parse_record(std::span(bytes.data(), bytes.size()));
    CHECK(back.principal == rec.principal);
    CHECK(back.interaction.event_ref == rec.interaction.event_ref);
    CHECK(back.interaction.participants == rec.interaction.participants);
    REQUIRE(back.interaction.messages.size() == 2);
    CHECK(back.interaction.messages[1].sender.id == "bob");
    CHECK(back.interaction.messages[1].payload_digest == rec.interaction.messages[1].payload_digest);
    CHECK(back.resource == rec.resource);
    CHECK(back.action == rec.action);
    CHECK(back.outcome == rec.outcome);
    CHECK(back.context_tags == rec.context_tags);
    CHECK(back.recorded_at == rec.recorded_at);
    CHECK(back.prev_hash == rec.prev_hash);
    CHECK(serialize_record(back) == bytes);
}

TEST_CASE("parse_record rejects malformed byte streams") {
    auto bytes = serialize_record(sample_record());

    SECTION("truncation") {
        bytes.pop_back();
        CHECK_THROWS_MATCHES(parse_record(std::span(bytes.data(), bytes.size())), Error,
                             Catch::Matchers::Predicate<Error>(
                                 [](const Error& e) { return e.code() == Errc::parse_error; }));
    }
    SECTION("trailing bytes") {
        bytes.push_back(0);
        CHECK_THROWS_AS(parse_record(std::span(bytes.data(), bytes.size())), Error);
    }
    SECTION("outcome byte out of range") {
        // outcome sits right before the tag count; find it from the back:
        // tags ("after-hours","emergency") + i64 + 32-byte prev_hash.
        std::size_t tail = 4 + (4 + 11) + (4 + 9) + 8 + 32; // u32 count, two strings, i64, hash
        bytes[bytes.size() - tail - 1] = 7;
        CHECK_THROWS_AS(parse_record(std::span(bytes.data(), bytes.size())), Error);
    }
    SECTION("hostile element count fails the parse instead of allocating") {
        // The participant count follows principal ("alice") and event_ref
        // ("evt-0001"); forcing its high byte claims ~4 billion entries,
        // which must be rejected before any reserve() sees it.
        std::size_t count_at = (4 + 5) + (4 + 8);
        bytes[count_at] = 0xff;
        CHECK_THROWS_MATCHES(parse_record(std::span(bytes.data(), bytes.size())), Error,
                             Catch::Matchers::Predicate<Error>(
                                 [](const Error& e) { return e.code() == Errc::parse_error; }));
    }
}

TEST_CASE("chain line format round-trips and validates hashes") {
    auto rec = sample_record();
    rec.record_hash = compute_record_hash(rec);
    auto line = format_chain_line(rec);

    auto parsed = parse_chain_line(line);
    REQUIRE(parsed.has_value());
    CHECK(parsed->record.record_hash == rec.record_hash);
    CHECK(parsed->computed_hash == rec.record_hash);
    CHECK(parsed->record.principal.id == "alice");
}

TEST_CASE("chain line parser is strict") {
    auto rec = sample_record();
    rec.record_hash = compute_record_hash(rec);
    auto line = format_chain_line(rec);

    SECTION("no tab") { CHECK_FALSE(parse_chain_line("abcdef").has_value()); }
    SECTION("two tabs") { CHECK_FALSE(parse_chain_line(line + "\tdeadbeef").has_value()); }
    SECTION("odd hex length") { CHECK_FALSE(parse_chain_line(line.substr(1)).has_value()); }
    SECTION("uppercase hex rejected") {
        // lowercase is the format; a case flip must not round-trip silently
        auto upper = line;
        for (auto& c : upper)
            if (c >= 'a' && c <= 'f') {
                c = static_cast<char>(c - 'a' + 'A');
                break;
            }
        CHECK_FALSE(parse_chain_line(upper).has_value());
    }
    SECTION("non-hex character") {
        auto bad = line;
        bad[0] = 'z';
        CHECK_FALSE(parse_chain_line(bad).has_value());
    }
    SECTION("flipped body bit changes the computed hash") {
        auto bad = line;
        bad[2] = bad[2] == '0' ? '1' : '0';
        auto parsed = parse_chain_line(bad);
        if (parsed) CHECK(parsed->computed_hash != parsed->record.record_hash);
    }
}

TEST_CASE("hex codec") {
    CHECK(to_hex(sha256(std::string_view(""))) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    auto bytes = from_hex("00ff10");
    REQUIRE(bytes.has_value());
    CHECK(*bytes == std::vector<std::uint8_t>{0x00, 0xff, 0x10});
    CHECK_FALSE(from_hex("0F").has_value()); // uppercase rejected
    CHECK_FALSE(from_hex("0").has_value());
    CHECK_FALSE(hash_from_hex("abcd").has_value()); // wrong length
}
