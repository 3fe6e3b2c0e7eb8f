#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ipbac/error.hpp"
#include "ipbac/hash.hpp"

namespace ipbac {

/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;
using DurationMs  = std::int64_t;

inline constexpr DurationMs kDefaultClockSkewMs = 5'000;

/// Party identifier. Non-empty, at most 256 bytes, stable for the lifetime
/// of its chain; exactly one chain exists per principal.
struct PrincipalId {
    std::string id;

    PrincipalId() = default;
    explicit PrincipalId(std::string value) : id(std::move(value)) {}

    bool valid() const { return !id.empty() && id.size() <= 256; }

    friend bool operator==(const PrincipalId&, const PrincipalId&) = default;
    friend auto operator<=>(const PrincipalId&, const PrincipalId&) = default;
};

/// A protocol or service execution that happened in the past, initiated by
/// a principal. Interactions refer to events by id.
struct Event {
    std::string event_id;
    std::string kind;
    PrincipalId initiator;
    TimestampMs occurred_at = 0;

    /// occurred_at must not lie in the future of `now` beyond the skew
    /// tolerance; ids are non-empty.
    bool valid(TimestampMs now, DurationMs skew_ms = kDefaultClockSkewMs) const {
        return !event_id.empty() && initiator.valid() && occurred_at <= now + skew_ms;
    }
};

struct Message {
    std::uint32_t seq = 0;
    PrincipalId sender;
    PrincipalId receiver;
    Hash32 payload_digest{};
};

/// Ordered sequence of messages exchanged between two or more principals
/// for one event.
struct Interaction {
    std::string event_ref;
    std::vector<PrincipalId> participants; // length >= 2
    std::vector<Message> messages;         // seq 0..n-1, no gaps

    bool valid() const {
        if (event_ref.empty() || participants.size() < 2) return false;
        for (const auto& p : participants)
            if (!p.valid()) return false;
        auto is_participant = [&](const PrincipalId& who) {
            for (const auto& p : participants)
                if (p == who) return true;
            return false;
        };
        for (std::size_t i = 0; i < messages.size(); ++i) {
            const auto& m = messages[i];
            if (m.seq != i) return false;
            if (!is_participant(m.sender) || !is_participant(m.receiver)) return false;
        }
        return true;
    }
};

enum class Outcome : std::uint8_t {
    Success = 0, // interaction executed and succeeded
    Failure = 1, // interaction executed but failed
    Denied  = 2, // access refused by the engine
};

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Failure: return "failure";
        case Outcome::Denied:  return "denied";
    }
    return "unknown";
}

inline Outcome outcome_from_name(const std::string& s) {
    if (s == "success") return Outcome::Success;
    if (s == "failure") return Outcome::Failure;
    if (s == "denied") return Outcome::Denied;
    raise(Errc::parse_error, "unknown outcome '" + s + "'");
}

/// One link of a principal's provenance chain. record_hash covers every
/// other field (see serialize.hpp); prev_hash is the preceding record's
/// record_hash, 32 zero bytes for the genesis record.
struct ProvenanceRecord {
    PrincipalId principal;
    Interaction interaction;
    std::string resource;
    std::string action; // read | write | delete | execute (extensible)
    Outcome outcome = Outcome::Success;
    std::set<std::string> context_tags;
    TimestampMs recorded_at = 0;
    Hash32 prev_hash{};
    Hash32 record_hash{};
};

/// append_record input: everything the caller supplies; the chain fills in
/// recorded_at clamping, prev_hash and record_hash.
struct RecordInput {
    PrincipalId principal;
    Interaction interaction;
    std::string resource;
    std::string action;
    Outcome outcome = Outcome::Success;
    std::set<std::string> context_tags;
    TimestampMs recorded_at = 0;

    bool valid() const {
        return principal.valid() && interaction.valid() && !resource.empty() && !action.empty();
    }
};

/// A principal's attempt to perform `action` on `resource`.
struct AccessRequest {
    PrincipalId principal;
    std::string resource;
    std::string action;
    std::set<std::string> context_tags;
    TimestampMs requested_at = 0;

    bool valid() const { return principal.valid() && !resource.empty() && !action.empty(); }
};

} // namespace ipbac
