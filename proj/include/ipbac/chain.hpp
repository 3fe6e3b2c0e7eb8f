#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ipbac/aggregates.hpp"
#include "ipbac/error.hpp"
#include "ipbac/hash.hpp"
#include "ipbac/serialize.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

struct VerificationReport {
    bool valid = true;
    std::optional<std::size_t> first_bad_index;

    static VerificationReport ok() { return {}; }
    static VerificationReport bad(std::size_t index) { return {false, index}; }
};

struct HistoryFilter {
    std::optional<TimestampMs> since;
    std::optional<std::string> resource;
    std::optional<Outcome> outcome;

    bool matches(const ProvenanceRecord& r) const {
        if (since && r.recorded_at < *since) return false;
        if (resource && r.resource != *resource) return false;
        if (outcome && r.outcome != *outcome) return false;
        return true;
    }
};

/// Per-principal, hash-linked, chronologically ordered record history.
/// Records are only ever appended; interactions tied to one principal never
/// move to another chain.
class ProvenanceChain {
public:
    explicit ProvenanceChain(PrincipalId principal, DurationMs half_life_ms = 2'592'000'000)
        : principal_(std::move(principal)) {
        aggregates_.half_life_ms = half_life_ms;
    }

    const PrincipalId& principal() const { return principal_; }
    const std::vector<ProvenanceRecord>& records() const { return records_; }
    const IncrementalAggregates& aggregates() const { return aggregates_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    Hash32 head_hash() const { return records_.empty() ? kGenesisHash : records_.back().record_hash; }

    TimestampMs head_recorded_at() const {
        return records_.empty() ? std::numeric_limits<TimestampMs>::min()
                                : records_.back().recorded_at;
    }

    /// Completes and links a record: sets prev_hash to the current head and
    /// record_hash over the canonical bytes, then updates the aggregates.
    /// A timestamp behind the head within the skew tolerance is clamped up
    /// to the head (the chain stays non-decreasing); beyond it the append
    /// is refused.
    const ProvenanceRecord& append(const RecordInput& input,
                                   DurationMs clock_skew_ms = kDefaultClockSkewMs) {
        if (input.principal != principal_)
            raise(Errc::principal_mismatch,
                  "record for '" + input.principal.id + "' cannot join chain of '" + principal_.id + "'");
        if (!input.valid())
            raise(Errc::invalid_record, "record input violates interaction invariants");

        ProvenanceRecord rec;
        rec.principal = input.principal;
        rec.interaction = input.interaction;
        rec.resource = input.resource;
        rec.action = input.action;
        rec.outcome = input.outcome;
        rec.context_tags = input.context_tags;
        rec.recorded_at = input.recorded_at;
        if (!records_.empty() && rec.recorded_at < head_recorded_at()) {
            if (head_recorded_at() - rec.recorded_at > clock_skew_ms)
                raise(Errc::chronology_violation,
                      "recorded_at regresses " + std::to_string(head_recorded_at() - rec.recorded_at) +
                          "ms behind the chain head");
            rec.recorded_at = head_recorded_at();
        }
        rec.prev_hash = head_hash();
        rec.record_hash = compute_record_hash(rec);

        records_.push_back(std::move(rec));
        aggregates_.update(records_.back());
        return records_.back();
    }

    /// Used when loading persisted chains: the record arrives complete and
    /// is trusted as stored (verification is a separate, cold read).
    void restore(ProvenanceRecord record) {
        records_.push_back(std::move(record));
        aggregates_.update(records_.back());
    }

    /// Re-derives the aggregates under a new decay half-life by replaying
    /// the whole chain, exactly as a reload from disk would.
    void set_half_life(DurationMs half_life_ms) {
        if (half_life_ms == aggregates_.half_life_ms) return;
        aggregates_ = IncrementalAggregates{};
        aggregates_.half_life_ms = half_life_ms;
        for (const auto& r : records_) aggregates_.update(r);
    }

    /// Records matching every provided filter field, in chain order.
    std::vector<ProvenanceRecord> query(const HistoryFilter& filter) const {
        std::vector<ProvenanceRecord> out;
        for (const auto& r : records_)
            if (filter.matches(r)) out.push_back(r);
        return out;
    }

    /// Full integrity check: recomputed hashes, prev links, principal
    /// binding and timestamp ordering. first_bad_index is the lowest
    /// violating record.
    VerificationReport verify() const {
        Hash32 prev = kGenesisHash;
        TimestampMs last_ts = std::numeric_limits<TimestampMs>::min();
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (r.principal != principal_) return VerificationReport::bad(i);
            if (r.prev_hash != prev) return VerificationReport::bad(i);
            if (compute_record_hash(r) != r.record_hash) return VerificationReport::bad(i);
            if (r.recorded_at < last_ts) return VerificationReport::bad(i);
            prev = r.record_hash;
            last_ts = r.recorded_at;
        }
        return VerificationReport::ok();
    }

private:
    PrincipalId principal_;
    std::vector<ProvenanceRecord> records_;
    IncrementalAggregates aggregates_;
};

/// Verifies persisted chain lines without touching in-memory state. Any
/// malformed line counts as the first bad index; hashes are recomputed over
/// the raw decoded bytes so a single flipped bit anywhere in a line breaks
/// either the hex, the structure, the hash match or the link.
inline VerificationReport verify_chain_lines(const std::vector<std::string>& lines,
                                             const PrincipalId* expected_principal = nullptr) {
    Hash32 prev = kGenesisHash;
    TimestampMs last_ts = std::numeric_limits<TimestampMs>::min();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto parsed = parse_chain_line(lines[i]);
        if (!parsed) return VerificationReport::bad(i);
        if (parsed->computed_hash != parsed->record.record_hash) return VerificationReport::bad(i);
        if (parsed->record.prev_hash != prev) return VerificationReport::bad(i);
        if (parsed->record.recorded_at < last_ts) return VerificationReport::bad(i);
        if (expected_principal && parsed->record.principal != *expected_principal)
            return VerificationReport::bad(i);
        prev = parsed->record.record_hash;
        last_ts = parsed->record.recorded_at;
    }
    return VerificationReport::ok();
}

} // namespace ipbac
