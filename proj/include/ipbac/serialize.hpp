#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipbac/error.hpp"
#include "ipbac/hash.hpp"
#include "ipbac/types.hpp"

namespace ipbac {

// Canonical record encoding. One logical record always yields one byte
// sequence: fields in declaration order, strings u32-length-prefixed,
// integers fixed-width big-endian, timestamps as i64 milliseconds, tags
// sorted (std::set iterates in lexicographic order). record_hash is not
// part of the encoding; it is SHA-256 over these bytes.

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(u >> shift));
}

inline void put_str(std::vector<std::uint8_t>& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

inline void put_hash(std::vector<std::uint8_t>& out, const Hash32& h) {
    out.insert(out.end(), h.begin(), h.end());
}

/// Bounds-checked reader over an encoded record.
class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = (std::uint32_t(data_[pos_]) << 24) | (std::uint32_t(data_[pos_ + 1]) << 16) |
                          (std::uint32_t(data_[pos_ + 2]) << 8) | std::uint32_t(data_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    std::int64_t i64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 8;
        return static_cast<std::int64_t>(v);
    }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    Hash32 hash() {
        need(32);
        Hash32 h{};
        std::copy(data_.begin() + pos_, data_.begin() + pos_ + 32, h.begin());
        pos_ += 32;
        return h;
    }

    bool done() const { return pos_ == data_.size(); }

    std::size_t remaining() const { return data_.size() - pos_; }

    /// Guards element counts read from untrusted bytes: a count claiming
    /// more elements than the remaining bytes could possibly encode (at
    /// min_element_size bytes each) must not reach reserve()/resize(),
    /// where it would force a huge allocation instead of a parse failure.
    void check_count(std::uint32_t count, std::size_t min_element_size) {
        if (count > remaining() / min_element_size) raise(Errc::parse_error, "element count exceeds input");
    }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) raise(Errc::parse_error, "truncated record");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Deterministic canonical byte encoding of a record (record_hash excluded).
inline std::vector<std::uint8_t> serialize_record(const ProvenanceRecord& record) {
    using namespace detail;
    std::vector<std::uint8_t> out;
    out.reserve(128);
    put_str(out, record.principal.id);
    put_str(out, record.interaction.event_ref);
    put_u32(out, static_cast<std::uint32_t>(record.interaction.participants.size()));
    for (const auto& p : record.interaction.participants) put_str(out, p.id);
    put_u32(out, static_cast<std::uint32_t>(record.interaction.messages.size()));
    for (const auto& m : record.interaction.messages) {
        put_u32(out, m.seq);
        put_str(out, m.sender.id);
        put_str(out, m.receiver.id);
        put_hash(out, m.payload_digest);
    }
    put_str(out, record.resource);
    put_str(out, record.action);
    out.push_back(static_cast<std::uint8_t>(record.outcome));
    put_u32(out, static_cast<std::uint32_t>(record.context_tags.size()));
    for (const auto& t : record.context_tags) put_str(out, t);
    put_i64(out, record.recorded_at);
    put_hash(out, record.prev_hash);
    return out;
}

inline Hash32 compute_record_hash(const ProvenanceRecord& record) {
    auto bytes = serialize_record(record);
    return sha256(std::span(bytes.data(), bytes.size()));
}

/// Inverse of serialize_record. Rejects trailing bytes, truncation and
/// out-of-range enum values. record_hash is left zeroed for the caller.
inline ProvenanceRecord parse_record(std::span<const std::uint8_t> bytes) {
    detail::Cursor c(bytes);
    ProvenanceRecord rec;
    rec.principal = PrincipalId(c.str());
    rec.interaction.event_ref = c.str();
    std::uint32_t nparts = c.u32();
    c.check_count(nparts, 4); // each participant is at least a u32 length prefix
    rec.interaction.participants.reserve(nparts);
    for (std::uint32_t i = 0; i < nparts; ++i) rec.interaction.participants.emplace_back(c.str());
    std::uint32_t nmsgs = c.u32();
    c.check_count(nmsgs, 4 + 4 + 4 + 32); // seq + two empty strings + digest
    rec.interaction.messages.reserve(nmsgs);
    for (std::uint32_t i = 0; i < nmsgs; ++i) {
        Message m;
        m.seq = c.u32();
        m.sender = PrincipalId(c.str());
        m.receiver = PrincipalId(c.str());
        m.payload_digest = c.hash();
        rec.interaction.messages.push_back(std::move(m));
    }
    rec.resource = c.str();
    rec.action = c.str();
    std::uint8_t outcome = c.u8();
    if (outcome > 2) raise(Errc::parse_error, "bad outcome byte");
    rec.outcome = static_cast<Outcome>(outcome);
    std::uint32_t ntags = c.u32();
    c.check_count(ntags, 4);
    for (std::uint32_t i = 0; i < ntags; ++i) rec.context_tags.insert(c.str());
    rec.recorded_at = c.i64();
    rec.prev_hash = c.hash();
    if (!c.done()) raise(Errc::parse_error, "trailing bytes after record");
    return rec;
}

/// Persisted form: lowercase hex of the canonical bytes, a tab, lowercase
/// hex of record_hash.
inline std::string format_chain_line(const ProvenanceRecord& record) {
    auto bytes = serialize_record(record);
    return to_hex(std::span(bytes.data(), bytes.size())) + "\t" + to_hex(record.record_hash);
}

/// Parses one persisted line. The hash is recomputed over the raw decoded
/// bytes and compared against the stored column, so any byte change in
/// either column surfaces as nullopt or a mismatching record.
struct ParsedLine {
    ProvenanceRecord record;     // record_hash = stored hash column
    Hash32 computed_hash{};      // SHA-256 over the decoded record bytes
};

inline std::optional<ParsedLine> parse_chain_line(std::string_view line) {
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) return std::nullopt;
    if (line.find('\t', tab + 1) != std::string_view::npos) return std::nullopt;
    auto body = from_hex(line.substr(0, tab));
    if (!body) return std::nullopt;
    auto stored = hash_from_hex(line.substr(tab + 1));
    if (!stored) return std::nullopt;
    ParsedLine out;
    try {
        out.record = parse_record(std::span(body->data(), body->size()));
    } catch (const Error&) {
        return std::nullopt;
    }
    out.record.record_hash = *stored;
    out.computed_hash = sha256(std::span(body->data(), body->size()));
    return out;
}

} // namespace ipbac
