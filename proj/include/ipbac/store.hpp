#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ipbac/chain.hpp"
#include "ipbac/error.hpp"
#include "ipbac/serialize.hpp"

namespace ipbac {

/// Percent-encodes everything outside [A-Za-z0-9._-] so arbitrary principal
/// ids map to safe, collision-free file names.
inline std::string encode_principal_filename(const std::string& id) {
    static const char* hexdig = "0123456789abcdef";
    std::string out;
    out.reserve(id.size());
    for (unsigned char c : id) {
        if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hexdig[c >> 4]);
            out.push_back(hexdig[c & 0x0f]);
        }
    }
    return out;
}

inline std::optional<std::string> decode_principal_filename(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (std::size_t i = 0; i < name.size(); ++i) {
        if (name[i] != '%') {
            out.push_back(name[i]);
            continue;
        }
        if (i + 2 >= name.size()) return std::nullopt;
        auto nib = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            return -1;
        };
        int hi = nib(name[i + 1]), lo = nib(name[i + 2]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
    }
    return out;
}

/// Owns every principal's chain plus its append-only backing file under
/// `<root>/chains/`. Appends go through the in-memory chain first (which
/// validates, links and hashes), then the formatted line is written and
/// flushed before the call returns, so an acknowledged append survives an
/// abrupt process kill.
///
/// An ephemeral store (empty root path) keeps everything in memory; the
/// benchmark harness uses that mode.
class ChainStore {
public:
    struct Options {
        std::filesystem::path root;   // empty => ephemeral
        DurationMs half_life_ms = 2'592'000'000;
        DurationMs clock_skew_ms = kDefaultClockSkewMs;
    };

    explicit ChainStore(Options opts) : opts_(std::move(opts)) {
        if (persistent()) {
            std::filesystem::create_directories(chains_dir());
            load_all();
        }
    }

    bool persistent() const { return !opts_.root.empty(); }
    std::filesystem::path chains_dir() const { return opts_.root / "chains"; }

    std::filesystem::path chain_path(const PrincipalId& p) const {
        return chains_dir() / (encode_principal_filename(p.id) + ".log");
    }

    /// One mutex per principal: appends to the same chain serialize, while
    /// different principals proceed in parallel.
    std::mutex& principal_mutex(const PrincipalId& p) {
        std::lock_guard lk(registry_mu_);
        auto& slot = locks_[p.id];
        if (!slot) slot = std::make_unique<std::mutex>();
        return *slot;
    }

    /// Fetches (creating on first use) the chain for `p`. Callers that
    /// mutate must hold principal_mutex(p).
    ProvenanceChain& chain(const PrincipalId& p) {
        std::lock_guard lk(registry_mu_);
        auto it = chains_.find(p.id);
        if (it == chains_.end())
            it = chains_.emplace(p.id, std::make_unique<ProvenanceChain>(p, opts_.half_life_ms)).first;
        return *it->second;
    }

    bool has_chain(const PrincipalId& p) const {
        std::lock_guard lk(registry_mu_);
        return chains_.contains(p.id);
    }

    std::vector<PrincipalId> principals() const {
        std::lock_guard lk(registry_mu_);
        std::vector<PrincipalId> out;
        out.reserve(chains_.size());
        for (const auto& [id, _] : chains_) out.push_back(PrincipalId{id});
        return out;
    }

    std::size_t total_records() const {
        std::lock_guard lk(registry_mu_);
        std::size_t n = 0;
        for (const auto& [_, c] : chains_) n += c->size();
        return n;
    }

    /// Appends through the chain, then durably writes the line. Caller must
    /// hold principal_mutex for input.principal.
    const ProvenanceRecord& append(const RecordInput& input) {
        auto& c = chain(input.principal);
        const auto& rec = c.append(input, opts_.clock_skew_ms);
        if (persistent()) {
            std::ofstream f(chain_path(input.principal), std::ios::app | std::ios::binary);
            if (!f) raise(Errc::io_error, "cannot open chain file for append");
            f << format_chain_line(rec) << '\n';
            f.flush();
            if (!f) raise(Errc::io_error, "chain file write failed");
        }
        return rec;
    }

    /// Cold verification: re-reads the file from disk, line by line, and
    /// checks hashes/links/ordering against nothing but the bytes found
    /// there. In-memory state is deliberately not consulted.
    VerificationReport verify_from_disk(const PrincipalId& p) const {
        if (!persistent()) raise(Errc::io_error, "ephemeral store has no files to verify");
        auto lines = read_lines(chain_path(p));
        return verify_chain_lines(lines, &p);
    }

    /// Rebuilds every chain's aggregates under a new half-life (config
    /// change). Takes each principal's writer mutex in turn, so concurrent
    /// deciders never observe a half-rebuilt aggregate.
    void set_half_life(DurationMs half_life_ms) {
        std::vector<std::string> ids;
        {
            std::lock_guard lk(registry_mu_);
            if (half_life_ms == opts_.half_life_ms) return;
            opts_.half_life_ms = half_life_ms;
            for (const auto& [id, _] : chains_) ids.push_back(id);
        }
        for (const auto& id : ids) {
            PrincipalId p{id};
            std::lock_guard plk(principal_mutex(p));
            std::lock_guard lk(registry_mu_);
            auto it = chains_.find(id);
            if (it != chains_.end()) it->second->set_half_life(half_life_ms);
        }
    }

private:
    static std::vector<std::string> read_lines(const std::filesystem::path& path) {
        std::vector<std::string> lines;
        std::ifstream f(path, std::ios::binary);
        if (!f) return lines; // missing file == empty chain
        std::string line;
        while (std::getline(f, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
        return lines;
    }

    /// Reload at startup. Each persisted record is parsed and re-fed through
    /// ProvenanceChain::restore(), which applies the exact same aggregate
    /// update sequence as the original appends — the floating-point state
    /// after a restart is bit-identical to the state before the kill.
    ///
    /// Crash recovery: because every acknowledged append is flushed before
    /// the response goes out, a crash can only tear the *final* line. A
    /// trailing fragment with no newline is either a complete line that
    /// lost its terminator (kept; terminator rewritten) or a half-written,
    /// never-acknowledged record (dropped; file truncated back to the last
    /// complete line). Damage anywhere else is genuine corruption and
    /// stays a hard error.
    void load_all() {
        for (const auto& entry : std::filesystem::directory_iterator(chains_dir())) {
            if (!entry.is_regular_file() || entry.path().extension() != ".log") continue;
            auto decoded = decode_principal_filename(entry.path().stem().string());
            if (!decoded) raise(Errc::parse_error, "unrecognized chain file name: " + entry.path().string());
            PrincipalId principal{*decoded};

            std::ifstream f(entry.path(), std::ios::binary);
            std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
            f.close();

            std::vector<std::string> lines;
            std::string fragment;
            bool torn = false;
            std::size_t start = 0;
            while (start < bytes.size()) {
                auto nl = bytes.find('\n', start);
                if (nl == std::string::npos) {
                    fragment = bytes.substr(start);
                    torn = true;
                    break;
                }
                lines.push_back(bytes.substr(start, nl - start));
                start = nl + 1;
            }
            for (auto& line : lines)
                if (!line.empty() && line.back() == '\r') line.pop_back();

            if (torn) {
                if (parse_chain_line(fragment)) {
                    lines.push_back(fragment);
                    std::ofstream repair(entry.path(), std::ios::app | std::ios::binary);
                    repair << '\n';
                } else {
                    std::filesystem::resize_file(entry.path(), bytes.size() - fragment.size());
                }
            }

            auto& c = chain(principal);
            for (std::size_t i = 0; i < lines.size(); ++i) {
                auto parsed = parse_chain_line(lines[i]);
                if (!parsed)
                    raise(Errc::parse_error, "corrupt line " + std::to_string(i) + " in " +
                                                 entry.path().string());
                c.restore(std::move(parsed->record));
            }
        }
    }

    Options opts_;
    mutable std::mutex registry_mu_;
    std::map<std::string, std::unique_ptr<ProvenanceChain>> chains_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

} // namespace ipbac
