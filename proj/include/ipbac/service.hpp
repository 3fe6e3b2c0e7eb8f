#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "ipbac/config.hpp"
#include "ipbac/decision.hpp"
#include "ipbac/error.hpp"
#include "ipbac/hash.hpp"
#include "ipbac/policy.hpp"
#include "ipbac/store.hpp"

namespace ipbac {

inline TimestampMs wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

namespace wire {

inline nlohmann::json decision_to_json(const Decision& d) {
    nlohmann::json j{{"outcome", std::string(decision_outcome_name(d.outcome))},
                     {"path", std::string(decision_path_name(d.path))},
                     {"trace", d.trace}};
    if (d.ds) j["ds"] = *d.ds;
    if (d.outcome == DecisionOutcome::partial) {
        j["theta"] = d.theta;
        auto granted = nlohmann::json::array();
        for (const auto& p : d.granted)
            granted.push_back({{"resource", p.resource}, {"action", p.action}});
        j["granted"] = granted;
    }
    return j;
}

inline AccessRequest access_request_from_json(const nlohmann::json& j, TimestampMs default_time) {
    AccessRequest r;
    try {
        r.principal = PrincipalId{j.at("principal").get<std::string>()};
        r.resource = j.at("resource").get<std::string>();
        r.action = j.at("action").get<std::string>();
        if (j.contains("context_tags"))
            for (const auto& t : j.at("context_tags")) r.context_tags.insert(t.get<std::string>());
        r.requested_at =
            j.contains("requested_at") ? j.at("requested_at").get<TimestampMs>() : default_time;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("decide body: ") + e.what());
    }
    if (!r.valid()) raise(Errc::parse_error, "decide body: empty principal/resource/action");
    return r;
}

inline RecordInput record_input_from_json(const nlohmann::json& j, TimestampMs default_time) {
    RecordInput in;
    try {
        in.principal = PrincipalId{j.at("principal").get<std::string>()};
        in.interaction.event_ref = j.at("event_ref").get<std::string>();
        for (const auto& p : j.at("participants"))
            in.interaction.participants.push_back(PrincipalId{p.get<std::string>()});
        if (j.contains("messages"))
            for (const auto& m : j.at("messages")) {
                Message msg;
                msg.seq = m.at("seq").get<std::uint32_t>();
                msg.sender = PrincipalId{m.at("sender").get<std::string>()};
                msg.receiver = PrincipalId{m.at("receiver").get<std::string>()};
                auto digest = hash_from_hex(m.at("payload_digest").get<std::string>());
                if (!digest) raise(Errc::parse_error, "payload_digest must be 64 lowercase hex chars");
                msg.payload_digest = *digest;
                in.interaction.messages.push_back(msg);
            }
        in.resource = j.at("resource").get<std::string>();
        in.action = j.at("action").get<std::string>();
        in.outcome = outcome_from_name(j.at("outcome").get<std::string>());
        if (j.contains("context_tags"))
            for (const auto& t : j.at("context_tags")) in.context_tags.insert(t.get<std::string>());
        in.recorded_at =
            j.contains("recorded_at") ? j.at("recorded_at").get<TimestampMs>() : default_time;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("interaction body: ") + e.what());
    }
    if (!in.valid()) raise(Errc::parse_error, "interaction body violates record invariants");
    return in;
}

} // namespace wire

/// The decision service: a DecisionEngine over a persistent ChainStore
/// behind four HTTP endpoints (JSON bodies):
///
///   POST /v1/decide                      run the pipeline, append, respond
///   POST /v1/interactions                ingest a non-decision record
///   GET  /v1/chains/{principal}/verify   cold re-read + verify from disk
///   GET|PUT /v1/config                   inspect / atomically swap config
///
/// Every response carries `seq` (monotone across all appends) and
/// `server_time_ms`. A decide/interaction response is sent only after its
/// record has been flushed to the chain file.
class Service {
public:
    struct Options {
        std::filesystem::path data_dir;
        EngineConfig config;
        PolicySet policies;
    };

    explicit Service(Options opts)
        : store_({opts.data_dir, opts.config.half_life_ms, opts.config.clock_skew_ms}),
          engine_(store_, std::move(opts.policies), opts.config),
          seq_(store_.total_records()),
          request_log_path_(opts.data_dir / "requests.log") {
        routes();
    }

    /// Blocks serving until stop() is called. Returns false if the socket
    /// could not be bound.
    bool listen(const std::string& host, int port) { return server_.listen(host, port); }
    void stop() { server_.stop(); }
    bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }
    /// Binds an ephemeral port and returns it (-1 on failure).
    int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
    bool serve_after_bind() { return server_.listen_after_bind(); }

    ChainStore& store() { return store_; }
    DecisionEngine& engine() { return engine_; }

private:
    static void send_error(httplib::Response& res, int status, const std::string& code,
                           const std::string& message) {
        res.status = status;
        res.set_content(nlohmann::json{{"error", code}, {"message", message}}.dump(), "application/json");
    }

    /// Maps thrown Errc values onto wire statuses.
    static void send_mapped_error(httplib::Response& res, const Error& e) {
        switch (e.code()) {
            case Errc::parse_error:
            case Errc::invalid_record:
                send_error(res, 400, "MALFORMED", e.what());
                return;
            case Errc::chronology_violation:
                send_error(res, 409, "CHRONOLOGY", e.what());
                return;
            case Errc::principal_mismatch:
                send_error(res, 409, "PRINCIPAL_MISMATCH", e.what());
                return;
            case Errc::invalid_config:
                send_error(res, 422, "INVALID_CONFIG", e.what());
                return;
            default:
                send_error(res, 500, "INTERNAL", e.what());
        }
    }

    void stamp(nlohmann::json& j) const {
        j["seq"] = seq_.load();
        j["server_time_ms"] = wall_clock_ms();
    }

    void log_decision(const AccessRequest& req, const Decision& d, double latency_us) {
        std::lock_guard lk(log_mu_);
        std::ofstream f(request_log_path_, std::ios::app);
        if (!f) return; // logging must never fail a decision
        f << wall_clock_ms() << ' ' << req.principal.id << ' ' << req.resource << ' ' << req.action
          << ' ' << decision_path_name(d.path) << ' ' << decision_outcome_name(d.outcome) << ' ';
        if (d.ds)
            f << *d.ds;
        else
            f << '-';
        f << ' ' << static_cast<long long>(latency_us) << '\n';
    }

    void routes() {
        server_.Post("/v1/decide", [this](const httplib::Request& req, httplib::Response& res) {
            auto t0 = std::chrono::steady_clock::now();
            try {
                nlohmann::json body;
                try {
                    body = nlohmann::json::parse(req.body);
                } catch (const nlohmann::json::exception& e) {
                    send_error(res, 400, "MALFORMED", std::string("body is not JSON: ") + e.what());
                    return;
                }
                auto request = wire::access_request_from_json(body, wall_clock_ms());
                auto out = engine_.decide(request); // append is durable on return
                auto seq = seq_.fetch_add(1) + 1;

                auto j = wire::decision_to_json(out.decision);
                j["record_hash"] = to_hex(out.record.record_hash);
                j["seq"] = seq;
                j["server_time_ms"] = wall_clock_ms();
                res.set_content(j.dump(), "application/json");

                double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0)
                                .count();
                log_decision(request, out.decision, us);
            } catch (const Error& e) {
                send_mapped_error(res, e);
            }
        });

        server_.Post("/v1/interactions", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                nlohmann::json body;
                try {
                    body = nlohmann::json::parse(req.body);
                } catch (const nlohmann::json::exception& e) {
                    send_error(res, 400, "MALFORMED", std::string("body is not JSON: ") + e.what());
                    return;
                }
                auto input = wire::record_input_from_json(body, wall_clock_ms());
                auto rec = engine_.record_interaction(input);
                auto seq = seq_.fetch_add(1) + 1;

                nlohmann::json j{{"record_hash", to_hex(rec.record.record_hash)},
                                 {"chain_length", rec.chain_length},
                                 {"seq", seq},
                                 {"server_time_ms", wall_clock_ms()}};
                res.set_content(j.dump(), "application/json");
            } catch (const Error& e) {
                send_mapped_error(res, e);
            }
        });

        server_.Get(R"(/v1/chains/([^/]+)/verify)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        auto decoded = decode_principal_filename(req.matches[1].str());
                        if (!decoded) {
                            send_error(res, 400, "MALFORMED", "bad principal encoding");
                            return;
                        }
                        try {
                            PrincipalId p{*decoded};
                            std::lock_guard lk(store_.principal_mutex(p));
                            auto report = store_.verify_from_disk(p);
                            nlohmann::json j{{"principal", p.id}, {"valid", report.valid}};
                            if (report.first_bad_index) j["first_bad_index"] = *report.first_bad_index;
                            j["records"] = store_.has_chain(p) ? store_.chain(p).size() : 0;
                            stamp(j);
                            res.set_content(j.dump(), "application/json");
                        } catch (const Error& e) {
                            send_mapped_error(res, e);
                        }
                    });

        server_.Get("/v1/config", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::json j = engine_.config();
            stamp(j);
            res.set_content(j.dump(), "application/json");
        });

        server_.Put("/v1/config", [this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::exception& e) {
                send_error(res, 400, "MALFORMED", std::string("body is not JSON: ") + e.what());
                return;
            }
            EngineConfig next = engine_.config();
            try {
                merge_from_json(next, body);
            } catch (const Error& e) {
                send_error(res, 400, "MALFORMED", e.what());
                return;
            }
            auto errs = validate_config(next);
            if (!errs.empty()) {
                auto ej = nlohmann::json::array();
                for (const auto& e : errs) ej.push_back({{"field", e.field}, {"message", e.message}});
                res.status = 422;
                res.set_content(nlohmann::json{{"error", "INVALID_CONFIG"}, {"errors", ej}}.dump(),
                                "application/json");
                return;
            }
            try {
                engine_.set_config(next);
            } catch (const Error& e) {
                // rule file problems surface as a field-level error too
                res.status = 422;
                res.set_content(
                    nlohmann::json{
                        {"error", "INVALID_CONFIG"},
                        {"errors", {{{"field", "rule_base_path"}, {"message", e.what()}}}}}
                        .dump(),
                    "application/json");
                return;
            }
            nlohmann::json j = engine_.config();
            stamp(j);
            res.set_content(j.dump(), "application/json");
        });

        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok\n", "text/plain");
        });
    }

    ChainStore store_;
    DecisionEngine engine_;
    httplib::Server server_;
    std::atomic<std::uint64_t> seq_;
    std::filesystem::path request_log_path_;
    std::mutex log_mu_;
};

} // namespace ipbac
