// ipbacd: provenance-backed access decision service.
//
//   ipbacd --config engine.json --data-dir /var/lib/ipbac --listen 127.0.0.1:8080
//          [--policies policies.json]
//
// IPBAC_CONFIG and IPBAC_DATA_DIR are honored when the corresponding flag
// is omitted. SIGINT/SIGTERM stop the server cleanly.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ipbac/config.hpp"
#include "ipbac/policy.hpp"
#include "ipbac/service.hpp"

namespace {

ipbac::Service* g_service = nullptr;

void handle_signal(int) {
    if (g_service) g_service->stop();
}

bool split_listen(const std::string& listen, std::string& host, int& port) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos || colon + 1 >= listen.size()) return false;
    host = listen.substr(0, colon);
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        return false;
    }
    return port > 0 && port < 65536 && !host.empty();
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ipbacd - interaction-provenance-based access control service"};

    std::string config_path;
    std::string data_dir;
    std::string policies_path;
    std::string listen = "127.0.0.1:8080";
    app.add_option("--config", config_path, "engine config (JSON)");
    app.add_option("--data-dir", data_dir, "directory for chains and logs");
    app.add_option("--policies", policies_path, "policy set (JSON); omit for an empty policy set");
    app.add_option("--listen", listen, "address:port to serve on")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (config_path.empty()) config_path = env_or("IPBAC_CONFIG", "");
    if (data_dir.empty()) data_dir = env_or("IPBAC_DATA_DIR", "");
    if (config_path.empty() || data_dir.empty()) {
        std::cerr << "ipbacd: --config and --data-dir are required (or set IPBAC_CONFIG / "
                     "IPBAC_DATA_DIR)\n";
        return 2;
    }
    std::string host;
    int port = 0;
    if (!split_listen(listen, host, port)) {
        std::cerr << "ipbacd: --listen must be <address>:<port>, got '" << listen << "'\n";
        return 2;
    }

    try {
        ipbac::Service::Options opts;
        opts.config = ipbac::load_config(config_path);
        opts.data_dir = data_dir;
        if (!policies_path.empty()) opts.policies = ipbac::load_policy_set(policies_path);

        ipbac::Service service(std::move(opts));
        g_service = &service;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);

        if (!service.bind(host, port)) {
            std::cerr << "ipbacd: cannot bind " << host << ":" << port << '\n';
            return 1;
        }
        std::cout << "ipbacd listening on " << host << ":" << port << " (data: " << data_dir << ")"
                  << std::endl;
        service.serve_after_bind();
        std::cout << "ipbacd stopped" << std::endl;
        return 0;
    } catch (const ipbac::Error& e) {
        std::cerr << "ipbacd: " << ipbac::errc_name(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ipbacd: " << e.what() << '\n';
        return 1;
    }
}
