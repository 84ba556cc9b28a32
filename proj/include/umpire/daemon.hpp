#pragma once

#include "umpire/badge/badge.hpp"
#include "umpire/gateway/http_gateway.hpp"
#include "umpire/server/bfcp_server.hpp"
#include "umpire/server/registry.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace umpire {

struct DaemonOptions {
    std::string host = "127.0.0.1";
    std::uint16_t bfcp_port = 8124;
    std::uint16_t http_port = 8080;
    // Badge feed over TCP; absent disables it.
    std::optional<std::uint16_t> badge_port;
    bool badge_stdin = false;
    std::optional<std::filesystem::path> badge_directory;
    std::chrono::milliseconds debounce{2000};

    server::ConferenceConfig conference;
    std::optional<std::filesystem::path> ui_dir;
    std::chrono::milliseconds idle_timeout{60000};
    std::chrono::milliseconds hello_timeout{10000};
    std::chrono::milliseconds sse_heartbeat{15000};
};

/// Parses "id:name" as given to --floor. Throws std::invalid_argument.
server::FloorConfig parse_floor_spec(const std::string& spec);

/// One conference served over BFCP, HTTP and the badge feed.
class Daemon {
public:
    explicit Daemon(DaemonOptions options);
    ~Daemon();

    /// Binds every listener; throws if any of them fails.
    void start();
    void stop();

    [[nodiscard]] std::uint16_t bfcp_port() const;
    [[nodiscard]] std::uint16_t http_port() const;
    [[nodiscard]] std::uint16_t badge_port() const;

    [[nodiscard]] server::ConferenceService& conference() { return *conference_; }
    [[nodiscard]] badge::BadgeGateway& badges() { return *badges_; }
    [[nodiscard]] const DaemonOptions& options() const { return options_; }

private:
    DaemonOptions options_;
    server::ConferenceRegistry registry_;
    std::shared_ptr<server::ConferenceService> conference_;
    std::unique_ptr<badge::BadgeGateway> badges_;
    std::unique_ptr<server::BfcpServer> bfcp_;
    std::unique_ptr<gateway::HttpGateway> http_;
    std::unique_ptr<badge::BadgeFeedServer> badge_feed_;
    std::thread stdin_reader_;
    bool running_ = false;
};

}  // namespace umpire
