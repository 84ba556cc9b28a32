#include "umpire/daemon.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <iostream>

namespace umpire {

server::FloorConfig parse_floor_spec(const std::string& arg) {
    const auto colon = arg.find(':');
    const auto id_part = arg.substr(0, colon);
    unsigned id = 0;
    const auto [p, ec] = std::from_chars(id_part.data(), id_part.data() + id_part.size(), id);
    if (ec != std::errc{} || p != id_part.data() + id_part.size() || id == 0 || id > 0xffff) {
        throw std::invalid_argument("floor '" + arg + "': expected id:name with id in 1..65535");
    }
    server::FloorConfig f;
    f.id = static_cast<floor::FloorId>(id);
    f.name = colon == std::string::npos ? "floor" + id_part : arg.substr(colon + 1);
    if (f.name.empty()) throw std::invalid_argument("floor '" + arg + "': empty name");
    return f;
}

Daemon::Daemon(DaemonOptions options) : options_(std::move(options)) {}

Daemon::~Daemon() { stop(); }

void Daemon::start() {
    auto& cfg = options_.conference;
    if (cfg.floors.empty()) throw std::invalid_argument("at least one floor is required");
    std::set<floor::FloorId> floors;
    for (const auto& f : cfg.floors) {
        if (!floors.insert(f.id).second) throw std::invalid_argument("floor " + std::to_string(f.id) + " given twice");
    }

    badge::BadgeDirectory directory;
    if (options_.badge_directory) {
        directory = badge::load_directory(*options_.badge_directory, &floors);
        // Badge wearers are known users; BFCP messages about them carry their names.
        for (const auto& [tag, holder] : directory.tags) cfg.users.emplace(holder.user_id, holder.display_name);
    }

    conference_ = registry_.create(cfg);
    badges_ = std::make_unique<badge::BadgeGateway>(conference_, std::move(directory), options_.debounce);

    server::BfcpServerOptions bo;
    bo.host = options_.host;
    bo.port = options_.bfcp_port;
    bo.idle_timeout = options_.idle_timeout;
    bo.hello_timeout = options_.hello_timeout;
    bfcp_ = std::make_unique<server::BfcpServer>(registry_, bo);

    gateway::HttpGatewayOptions ho;
    ho.host = options_.host;
    ho.port = options_.http_port;
    ho.ui_dir = options_.ui_dir;
    ho.heartbeat = options_.sse_heartbeat;
    http_ = std::make_unique<gateway::HttpGateway>(registry_, ho);

    running_ = true;
    bfcp_->start();
    http_->start();
    if (options_.badge_port) {
        badge_feed_ = std::make_unique<badge::BadgeFeedServer>(*badges_, options_.host, *options_.badge_port);
        badge_feed_->start();
    }
    if (options_.badge_stdin) {
        // Detached: a blocking read on stdin cannot be interrupted portably.
        stdin_reader_ = std::thread([this] { badge::serve_stream(*badges_, std::cin, &std::cout); });
        stdin_reader_.detach();
    }
    spdlog::info("conference {} up: {} floor(s), max_granted={} auto_grant={}", cfg.id, cfg.floors.size(),
                 cfg.policy.max_granted, cfg.policy.auto_grant);
}

void Daemon::stop() {
    if (!running_) return;
    running_ = false;
    if (badge_feed_) badge_feed_->stop();
    if (http_) http_->stop();
    if (bfcp_) bfcp_->stop();
    registry_.stop_all();
}

std::uint16_t Daemon::bfcp_port() const { return bfcp_ ? bfcp_->port() : 0; }
std::uint16_t Daemon::http_port() const { return http_ ? http_->port() : 0; }
std::uint16_t Daemon::badge_port() const { return badge_feed_ ? badge_feed_->port() : 0; }

}  // namespace umpire
