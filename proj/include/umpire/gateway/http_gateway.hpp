#pragma once

#include "umpire/server/registry.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace umpire::gateway {

struct HttpResult {
    int status = 200;
    std::string body;
    bool operator==(const HttpResult&) const = default;
};

/// Remembers the results of the last `capacity` command ids so a retried
/// mutation returns the original answer instead of acting twice.
class IdempotencyCache {
public:
    explicit IdempotencyCache(std::size_t capacity = 256) : capacity_(capacity) {}

    [[nodiscard]] std::optional<HttpResult> find(const std::string& key) const;
    void put(const std::string& key, HttpResult result);
    [[nodiscard]] std::size_t size() const;

private:
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::map<std::string, HttpResult> results_;
    std::deque<std::string> order_;
};

struct HttpGatewayOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> ui_dir;
    std::chrono::milliseconds heartbeat{15000};
    std::size_t command_cache = 256;
    int worker_threads = 32;
};

/// Chair console and web participant API over HTTP, with a server-sent
/// event stream per conference.
///
///   GET  /api/conf/{id}/floors/{fid}/queue
///   POST /api/conf/{id}/chair/command        (chair bearer token)
///   GET  /api/conf/{id}/events               (chair or participant token)
///   POST /api/conf/{id}/participants
///   POST /api/conf/{id}/floor-action         (participant token)
class HttpGateway {
public:
    HttpGateway(server::ConferenceRegistry& registry, HttpGatewayOptions options);
    ~HttpGateway();

    HttpGateway(const HttpGateway&) = delete;
    HttpGateway& operator=(const HttpGateway&) = delete;

    /// Binds and starts serving on a background thread. Throws on bind failure.
    void start();
    void stop();

    [[nodiscard]] std::uint16_t port() const { return port_; }
    [[nodiscard]] std::size_t open_streams() const { return open_streams_; }

private:
    struct Impl;

    server::ConferenceRegistry& registry_;
    HttpGatewayOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> open_streams_{0};
};

}  // namespace umpire::gateway
