#pragma once

#include "umpire/server/registry.hpp"

#include <atomic>
#include <chrono>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace umpire::server {

struct BfcpServerOptions {
    std::string host = "0.0.0.0";
    std::uint16_t port = 8124;  // 0 picks an ephemeral port
    // A session silent this long is sent a Hello; it must answer within
    // hello_timeout or it is closed.
    std::chrono::milliseconds idle_timeout{std::chrono::seconds(60)};
    std::chrono::milliseconds hello_timeout{std::chrono::seconds(10)};
    std::size_t outbox_limit = 1024;
};

class TcpConnection;

/// Accepts BFCP-over-TCP connections and routes their messages to the
/// conference named in each header.
class BfcpServer {
public:
    BfcpServer(ConferenceRegistry& registry, BfcpServerOptions options);
    ~BfcpServer();

    /// Binds and starts accepting. Throws std::system_error on failure.
    void start();
    void stop();

    [[nodiscard]] std::uint16_t port() const { return bound_port_; }
    [[nodiscard]] std::size_t connection_count();

private:
    void accept_loop();
    void reap();

    ConferenceRegistry& registry_;
    BfcpServerOptions options_;
    int listen_fd_ = -1;
    std::uint16_t bound_port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::list<std::shared_ptr<TcpConnection>> connections_;
};

}  // namespace umpire::server
