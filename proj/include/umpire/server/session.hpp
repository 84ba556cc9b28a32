#pragma once

#include "umpire/wire/message.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace umpire::server {

/// Outbound half of one BFCP connection as seen by the conference.
class SessionChannel {
public:
    SessionChannel();
    virtual ~SessionChannel() = default;

    /// Queues msg for delivery without blocking. Returns false when the
    /// channel is closed or can no longer keep up (which closes it).
    virtual bool send(const wire::BfcpMessage& msg) = 0;
    virtual void close() = 0;
    [[nodiscard]] virtual bool is_open() const = 0;
    [[nodiscard]] virtual std::string peer() const { return "session-" + std::to_string(id_); }

    [[nodiscard]] std::uint64_t id() const { return id_; }

    /// Server-initiated transactions use even ids; clients use odd ones.
    std::uint16_t next_server_transaction();

private:
    std::uint64_t id_;
    std::atomic<std::uint16_t> next_tx_{0};
};

/// Channel that records everything sent to it. Used by tests and by
/// in-process tooling.
class MemoryChannel : public SessionChannel {
public:
    explicit MemoryChannel(std::size_t capacity = 4096) : capacity_(capacity) {}

    bool send(const wire::BfcpMessage& msg) override;
    void close() override;
    [[nodiscard]] bool is_open() const override;

    [[nodiscard]] std::vector<wire::BfcpMessage> messages() const;
    [[nodiscard]] std::size_t count() const;

    /// Waits until pred holds over the received messages.
    bool wait_until(const std::function<bool(const std::vector<wire::BfcpMessage>&)>& pred,
                    std::chrono::milliseconds timeout = std::chrono::seconds(2)) const;
    /// Waits for at least n messages.
    bool wait_for_count(std::size_t n, std::chrono::milliseconds timeout = std::chrono::seconds(2)) const;

private:
    std::size_t capacity_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::vector<wire::BfcpMessage> received_;
    bool open_ = true;
};

}  // namespace umpire::server
