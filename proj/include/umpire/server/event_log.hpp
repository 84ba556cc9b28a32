#pragma once

#include "umpire/floor/types.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace umpire::server {

/// Bounded history of conference events for stream subscribers. Appended
/// from the conference queue thread; read from any thread.
class EventLog {
public:
    explicit EventLog(std::size_t capacity = 1024) : capacity_(capacity) {}

    void append(const std::vector<floor::FloorEvent>& events);

    /// Events with seq > after, or nullopt when some of them have already
    /// been evicted and the caller must start over from a snapshot.
    [[nodiscard]] std::optional<std::vector<floor::FloorEvent>> since(std::uint64_t after) const;

    /// Blocks until an event with seq > after exists, the log is closed, or
    /// the timeout passes. Returns true when new events are available.
    bool wait_beyond(std::uint64_t after, std::chrono::milliseconds timeout) const;

    [[nodiscard]] std::uint64_t last_seq() const;

    void close();
    [[nodiscard]] bool closed() const;

private:
    std::size_t capacity_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::deque<floor::FloorEvent> events_;
    std::uint64_t last_seq_ = 0;
    bool closed_ = false;
};

}  // namespace umpire::server
