#include "umpire/server/event_log.hpp"

namespace umpire::server {

void EventLog::append(const std::vector<floor::FloorEvent>& events) {
    if (events.empty()) return;
    {
        std::lock_guard lock(mu_);
        for (const auto& e : events) {
            events_.push_back(e);
            last_seq_ = e.seq;
            if (events_.size() > capacity_) events_.pop_front();
        }
    }
    cv_.notify_all();
}

std::optional<std::vector<floor::FloorEvent>> EventLog::since(std::uint64_t after) const {
    std::lock_guard lock(mu_);
    std::vector<floor::FloorEvent> out;
    if (after >= last_seq_) return out;
    if (events_.empty() || events_.front().seq > after + 1) return std::nullopt;
    for (const auto& e : events_) {
        if (e.seq > after) out.push_back(e);
    }
    return out;
}

bool EventLog::wait_beyond(std::uint64_t after, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || last_seq_ > after; });
    return last_seq_ > after;
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mu_);
    return last_seq_;
}

void EventLog::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool EventLog::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

}  // namespace umpire::server
