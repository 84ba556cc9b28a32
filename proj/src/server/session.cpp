#include "umpire/server/session.hpp"

namespace umpire::server {

namespace {
std::atomic<std::uint64_t> g_next_session{1};
}

SessionChannel::SessionChannel() : id_(g_next_session++) {}

std::uint16_t SessionChannel::next_server_transaction() {
    std::uint16_t tx = next_tx_.fetch_add(2) + 2;
    if (tx == 0) tx = next_tx_.fetch_add(2) + 2;
    return tx;
}

bool MemoryChannel::send(const wire::BfcpMessage& msg) {
    {
        std::lock_guard lock(mu_);
        if (!open_) return false;
        if (received_.size() >= capacity_) {
            open_ = false;
            cv_.notify_all();
            return false;
        }
        received_.push_back(msg);
    }
    cv_.notify_all();
    return true;
}

void MemoryChannel::close() {
    {
        std::lock_guard lock(mu_);
        open_ = false;
    }
    cv_.notify_all();
}

bool MemoryChannel::is_open() const {
    std::lock_guard lock(mu_);
    return open_;
}

std::vector<wire::BfcpMessage> MemoryChannel::messages() const {
    std::lock_guard lock(mu_);
    return received_;
}

std::size_t MemoryChannel::count() const {
    std::lock_guard lock(mu_);
    return received_.size();
}

bool MemoryChannel::wait_until(const std::function<bool(const std::vector<wire::BfcpMessage>&)>& pred,
                               std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return pred(received_); });
}

bool MemoryChannel::wait_for_count(std::size_t n, std::chrono::milliseconds timeout) const {
    return wait_until([n](const auto& msgs) { return msgs.size() >= n; }, timeout);
}

}  // namespace umpire::server
