#include "umpire/client/transaction_table.hpp"

#include <stdexcept>

namespace umpire::client {

std::future<wire::BfcpMessage> TransactionTable::expect(std::uint16_t tx, wire::Primitive reply) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.try_emplace(tx, Entry{reply, {}});
    if (!inserted) throw std::logic_error("transaction " + std::to_string(tx) + " already outstanding");
    return it->second.promise.get_future();
}

bool TransactionTable::complete(const wire::BfcpMessage& msg) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(msg.header.transaction_id);
    if (it == entries_.end()) return false;
    if (msg.header.primitive != it->second.reply && msg.header.primitive != wire::Primitive::Error) return false;
    it->second.promise.set_value(msg);
    entries_.erase(it);
    return true;
}

void TransactionTable::cancel(std::uint16_t tx) {
    std::lock_guard lock(mu_);
    entries_.erase(tx);
}

void TransactionTable::fail_all(const std::exception_ptr& error) {
    std::lock_guard lock(mu_);
    for (auto& [tx, e] : entries_) e.promise.set_exception(error);
    entries_.clear();
}

std::size_t TransactionTable::pending() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

}  // namespace umpire::client
