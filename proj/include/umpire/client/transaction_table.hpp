#pragma once

#include "umpire/wire/message.hpp"

#include <future>
#include <map>
#include <mutex>

namespace umpire::client {

/// Outstanding client transactions. A reply completes a transaction only if
/// both its transaction id and its primitive match (an Error reply matches
/// any primitive); everything else is an unsolicited notification.
class TransactionTable {
public:
    /// Throws std::logic_error if tx is already outstanding.
    std::future<wire::BfcpMessage> expect(std::uint16_t tx, wire::Primitive reply);

    /// True if msg completed an outstanding transaction.
    bool complete(const wire::BfcpMessage& msg);

    void cancel(std::uint16_t tx);
    void fail_all(const std::exception_ptr& error);
    [[nodiscard]] std::size_t pending() const;

private:
    struct Entry {
        wire::Primitive reply;
        std::promise<wire::BfcpMessage> promise;
    };
    mutable std::mutex mu_;
    std::map<std::uint16_t, Entry> entries_;
};

}  // namespace umpire::client
