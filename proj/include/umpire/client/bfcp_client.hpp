#pragma once

#include "umpire/bfcp/floor_info.hpp"
#include "umpire/client/errors.hpp"
#include "umpire/client/transaction_table.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace umpire::client {

struct ClientOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8124;
    std::uint32_t conference_id = 1;
    std::uint16_t user_id = 1;
    std::string display_name;
    std::string chair_token;
    std::chrono::milliseconds timeout{std::chrono::seconds(5)};
};

/// Participant-side BFCP connection. Replies are matched to requests by
/// transaction; unsolicited notifications are recorded and can be awaited.
class BfcpClient {
public:
    explicit BfcpClient(ClientOptions options);
    ~BfcpClient();
    BfcpClient(const BfcpClient&) = delete;
    BfcpClient& operator=(const BfcpClient&) = delete;

    /// Opens the TCP connection and exchanges Hello. Throws ConnectionError,
    /// TimeoutError or ServerError.
    void connect();
    void close();
    [[nodiscard]] bool connected() const { return connected_; }

    bfcp::RequestInfo request_floor(floor::FloorId floor);
    /// Released if the request held the floor, Cancelled otherwise.
    bfcp::RequestInfo release_floor(floor::RequestId request);
    bfcp::RequestInfo query_request(floor::RequestId request);
    /// Live requests of the floor, holders first.
    std::vector<bfcp::RequestInfo> query_floor(floor::FloorId floor);
    void chair_action(floor::RequestId request, floor::RequestState target);

    /// Waits for a notification reporting target for request; notifications
    /// received before the call count.
    bfcp::RequestInfo await_status(floor::RequestId request, floor::RequestState target,
                                   std::chrono::milliseconds timeout);

    /// Sends msg with a fresh client transaction id and waits for the reply
    /// with the expected primitive; an Error reply is returned as-is.
    wire::BfcpMessage transact(wire::BfcpMessage msg, wire::Primitive reply);

    [[nodiscard]] std::vector<wire::BfcpMessage> notifications() const;
    /// Called on the reader thread for every unsolicited message.
    void on_notification(std::function<void(const wire::BfcpMessage&)> fn);

    [[nodiscard]] const ClientOptions& options() const { return options_; }

private:
    void read_loop();
    void write(const wire::BfcpMessage& msg);
    static void throw_if_error(const wire::BfcpMessage& reply);

    ClientOptions options_;
    int fd_ = -1;
    std::atomic<bool> connected_{false};
    std::mutex write_mu_;
    std::uint16_t next_tx_ = 1;
    TransactionTable transactions_;
    std::thread reader_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::vector<wire::BfcpMessage> notifications_;
    std::function<void(const wire::BfcpMessage&)> handler_;
};

}  // namespace umpire::client
