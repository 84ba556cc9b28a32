#pragma once

#include "umpire/client/errors.hpp"
#include "umpire/gateway/json.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Client;
}

namespace umpire::client {

using gateway::Json;

struct HttpEndpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;
    std::uint32_t conference_id = 1;
    std::chrono::milliseconds timeout{5000};
};

/// Non-2xx answer from the gateway. code() is the machine-readable error
/// name from the body ("NotPending", "Unauthorized", ...).
class HttpError : public ClientError {
public:
    HttpError(int status, std::string code, const std::string& what)
        : ClientError(what), status_(status), code_(std::move(code)) {}
    [[nodiscard]] int status() const { return status_; }
    [[nodiscard]] const std::string& code() const { return code_; }

private:
    int status_;
    std::string code_;
};

class HttpApi {
public:
    explicit HttpApi(HttpEndpoint endpoint);
    HttpApi(HttpApi&&) noexcept;
    HttpApi& operator=(HttpApi&&) noexcept;
    ~HttpApi();

    [[nodiscard]] const HttpEndpoint& endpoint() const { return endpoint_; }

    /// GET /floors/{fid}/queue, in snapshot order.
    std::vector<floor::FloorRequestRecord> queue(floor::FloorId floor);

protected:
    Json get(const std::string& path, const std::string& token = {});
    Json post(const std::string& path, const Json& body, const std::string& token = {});
    [[nodiscard]] std::string conf_path(const std::string& rest) const;

private:
    HttpEndpoint endpoint_;
    std::unique_ptr<httplib::Client> http_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

/// The moderator's side of the gateway.
class ChairClient : public HttpApi {
public:
    ChairClient(HttpEndpoint endpoint, std::string token) : HttpApi(std::move(endpoint)), token_(std::move(token)) {}

    floor::FloorRequestRecord accept(floor::RequestId request);
    floor::FloorRequestRecord deny(floor::RequestId request);
    floor::FloorRequestRecord revoke(floor::RequestId request);
    floor::FloorRequestRecord set_priority(floor::RequestId request, floor::Priority priority);
    std::vector<floor::FloorRequestRecord> revoke_all(floor::FloorId floor);
    floor::FloorPolicy set_policy(floor::FloorId floor, floor::FloorPolicy policy);

    /// Sends a raw command object and returns the response body.
    Json command(const Json& cmd);

private:
    floor::FloorRequestRecord single(const Json& cmd);
    std::string token_;
};

/// A participant using the browser endpoint instead of a BFCP client.
class WebClient : public HttpApi {
public:
    using HttpApi::HttpApi;

    void join(const std::string& display_name);
    floor::FloorRequestRecord request(floor::FloorId floor);
    floor::FloorRequestRecord release(floor::FloorId floor);

    [[nodiscard]] floor::UserId user_id() const { return user_id_; }
    [[nodiscard]] const std::string& token() const { return token_; }

private:
    std::string token_;
    floor::UserId user_id_ = 0;
};

struct StreamEvent {
    std::uint64_t id = 0;
    std::string event;
    Json data;
};

/// Subscribes to the conference event stream on a background thread.
class EventStream {
public:
    EventStream(HttpEndpoint endpoint, std::string token, std::optional<std::uint64_t> last_event_id = std::nullopt);
    ~EventStream();

    EventStream(const EventStream&) = delete;
    EventStream& operator=(const EventStream&) = delete;

    void start();
    void stop();

    [[nodiscard]] std::vector<StreamEvent> events() const;
    [[nodiscard]] std::size_t heartbeats() const { return heartbeats_; }
    /// Highest event id seen so far.
    [[nodiscard]] std::uint64_t last_id() const;
    [[nodiscard]] bool finished() const { return finished_; }
    /// HTTP status of the stream response, 0 until it arrives.
    [[nodiscard]] int status() const { return status_; }

    /// Waits until pred(events) holds; false on timeout.
    bool wait_for(const std::function<bool(const std::vector<StreamEvent>&)>& pred,
                  std::chrono::milliseconds timeout) const;
    bool wait_for_id(std::uint64_t id, std::chrono::milliseconds timeout) const;

    void on_event(std::function<void(const StreamEvent&)> fn);

private:
    void feed(std::string_view chunk);
    void dispatch_frame(const std::string& frame);

    HttpEndpoint endpoint_;
    std::string token_;
    std::optional<std::uint64_t> resume_;
    std::unique_ptr<httplib::Client> http_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    std::atomic<bool> finished_{false};
    std::atomic<int> status_{0};
    std::atomic<std::size_t> heartbeats_{0};

    std::string buffer_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::vector<StreamEvent> events_;
    std::function<void(const StreamEvent&)> handler_;
};

/// Applies stream events to a locally held copy of every floor's queue, the
/// way a console does. snapshot() is comparable with the queue endpoint.
class QueueMirror {
public:
    /// Returns false if the event does not follow the last one applied.
    bool apply(const StreamEvent& e);
    [[nodiscard]] std::vector<floor::FloorRequestRecord> entries(floor::FloorId floor) const;
    [[nodiscard]] std::uint64_t seq() const { return seq_; }

private:
    struct FloorView {
        floor::FloorPolicy policy;
        // Granted in grant order, queued by position, finished by finish order.
        std::vector<floor::FloorRequestRecord> granted, queued, finished;
    };
    void apply_positions(FloorView& f, const Json& queue);

    std::map<floor::FloorId, FloorView> floors_;
    std::uint64_t seq_ = 0;
};

}  // namespace umpire::client
