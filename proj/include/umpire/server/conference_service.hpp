#pragma once

#include "umpire/floor/conference.hpp"
#include "umpire/server/command_queue.hpp"
#include "umpire/server/event_log.hpp"
#include "umpire/server/session.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace umpire::server {

struct FloorConfig {
    floor::FloorId id = 1;
    std::string name = "audio";
};

struct ConferenceConfig {
    std::uint32_t id = 1;
    std::vector<FloorConfig> floors{FloorConfig{}};
    floor::FloorPolicy policy;
    std::string chair_token;
    std::chrono::seconds terminal_retention{30};
    // Display names of known BFCP users.
    std::map<floor::UserId, std::string> users;
    std::size_t event_history = 1024;
};

enum class Role { Participant, Chair };

/// A participant registered through the web join endpoint.
struct WebParticipant {
    floor::UserId user_id = 0;
    std::string display_name;
    std::string token;
};

/// Everything the moderator console needs to render from scratch, taken
/// atomically with respect to the event sequence.
struct ConferenceView {
    std::vector<floor::QueueSnapshot> floors;
    std::uint64_t seq = 0;
};

/// Counters for notification accounting.
struct FanOutStats {
    std::size_t transitions = 0;
    std::size_t request_status_sent = 0;
    std::size_t floor_status_sent = 0;
};

/// One conference: the floor state, its command queue, the sessions bound
/// to it, and the event history served to stream subscribers.
class ConferenceService {
public:
    explicit ConferenceService(ConferenceConfig config);
    ConferenceService(ConferenceConfig config, floor::Conference::Options options);
    ~ConferenceService();

    [[nodiscard]] std::uint32_t id() const { return config_.id; }
    [[nodiscard]] const ConferenceConfig& config() const { return config_; }

    /// Runs fn(conference) on the conference queue and then publishes the
    /// resulting events (log, history, BFCP fan-out) attributed to actor.
    template <typename F>
    auto execute(std::string actor, F&& fn) {
        return queue_.call([this, actor = std::move(actor), &fn]() {
            PublishGuard guard{this, actor};
            return fn(conference_);
        });
    }

    [[nodiscard]] ConferenceView view();
    [[nodiscard]] floor::QueueSnapshot snapshot(floor::FloorId floor);

    [[nodiscard]] EventLog& events() { return log_; }

    [[nodiscard]] bool is_chair_token(std::string_view token) const;
    [[nodiscard]] std::string display_name(floor::UserId user) const;

    WebParticipant join_web(std::string display_name);
    [[nodiscard]] std::optional<WebParticipant> web_participant(std::string_view token) const;

    /// Hands an inbound BFCP message to the conference queue. Replies and
    /// notifications go out through channel.
    void deliver(std::shared_ptr<SessionChannel> channel, wire::BfcpMessage msg);

    /// The connection behind session_id is gone; its user's requests are
    /// withdrawn once no other session remains for that user.
    void disconnect(std::uint64_t session_id);

    [[nodiscard]] std::size_t session_count();
    [[nodiscard]] FanOutStats fan_out_stats();

    /// Closes every session and event stream and stops the queue.
    void stop();

private:
    struct Session {
        std::shared_ptr<SessionChannel> channel;
        floor::UserId user = 0;
        Role role = Role::Participant;
        std::string name;
    };

    struct PublishGuard {
        ConferenceService* self;
        const std::string& actor;
        ~PublishGuard() { self->publish(actor); }
    };

    void publish(const std::string& actor);
    void fan_out(const std::vector<floor::FloorEvent>& events);
    void send(Session& s, const wire::BfcpMessage& msg);
    wire::BfcpMessage floor_status(const wire::CommonHeader& h, floor::FloorId floor) const;

    void handle(const std::shared_ptr<SessionChannel>& channel, const wire::BfcpMessage& msg);
    void on_hello(Session& s, const wire::BfcpMessage& msg);
    void on_floor_request(Session& s, const wire::BfcpMessage& msg);
    void on_floor_release(Session& s, const wire::BfcpMessage& msg);
    void on_chair_action(Session& s, const wire::BfcpMessage& msg);
    void on_floor_request_query(Session& s, const wire::BfcpMessage& msg);
    void on_user_query(Session& s, const wire::BfcpMessage& msg);
    void on_floor_query(Session& s, const wire::BfcpMessage& msg);
    void reply_status(Session& s, const wire::BfcpMessage& request, const floor::FloorRequestRecord& r);
    std::string actor_of(const Session& s) const;

    ConferenceConfig config_;
    floor::Conference conference_;
    EventLog log_;

    // Touched only on the queue thread.
    std::map<std::uint64_t, Session> sessions_;
    FanOutStats stats_;

    mutable std::mutex directory_mu_;
    std::map<floor::UserId, std::string> users_;
    std::map<std::string, WebParticipant, std::less<>> web_by_token_;
    floor::UserId next_web_user_ = 0x8000;

    // Declared last so its thread stops before the state it touches goes away.
    CommandQueue queue_;
};

}  // namespace umpire::server
