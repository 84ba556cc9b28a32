#pragma once

#include "umpire/floor/types.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace umpire::floor {

/// Moderated floor queues of one conference.
///
/// Every mutation validates against the request lifecycle, applies the
/// grant cap, and records one event per state transition. Events accumulate
/// until take_events() drains them. Not thread-safe: the owner serializes
/// all calls (see server::CommandQueue).
class Conference {
public:
    struct Options {
        std::chrono::seconds terminal_retention{30};
        std::function<Clock::time_point()> now = [] { return Clock::now(); };
    };

    explicit Conference(std::uint32_t id) : Conference(id, Options{}) {}
    Conference(std::uint32_t id, Options options);

    [[nodiscard]] std::uint32_t id() const { return id_; }

    void add_floor(FloorId floor, std::string name, FloorPolicy policy = {});
    [[nodiscard]] bool has_floor(FloorId floor) const { return floors_.contains(floor); }
    [[nodiscard]] std::vector<FloorId> floor_ids() const;
    [[nodiscard]] const std::string& floor_name(FloorId floor) const;
    [[nodiscard]] const FloorPolicy& policy(FloorId floor) const;

    FloorRequestRecord submit_request(FloorId floor, UserId user, std::string display_name, Origin origin,
                                      Priority priority = Priority::Normal);
    FloorRequestRecord cancel_request(FloorId floor, RequestId request);
    FloorRequestRecord release_floor(FloorId floor, RequestId request);
    FloorRequestRecord chair_accept(FloorId floor, RequestId request);
    FloorRequestRecord chair_deny(FloorId floor, RequestId request);
    FloorRequestRecord chair_revoke(FloorId floor, RequestId request);
    std::vector<FloorRequestRecord> chair_revoke_all(FloorId floor);
    FloorRequestRecord chair_set_priority(FloorId floor, RequestId request, Priority priority);
    QueueSnapshot set_policy(FloorId floor, FloorPolicy policy);

    /// Read-only view; terminal records finished within the retention
    /// window are included.
    [[nodiscard]] QueueSnapshot snapshot(FloorId floor) const;

    /// Every record on the floor, terminal ones included, in request id order.
    [[nodiscard]] std::vector<FloorRequestRecord> records(FloorId floor) const;

    [[nodiscard]] std::optional<FloorRequestRecord> find(RequestId request) const;
    [[nodiscard]] std::optional<FloorRequestRecord> live_request(UserId user, FloorId floor) const;
    [[nodiscard]] std::vector<FloorRequestRecord> live_requests(UserId user) const;

    [[nodiscard]] std::uint64_t last_event_seq() const { return event_seq_; }
    std::vector<FloorEvent> take_events();

    /// Drops terminal records older than the retention window.
    void collect_garbage();

private:
    struct FloorState {
        std::string name;
        FloorPolicy policy;
        std::map<RequestId, FloorRequestRecord> requests;
    };

    FloorState& floor_state(FloorId floor);
    const FloorState& floor_state(FloorId floor) const;
    FloorRequestRecord& record(FloorState& fs, RequestId request);

    void transition(FloorState& fs, FloorRequestRecord& r, RequestState to);
    void grant(FloorState& fs, FloorRequestRecord& r);
    void promote(FloorState& fs);
    void renumber(FloorState& fs);
    std::size_t granted_count(const FloorState& fs) const;
    std::vector<FloorRequestRecord*> queue_order(FloorState& fs);
    std::vector<QueuePosition> positions(const FloorState& fs) const;
    void emit(FloorEvent ev, const FloorState& fs);

    std::uint32_t id_;
    Options options_;
    std::map<FloorId, FloorState> floors_;
    std::vector<FloorEvent> pending_events_;
    RequestId next_request_id_ = 1;
    std::uint64_t arrival_seq_ = 0;
    std::uint64_t stamp_ = 0;  // accept/grant/finish ordering
    std::uint64_t event_seq_ = 0;
};

}  // namespace umpire::floor
