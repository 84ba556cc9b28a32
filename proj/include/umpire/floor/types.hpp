#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace umpire::floor {

using RequestId = std::uint16_t;
using FloorId = std::uint16_t;
using UserId = std::uint16_t;
using Clock = std::chrono::steady_clock;

enum class RequestState { Pending, Accepted, Granted, Denied, Cancelled, Released, Revoked };
enum class Priority { Normal, BusinessClass };
enum class Origin { Rfid, BfcpClient, Web };

std::string_view to_string(RequestState s);
std::string_view to_string(Priority p);
std::string_view to_string(Origin o);
std::optional<RequestState> parse_state(std::string_view s);
std::optional<Priority> parse_priority(std::string_view s);

/// PENDING or ACCEPTED: waiting in the positional queue.
constexpr bool is_queued(RequestState s) { return s == RequestState::Pending || s == RequestState::Accepted; }
/// Queued or holding the floor.
constexpr bool is_live(RequestState s) { return is_queued(s) || s == RequestState::Granted; }
constexpr bool is_terminal(RequestState s) { return !is_live(s); }

bool is_legal_transition(RequestState from, RequestState to);

struct FloorPolicy {
    std::uint16_t max_granted = 1;
    bool auto_grant = false;

    bool operator==(const FloorPolicy&) const = default;
};

struct FloorRequestRecord {
    RequestId request_id = 0;
    FloorId floor_id = 0;
    UserId user_id = 0;
    std::string display_name;
    Origin origin = Origin::BfcpClient;
    Priority priority = Priority::Normal;
    RequestState state = RequestState::Pending;
    std::uint64_t arrival_seq = 0;
    // 1-based among PENDING/ACCEPTED requests on the floor, 0 otherwise.
    std::uint16_t queue_position = 0;
    // Ordering stamps from the conference-wide counter; 0 when not applicable.
    std::uint64_t accept_seq = 0;
    std::uint64_t grant_seq = 0;
    std::uint64_t finish_seq = 0;
    Clock::time_point finished_at{};

    bool operator==(const FloorRequestRecord&) const = default;
};

struct QueuePosition {
    RequestId request_id = 0;
    std::uint16_t position = 0;
    bool operator==(const QueuePosition&) const = default;
};

enum class EventKind { RequestStateChanged, QueueReordered, PolicyChanged };

std::string_view to_string(EventKind k);

struct FloorEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::RequestStateChanged;
    FloorId floor_id = 0;
    // Record as of this event; absent for PolicyChanged.
    std::optional<FloorRequestRecord> request;
    // old_state is empty when the event creates the request.
    std::optional<RequestState> old_state;
    std::optional<RequestState> new_state;
    std::optional<FloorPolicy> policy;
    // Positions of every queued request on the floor right after the event.
    std::vector<QueuePosition> queue;
};

struct QueueSnapshot {
    FloorId floor_id = 0;
    FloorPolicy policy;
    // GRANTED by grant order, then queued by position, then recently
    // finished requests, most recent last.
    std::vector<FloorRequestRecord> entries;
    std::uint64_t last_event_seq = 0;

    bool operator==(const QueueSnapshot&) const = default;
};

enum class FloorErrc {
    UnknownFloor,
    UnknownRequest,
    DuplicateRequest,
    NotCancellable,
    NotGranted,
    NotPending,
    NotDeniable,
    NotReorderable,
    InvalidPolicy,
};

std::string_view to_string(FloorErrc e);

class FloorError : public std::runtime_error {
public:
    FloorError(FloorErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] FloorErrc code() const { return code_; }

private:
    FloorErrc code_;
};

}  // namespace umpire::floor
