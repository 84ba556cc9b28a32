#include "umpire/floor/conference.hpp"

#include <algorithm>
#include <cassert>
#include <tuple>
#include <utility>

namespace umpire::floor {

namespace {

// Queue order: business class ahead of normal; within a class, accepted
// requests (by accept order) ahead of pending ones (by arrival order).
auto queue_key(const FloorRequestRecord& r) {
    const bool accepted = r.state == RequestState::Accepted;
    return std::make_tuple(r.priority != Priority::BusinessClass, !accepted, accepted ? r.accept_seq : r.arrival_seq);
}

[[noreturn]] void fail(FloorErrc code, const std::string& what) { throw FloorError(code, what); }

}  // namespace

Conference::Conference(std::uint32_t id, Options options) : id_(id), options_(std::move(options)) {}

void Conference::add_floor(FloorId floor, std::string name, FloorPolicy policy) {
    if (policy.max_granted < 1) fail(FloorErrc::InvalidPolicy, "max_granted must be at least 1");
    auto [it, inserted] = floors_.try_emplace(floor);
    if (!inserted) throw std::invalid_argument("floor " + std::to_string(floor) + " already exists");
    it->second.name = std::move(name);
    it->second.policy = policy;
}

std::vector<FloorId> Conference::floor_ids() const {
    std::vector<FloorId> ids;
    for (const auto& [id, fs] : floors_) ids.push_back(id);
    return ids;
}

const std::string& Conference::floor_name(FloorId floor) const { return floor_state(floor).name; }

const FloorPolicy& Conference::policy(FloorId floor) const { return floor_state(floor).policy; }

Conference::FloorState& Conference::floor_state(FloorId floor) {
    auto it = floors_.find(floor);
    if (it == floors_.end()) fail(FloorErrc::UnknownFloor, "unknown floor " + std::to_string(floor));
    return it->second;
}

const Conference::FloorState& Conference::floor_state(FloorId floor) const {
    auto it = floors_.find(floor);
    if (it == floors_.end()) fail(FloorErrc::UnknownFloor, "unknown floor " + std::to_string(floor));
    return it->second;
}

FloorRequestRecord& Conference::record(FloorState& fs, RequestId request) {
    auto it = fs.requests.find(request);
    if (it == fs.requests.end()) fail(FloorErrc::UnknownRequest, "unknown request " + std::to_string(request));
    return it->second;
}

FloorRequestRecord Conference::submit_request(FloorId floor, UserId user, std::string display_name, Origin origin,
                                              Priority priority) {
    auto& fs = floor_state(floor);
    for (const auto& [id, r] : fs.requests) {
        if (r.user_id == user && is_live(r.state)) {
            fail(FloorErrc::DuplicateRequest,
                 "user " + std::to_string(user) + " already has request " + std::to_string(id) + " on this floor");
        }
    }
    if (next_request_id_ == 0) throw std::length_error("request id space exhausted");

    FloorRequestRecord rec;
    rec.request_id = next_request_id_++;
    rec.floor_id = floor;
    rec.user_id = user;
    rec.display_name = std::move(display_name);
    rec.origin = origin;
    rec.priority = priority;
    rec.state = RequestState::Pending;
    rec.arrival_seq = ++arrival_seq_;
    auto& r = fs.requests.emplace(rec.request_id, std::move(rec)).first->second;
    renumber(fs);

    FloorEvent ev;
    ev.kind = EventKind::RequestStateChanged;
    ev.floor_id = floor;
    ev.request = r;
    ev.new_state = RequestState::Pending;
    emit(std::move(ev), fs);

    if (fs.policy.auto_grant && granted_count(fs) < fs.policy.max_granted) grant(fs, r);
    return r;
}

FloorRequestRecord Conference::cancel_request(FloorId floor, RequestId request) {
    auto& fs = floor_state(floor);
    auto& r = record(fs, request);
    if (!is_queued(r.state)) {
        fail(FloorErrc::NotCancellable, "request " + std::to_string(request) + " is " + std::string(to_string(r.state)));
    }
    transition(fs, r, RequestState::Cancelled);
    return r;
}

FloorRequestRecord Conference::release_floor(FloorId floor, RequestId request) {
    auto& fs = floor_state(floor);
    auto& r = record(fs, request);
    if (r.state != RequestState::Granted) {
        fail(FloorErrc::NotGranted, "request " + std::to_string(request) + " is " + std::string(to_string(r.state)));
    }
    transition(fs, r, RequestState::Released);
    promote(fs);
    return r;
}

FloorRequestRecord Conference::chair_accept(FloorId floor, RequestId request) {
    auto& fs = floor_state(floor);
    auto& r = record(fs, request);
    if (r.state != RequestState::Pending) {
        fail(FloorErrc::NotPending, "request " + std::to_string(request) + " is " + std::string(to_string(r.state)));
    }
    if (granted_count(fs) < fs.policy.max_granted) {
        grant(fs, r);
    } else {
        r.accept_seq = ++stamp_;
        transition(fs, r, RequestState::Accepted);
    }
    return r;
}

FloorRequestRecord Conference::chair_deny(FloorId floor, RequestId request) {
    auto& fs = floor_state(floor);
    auto& r = record(fs, request);
    if (!is_queued(r.state)) {
        fail(FloorErrc::NotDeniable, "request " + std::to_string(request) + " is " + std::string(to_string(r.state)));
    }
    transition(fs, r, RequestState::Denied);
    return r;
}

FloorRequestRecord Conference::chair_revoke(FloorId floor, RequestId request) {
    auto& fs = floor_state(floor);
    auto& r = record(fs, request);
    if (r.state != RequestState::Granted) {
        fail(FloorErrc::NotGranted, "request " + std::to_string(request) + " is " + std::string(to_string(r.state)));
    }
    transition(fs, r, RequestState::Revoked);
    promote(fs);
    return r;
}

std::vector<FloorRequestRecord> Conference::chair_revoke_all(FloorId floor) {
    auto& fs = floor_state(floor);
    std::vector<FloorRequestRecord*> granted;
    for (auto& [id, r] : fs.requests) {
        if (r.state == RequestState::Granted) granted.push_back(&r);
    }
    std::sort(granted.begin(), granted.end(), [](auto* a, auto* b) { return a->grant_seq < b->grant_seq; });

    // No promotion: muting everyone must leave the floor silent.
    std::vector<FloorRequestRecord> out;
    for (auto* r : granted) {
        transition(fs, *r, RequestState::Revoked);
        out.push_back(*r);
    }
    return out;
}

FloorRequestRecord Conference::chair_set_priority(FloorId floor, RequestId request, Priority priority) {
    auto& fs = floor_state(floor);
    auto& r = record(fs, request);
    if (!is_queued(r.state)) {
        fail(FloorErrc::NotReorderable,
             "request " + std::to_string(request) + " is " + std::string(to_string(r.state)));
    }
    r.priority = priority;
    renumber(fs);

    FloorEvent ev;
    ev.kind = EventKind::QueueReordered;
    ev.floor_id = floor;
    ev.request = r;
    emit(std::move(ev), fs);
    return r;
}

QueueSnapshot Conference::set_policy(FloorId floor, FloorPolicy policy) {
    auto& fs = floor_state(floor);
    if (policy.max_granted < 1) fail(FloorErrc::InvalidPolicy, "max_granted must be at least 1");
    // Never revokes implicitly; the chair revokes before shrinking the cap.
    if (policy.max_granted < granted_count(fs)) {
        fail(FloorErrc::InvalidPolicy, "max_granted below the " + std::to_string(granted_count(fs)) +
                                           " current grants; revoke first");
    }
    const FloorPolicy old = fs.policy;
    fs.policy = policy;

    FloorEvent ev;
    ev.kind = EventKind::PolicyChanged;
    ev.floor_id = floor;
    ev.policy = policy;
    emit(std::move(ev), fs);

    if (policy.max_granted > old.max_granted || (policy.auto_grant && !old.auto_grant)) promote(fs);
    return snapshot(floor);
}

void Conference::grant(FloorState& fs, FloorRequestRecord& r) {
    r.grant_seq = ++stamp_;
    transition(fs, r, RequestState::Granted);
}

void Conference::transition(FloorState& fs, FloorRequestRecord& r, RequestState to) {
    assert(is_legal_transition(r.state, to));
    const RequestState from = r.state;
    r.state = to;
    if (is_terminal(to)) {
        r.finish_seq = ++stamp_;
        r.finished_at = options_.now();
    }
    renumber(fs);

    FloorEvent ev;
    ev.kind = EventKind::RequestStateChanged;
    ev.floor_id = r.floor_id;
    ev.request = r;
    ev.old_state = from;
    ev.new_state = to;
    emit(std::move(ev), fs);
}

void Conference::promote(FloorState& fs) {
    while (granted_count(fs) < fs.policy.max_granted) {
        FloorRequestRecord* next = nullptr;
        const auto order = queue_order(fs);
        for (auto* r : order) {
            if (r->state == RequestState::Accepted) {
                next = r;
                break;
            }
        }
        if (!next && fs.policy.auto_grant && !order.empty()) next = order.front();
        if (!next) break;
        grant(fs, *next);
    }
}

std::vector<FloorRequestRecord*> Conference::queue_order(FloorState& fs) {
    std::vector<FloorRequestRecord*> order;
    for (auto& [id, r] : fs.requests) {
        if (is_queued(r.state)) order.push_back(&r);
    }
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return queue_key(*a) < queue_key(*b); });
    return order;
}

void Conference::renumber(FloorState& fs) {
    std::uint16_t pos = 0;
    for (auto* r : queue_order(fs)) r->queue_position = ++pos;
    for (auto& [id, r] : fs.requests) {
        if (!is_queued(r.state)) r.queue_position = 0;
    }
}

std::size_t Conference::granted_count(const FloorState& fs) const {
    return static_cast<std::size_t>(std::count_if(fs.requests.begin(), fs.requests.end(), [](const auto& kv) {
        return kv.second.state == RequestState::Granted;
    }));
}

std::vector<QueuePosition> Conference::positions(const FloorState& fs) const {
    std::vector<QueuePosition> out;
    for (const auto& [id, r] : fs.requests) {
        if (is_queued(r.state)) out.push_back({id, r.queue_position});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.position < b.position; });
    return out;
}

void Conference::emit(FloorEvent ev, const FloorState& fs) {
    ev.seq = ++event_seq_;
    ev.queue = positions(fs);
    pending_events_.push_back(std::move(ev));
}

QueueSnapshot Conference::snapshot(FloorId floor) const {
    const auto& fs = floor_state(floor);
    const auto now = options_.now();

    std::vector<FloorRequestRecord> granted, queued, finished;
    for (const auto& [id, r] : fs.requests) {
        if (r.state == RequestState::Granted) granted.push_back(r);
        else if (is_queued(r.state)) queued.push_back(r);
        else if (now - r.finished_at <= options_.terminal_retention) finished.push_back(r);
    }
    std::sort(granted.begin(), granted.end(), [](const auto& a, const auto& b) { return a.grant_seq < b.grant_seq; });
    std::sort(queued.begin(), queued.end(),
              [](const auto& a, const auto& b) { return a.queue_position < b.queue_position; });
    std::sort(finished.begin(), finished.end(),
              [](const auto& a, const auto& b) { return a.finish_seq < b.finish_seq; });

    QueueSnapshot snap;
    snap.floor_id = floor;
    snap.policy = fs.policy;
    snap.last_event_seq = event_seq_;
    snap.entries = std::move(granted);
    snap.entries.insert(snap.entries.end(), queued.begin(), queued.end());
    snap.entries.insert(snap.entries.end(), finished.begin(), finished.end());
    return snap;
}

std::vector<FloorRequestRecord> Conference::records(FloorId floor) const {
    std::vector<FloorRequestRecord> out;
    for (const auto& [id, r] : floor_state(floor).requests) out.push_back(r);
    return out;
}

std::optional<FloorRequestRecord> Conference::find(RequestId request) const {
    for (const auto& [fid, fs] : floors_) {
        if (auto it = fs.requests.find(request); it != fs.requests.end()) return it->second;
    }
    return std::nullopt;
}

std::optional<FloorRequestRecord> Conference::live_request(UserId user, FloorId floor) const {
    for (const auto& [id, r] : floor_state(floor).requests) {
        if (r.user_id == user && is_live(r.state)) return r;
    }
    return std::nullopt;
}

std::vector<FloorRequestRecord> Conference::live_requests(UserId user) const {
    std::vector<FloorRequestRecord> out;
    for (const auto& [fid, fs] : floors_) {
        for (const auto& [id, r] : fs.requests) {
            if (r.user_id == user && is_live(r.state)) out.push_back(r);
        }
    }
    return out;
}

std::vector<FloorEvent> Conference::take_events() { return std::exchange(pending_events_, {}); }

void Conference::collect_garbage() {
    const auto now = options_.now();
    for (auto& [fid, fs] : floors_) {
        std::erase_if(fs.requests, [&](const auto& kv) {
            return is_terminal(kv.second.state) && now - kv.second.finished_at > options_.terminal_retention;
        });
    }
}

}  // namespace umpire::floor
