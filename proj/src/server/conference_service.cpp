#include "umpire/server/conference_service.hpp"

#include "umpire/bfcp/floor_info.hpp"

#include <spdlog/spdlog.h>

#include <random>

namespace umpire::server {

using floor::FloorError;
using floor::RequestState;
using wire::AttributeType;
using wire::BfcpMessage;
using wire::ErrorCode;
using wire::Primitive;

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    return fmt::format("{}.{:03}Z", buf, ms);
}

std::string random_token() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    return fmt::format("{:016x}{:016x}", rng(), rng());
}

BfcpMessage reply_to(const BfcpMessage& request, Primitive p) {
    BfcpMessage m;
    m.header = request.header;
    m.header.primitive = p;
    return m;
}

std::optional<std::uint16_t> u16_attr(const BfcpMessage& m, AttributeType t) {
    const auto* a = m.find(t);
    if (!a) return std::nullopt;
    return std::get<std::uint16_t>(a->value);
}

}  // namespace

ConferenceService::ConferenceService(ConferenceConfig config)
    : ConferenceService(config, floor::Conference::Options{config.terminal_retention}) {}

ConferenceService::ConferenceService(ConferenceConfig config, floor::Conference::Options options)
    : config_(std::move(config)),
      conference_(config_.id, std::move(options)),
      log_(config_.event_history),
      users_(config_.users) {
    for (const auto& f : config_.floors) conference_.add_floor(f.id, f.name, config_.policy);
}

ConferenceService::~ConferenceService() { stop(); }

void ConferenceService::stop() {
    log_.close();
    queue_.post([this] {
        for (auto& [id, s] : sessions_) s.channel->close();
        sessions_.clear();
    });
    queue_.stop();
}

ConferenceView ConferenceService::view() {
    return queue_.call([this] {
        ConferenceView v;
        for (auto fid : conference_.floor_ids()) v.floors.push_back(conference_.snapshot(fid));
        v.seq = conference_.last_event_seq();
        return v;
    });
}

floor::QueueSnapshot ConferenceService::snapshot(floor::FloorId floor) {
    return queue_.call([this, floor] { return conference_.snapshot(floor); });
}

bool ConferenceService::is_chair_token(std::string_view token) const {
    return !config_.chair_token.empty() && token == config_.chair_token;
}

std::string ConferenceService::display_name(floor::UserId user) const {
    std::lock_guard lock(directory_mu_);
    if (auto it = users_.find(user); it != users_.end()) return it->second;
    return "user" + std::to_string(user);
}

WebParticipant ConferenceService::join_web(std::string display_name) {
    std::lock_guard lock(directory_mu_);
    if (next_web_user_ == 0xFFFF) throw std::length_error("web participant ids exhausted");
    WebParticipant p{next_web_user_++, std::move(display_name), random_token()};
    users_[p.user_id] = p.display_name;
    web_by_token_[p.token] = p;
    return p;
}

std::optional<WebParticipant> ConferenceService::web_participant(std::string_view token) const {
    std::lock_guard lock(directory_mu_);
    if (auto it = web_by_token_.find(token); it != web_by_token_.end()) return it->second;
    return std::nullopt;
}

std::size_t ConferenceService::session_count() {
    return queue_.call([this] { return sessions_.size(); });
}

FanOutStats ConferenceService::fan_out_stats() {
    return queue_.call([this] { return stats_; });
}

void ConferenceService::deliver(std::shared_ptr<SessionChannel> channel, BfcpMessage msg) {
    queue_.post([this, channel = std::move(channel), msg = std::move(msg)] { handle(channel, msg); });
}

void ConferenceService::disconnect(std::uint64_t session_id) {
    queue_.post([this, session_id] {
        auto it = sessions_.find(session_id);
        if (it == sessions_.end()) return;
        const auto user = it->second.user;
        sessions_.erase(it);
        for (const auto& [id, s] : sessions_) {
            if (s.user == user && s.channel->is_open()) return;
        }
        PublishGuard guard{this, "session-close"};
        for (const auto& r : conference_.live_requests(user)) {
            if (r.origin != floor::Origin::BfcpClient) continue;
            if (r.state == RequestState::Granted) conference_.release_floor(r.floor_id, r.request_id);
            else conference_.cancel_request(r.floor_id, r.request_id);
        }
    });
}

void ConferenceService::publish(const std::string& actor) {
    try {
        conference_.collect_garbage();
        auto events = conference_.take_events();
        if (events.empty()) return;
        for (const auto& e : events) {
            if (e.kind != floor::EventKind::RequestStateChanged) continue;
            spdlog::info("transition ts={} conf={} floor={} request={} old={} new={} actor={}", iso_timestamp(),
                         config_.id, e.floor_id, e.request->request_id,
                         e.old_state ? floor::to_string(*e.old_state) : "-", floor::to_string(*e.new_state), actor);
        }
        log_.append(events);
        fan_out(events);
    } catch (const std::exception& e) {
        spdlog::error("publishing events failed: {}", e.what());
    }
}

void ConferenceService::send(Session& s, const BfcpMessage& msg) {
    if (!s.channel->send(msg)) spdlog::warn("dropping notification to closed session {}", s.channel->peer());
}

BfcpMessage ConferenceService::floor_status(const wire::CommonHeader& h, floor::FloorId floor) const {
    BfcpMessage m;
    m.header = h;
    m.header.primitive = Primitive::FloorStatus;
    m.attributes.push_back(wire::attr::floor_id(floor));
    for (const auto& r : conference_.snapshot(floor).entries) {
        if (floor::is_live(r.state)) m.attributes.push_back(bfcp::request_information(r));
    }
    return m;
}

void ConferenceService::fan_out(const std::vector<floor::FloorEvent>& events) {
    std::vector<floor::FloorId> floors;
    for (const auto& e : events) {
        if (std::find(floors.begin(), floors.end(), e.floor_id) == floors.end()) floors.push_back(e.floor_id);
        if (e.kind != floor::EventKind::RequestStateChanged) continue;
        ++stats_.transitions;
        const auto& r = *e.request;
        for (auto& [id, s] : sessions_) {
            if (!s.channel->is_open()) continue;
            const bool owner = s.user == r.user_id;
            const bool chair_sees_new = s.role == Role::Chair && !e.old_state;
            if (!owner && !chair_sees_new) continue;
            BfcpMessage m;
            m.header = {Primitive::FloorRequestStatus, config_.id, s.channel->next_server_transaction(), s.user};
            m.attributes.push_back(bfcp::request_information(r, e.seq));
            send(s, m);
            if (owner) ++stats_.request_status_sent;
        }
    }
    for (auto fid : floors) {
        for (auto& [id, s] : sessions_) {
            if (!s.channel->is_open()) continue;
            send(s, floor_status({Primitive::FloorStatus, config_.id, s.channel->next_server_transaction(), s.user},
                                 fid));
            ++stats_.floor_status_sent;
        }
    }
    // Closed sessions stay until disconnect() so their requests get withdrawn there.
}

std::string ConferenceService::actor_of(const Session& s) const {
    return (s.role == Role::Chair ? "chair-bfcp:" : "bfcp:") + std::to_string(s.user);
}

void ConferenceService::handle(const std::shared_ptr<SessionChannel>& channel, const BfcpMessage& msg) {
    if (!channel->is_open()) return;
    if (msg.header.conference_id != config_.id) {
        channel->send(bfcp::make_error(msg.header, ErrorCode::ConferenceDoesNotExist,
                                       "unknown conference " + std::to_string(msg.header.conference_id)));
        return;
    }
    if (msg.header.user_id == 0) {
        channel->send(bfcp::make_error(msg.header, ErrorCode::UserDoesNotExist, "user id 0 is reserved"));
        return;
    }

    auto [it, fresh] = sessions_.try_emplace(channel->id());
    Session& s = it->second;
    if (fresh) {
        s.channel = channel;
        s.user = msg.header.user_id;
    } else if (s.user != msg.header.user_id) {
        channel->send(bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation,
                                       "session is bound to user " + std::to_string(s.user)));
        return;
    }

    try {
        switch (msg.header.primitive) {
        case Primitive::Hello: on_hello(s, msg); break;
        case Primitive::HelloAck:
        case Primitive::Error: break;
        case Primitive::FloorRequest: on_floor_request(s, msg); break;
        case Primitive::FloorRelease: on_floor_release(s, msg); break;
        case Primitive::ChairAction: on_chair_action(s, msg); break;
        case Primitive::FloorRequestQuery: on_floor_request_query(s, msg); break;
        case Primitive::UserQuery: on_user_query(s, msg); break;
        case Primitive::FloorQuery: on_floor_query(s, msg); break;
        default:
            send(s, bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation,
                                     std::string(wire::to_string(msg.header.primitive)) + " is sent by servers only"));
            break;
        }
    } catch (const FloorError& e) {
        send(s, bfcp::make_error(msg.header, bfcp::error_code_for(e.code()),
                                 std::string(floor::to_string(e.code())) + ": " + e.what()));
    }
}

void ConferenceService::on_hello(Session& s, const BfcpMessage& msg) {
    if (auto token = bfcp::provided_info_value(msg, "chair-token")) {
        if (!is_chair_token(*token)) {
            send(s, bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation, "bad chair token"));
            return;
        }
        for (const auto& [id, other] : sessions_) {
            if (other.role == Role::Chair && other.channel != s.channel && other.channel->is_open()) {
                send(s, bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation, "a chair is already connected"));
                return;
            }
        }
        s.role = Role::Chair;
    }
    if (auto name = bfcp::provided_info_value(msg, "name"); name && !name->empty()) {
        s.name = *name;
        std::lock_guard lock(directory_mu_);
        users_[s.user] = *name;
    }

    auto ack = reply_to(msg, Primitive::HelloAck);
    std::vector<std::uint8_t> primitives, attributes;
    for (int p = 1; p <= 13; ++p) primitives.push_back(static_cast<std::uint8_t>(p));
    for (int a = 1; a <= 18; ++a) {
        if (wire::is_known_attribute(static_cast<std::uint8_t>(a))) attributes.push_back(static_cast<std::uint8_t>(a));
    }
    ack.attributes.push_back(wire::attr::octets(AttributeType::SupportedPrimitives, std::move(primitives)));
    ack.attributes.push_back(wire::attr::octets(AttributeType::SupportedAttributes, std::move(attributes)));
    send(s, ack);
}

void ConferenceService::reply_status(Session& s, const BfcpMessage& request, const floor::FloorRequestRecord& r) {
    auto reply = reply_to(request, Primitive::FloorRequestStatus);
    reply.attributes.push_back(bfcp::request_information(*conference_.find(r.request_id)));
    send(s, reply);
}

void ConferenceService::on_floor_request(Session& s, const BfcpMessage& msg) {
    const auto floors = msg.find_all(AttributeType::FloorId);
    if (floors.size() != 1) {
        send(s, bfcp::make_error(msg.header, ErrorCode::IncorrectMessage, "exactly one FLOOR-ID is required"));
        return;
    }
    if (auto beneficiary = u16_attr(msg, AttributeType::BeneficiaryId);
        beneficiary && *beneficiary != s.user && s.role != Role::Chair) {
        send(s, bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation,
                                 "only the chair may request on behalf of another user"));
        return;
    }
    const auto user = u16_attr(msg, AttributeType::BeneficiaryId).value_or(s.user);
    const auto fid = std::get<std::uint16_t>(floors.front()->value);

    PublishGuard guard{this, actor_of(s)};
    const auto rec = conference_.submit_request(fid, user, display_name(user), floor::Origin::BfcpClient);
    reply_status(s, msg, rec);
}

void ConferenceService::on_floor_release(Session& s, const BfcpMessage& msg) {
    const auto id = u16_attr(msg, AttributeType::FloorRequestId);
    if (!id) {
        send(s, bfcp::make_error(msg.header, ErrorCode::IncorrectMessage, "FLOOR-REQUEST-ID is required"));
        return;
    }
    const auto rec = conference_.find(*id);
    if (!rec) {
        send(s, bfcp::make_error(msg.header, ErrorCode::FloorRequestIdDoesNotExist,
                                 "unknown floor request " + std::to_string(*id)));
        return;
    }
    if (rec->user_id != s.user && s.role != Role::Chair) {
        send(s, bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation, "not the owner of this request"));
        return;
    }
    PublishGuard guard{this, actor_of(s)};
    if (rec->state == RequestState::Granted) conference_.release_floor(rec->floor_id, *id);
    else conference_.cancel_request(rec->floor_id, *id);
    reply_status(s, msg, *rec);
}

void ConferenceService::on_chair_action(Session& s, const BfcpMessage& msg) {
    if (s.role != Role::Chair) {
        send(s, bfcp::make_error(msg.header, ErrorCode::UnauthorizedOperation, "chair role required"));
        return;
    }
    const auto info = bfcp::first_request_information(msg);
    if (!info || !info->state) {
        send(s, bfcp::make_error(msg.header, ErrorCode::IncorrectMessage,
                                 "FLOOR-REQUEST-INFORMATION with a REQUEST-STATUS is required"));
        return;
    }
    const auto rec = conference_.find(info->request_id);
    if (!rec) {
        send(s, bfcp::make_error(msg.header, ErrorCode::FloorRequestIdDoesNotExist,
                                 "unknown floor request " + std::to_string(info->request_id)));
        return;
    }

    PublishGuard guard{this, actor_of(s)};
    switch (*info->state) {
    case RequestState::Accepted:
    case RequestState::Granted: conference_.chair_accept(rec->floor_id, rec->request_id); break;
    case RequestState::Denied: conference_.chair_deny(rec->floor_id, rec->request_id); break;
    case RequestState::Revoked: conference_.chair_revoke(rec->floor_id, rec->request_id); break;
    default:
        send(s, bfcp::make_error(msg.header, ErrorCode::IncorrectMessage,
                                 "chair cannot set status " + std::string(floor::to_string(*info->state))));
        return;
    }
    send(s, reply_to(msg, Primitive::ChairActionAck));
}

void ConferenceService::on_floor_request_query(Session& s, const BfcpMessage& msg) {
    const auto id = u16_attr(msg, AttributeType::FloorRequestId);
    const auto rec = id ? conference_.find(*id) : std::nullopt;
    if (!rec) {
        send(s, bfcp::make_error(msg.header, ErrorCode::FloorRequestIdDoesNotExist, "unknown floor request"));
        return;
    }
    reply_status(s, msg, *rec);
}

void ConferenceService::on_user_query(Session& s, const BfcpMessage& msg) {
    const auto user = u16_attr(msg, AttributeType::BeneficiaryId).value_or(s.user);
    auto reply = reply_to(msg, Primitive::UserStatus);
    reply.attributes.push_back(wire::attr::grouped(
        AttributeType::BeneficiaryInformation, user,
        {wire::attr::text(AttributeType::UserDisplayName, display_name(user))}));
    for (const auto& r : conference_.live_requests(user)) reply.attributes.push_back(bfcp::request_information(r));
    send(s, reply);
}

void ConferenceService::on_floor_query(Session& s, const BfcpMessage& msg) {
    const auto fid = u16_attr(msg, AttributeType::FloorId);
    if (!fid) {
        send(s, bfcp::make_error(msg.header, ErrorCode::IncorrectMessage, "FLOOR-ID is required"));
        return;
    }
    if (!conference_.has_floor(*fid)) {
        send(s, bfcp::make_error(msg.header, ErrorCode::InvalidFloorId, "unknown floor " + std::to_string(*fid)));
        return;
    }
    send(s, floor_status(msg.header, *fid));
}

}  // namespace umpire::server
