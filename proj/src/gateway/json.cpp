#include "umpire/gateway/json.hpp"

#include <stdexcept>

namespace umpire::gateway {

using namespace floor;

Json to_json(const FloorRequestRecord& r) {
    return {
        {"request_id", r.request_id},
        {"floor_id", r.floor_id},
        {"user_id", r.user_id},
        {"display_name", r.display_name},
        {"origin", to_string(r.origin)},
        {"priority", to_string(r.priority)},
        {"state", to_string(r.state)},
        {"position", r.queue_position},
    };
}

Json to_json(const FloorPolicy& p) { return {{"max_granted", p.max_granted}, {"auto_grant", p.auto_grant}}; }

Json to_json(const std::vector<QueuePosition>& queue) {
    Json out = Json::array();
    for (const auto& q : queue) out.push_back({{"request_id", q.request_id}, {"position", q.position}});
    return out;
}

Json entries_json(const QueueSnapshot& s) {
    Json out = Json::array();
    for (const auto& r : s.entries) out.push_back(to_json(r));
    return out;
}

Json to_json(const QueueSnapshot& s) {
    return {{"floor_id", s.floor_id}, {"policy", to_json(s.policy)}, {"entries", entries_json(s)},
            {"seq", s.last_event_seq}};
}

Json to_json(const server::ConferenceView& v) {
    Json floors = Json::array();
    for (const auto& f : v.floors) floors.push_back(to_json(f));
    return {{"seq", v.seq}, {"floors", floors}};
}

Json to_json(const FloorEvent& e) {
    Json j{{"seq", e.seq}, {"floor_id", e.floor_id}, {"queue", to_json(e.queue)}};
    if (e.request) j["request"] = to_json(*e.request);
    if (e.old_state) j["old_state"] = to_string(*e.old_state);
    if (e.new_state) j["state"] = to_string(*e.new_state);
    if (e.policy) j["policy"] = to_json(*e.policy);
    return j;
}

namespace {

template <typename T>
T field(const Json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw std::invalid_argument(std::string("missing field ") + name);
    try {
        return j.at(name).get<T>();
    } catch (const Json::exception&) {
        throw std::invalid_argument(std::string("bad field ") + name);
    }
}

}  // namespace

FloorRequestRecord record_from_json(const Json& j) {
    FloorRequestRecord r;
    r.request_id = field<RequestId>(j, "request_id");
    r.floor_id = field<FloorId>(j, "floor_id");
    r.user_id = field<UserId>(j, "user_id");
    r.display_name = field<std::string>(j, "display_name");
    const auto origin = field<std::string>(j, "origin");
    if (origin == "rfid") r.origin = Origin::Rfid;
    else if (origin == "bfcp") r.origin = Origin::BfcpClient;
    else if (origin == "web") r.origin = Origin::Web;
    else throw std::invalid_argument("bad origin " + origin);
    auto priority = parse_priority(field<std::string>(j, "priority"));
    auto state = parse_state(field<std::string>(j, "state"));
    if (!priority || !state) throw std::invalid_argument("bad priority or state");
    r.priority = *priority;
    r.state = *state;
    r.queue_position = field<std::uint16_t>(j, "position");
    return r;
}

FloorPolicy policy_from_json(const Json& j) {
    FloorPolicy p;
    p.max_granted = field<std::uint16_t>(j, "max_granted");
    if (j.contains("auto_grant")) p.auto_grant = field<bool>(j, "auto_grant");
    return p;
}

std::string sse_frame(std::uint64_t id, std::string_view event, const Json& data) {
    std::string out = "id: " + std::to_string(id) + "\nevent: ";
    out += event;
    out += "\ndata: " + data.dump() + "\n\n";
    return out;
}

}  // namespace umpire::gateway
