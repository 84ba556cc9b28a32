#pragma once

#include "umpire/floor/types.hpp"
#include "umpire/server/conference_service.hpp"

#include <json.hpp>

// JSON shapes shared by the HTTP gateway, its clients and the console.
// Field names are part of the external contract.
namespace umpire::gateway {

using Json = nlohmann::json;

Json to_json(const floor::FloorRequestRecord& r);
Json to_json(const floor::FloorPolicy& p);
Json to_json(const std::vector<floor::QueuePosition>& queue);
/// Entries array in snapshot order, as served by the queue endpoint.
Json entries_json(const floor::QueueSnapshot& s);
Json to_json(const floor::QueueSnapshot& s);
/// Payload of the "snapshot" stream event.
Json to_json(const server::ConferenceView& v);
/// Payload of a "state", "reorder" or "policy" stream event.
Json to_json(const floor::FloorEvent& e);

/// Throws std::invalid_argument on missing or malformed fields.
floor::FloorRequestRecord record_from_json(const Json& j);
floor::FloorPolicy policy_from_json(const Json& j);

/// One server-sent event frame ("id:", "event:", "data:" and a blank line).
std::string sse_frame(std::uint64_t id, std::string_view event, const Json& data);

}  // namespace umpire::gateway
