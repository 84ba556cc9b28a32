#pragma once

// Mapping between floor records and their BFCP representation, shared by
// the server (building notifications) and the client (reading them).

#include "umpire/floor/types.hpp"
#include "umpire/wire/message.hpp"

#include <optional>
#include <string>

namespace umpire::bfcp {

wire::RequestStatus to_wire(floor::RequestState s);
floor::RequestState from_wire(wire::RequestStatus s);
wire::PriorityLevel to_wire(floor::Priority p);

/// FLOOR-REQUEST-INFORMATION for one record. When seq is given it travels
/// as STATUS-INFO "seq=<n>" so receivers can check delivery order.
wire::Attribute request_information(const floor::FloorRequestRecord& r, std::optional<std::uint64_t> seq = {});

/// What a client can learn from a FLOOR-REQUEST-INFORMATION attribute.
struct RequestInfo {
    floor::RequestId request_id = 0;
    floor::FloorId floor_id = 0;
    floor::UserId user_id = 0;
    std::optional<floor::RequestState> state;
    std::uint8_t position = 0;
    std::string display_name;
    std::optional<std::uint64_t> seq;
};

std::optional<RequestInfo> parse_request_information(const wire::Attribute& a);

/// First FLOOR-REQUEST-INFORMATION in a message, parsed.
std::optional<RequestInfo> first_request_information(const wire::BfcpMessage& m);

wire::ErrorCode error_code_for(floor::FloorErrc e);

wire::BfcpMessage make_error(const wire::CommonHeader& request, wire::ErrorCode code, const std::string& info,
                             std::vector<std::uint8_t> details = {});

/// Key/value pairs in PARTICIPANT-PROVIDED-INFO, e.g. "name=alice;chair-token=s3cret".
std::optional<std::string> provided_info_value(const wire::BfcpMessage& m, std::string_view key);

}  // namespace umpire::bfcp
