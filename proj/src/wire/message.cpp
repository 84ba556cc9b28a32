#include "umpire/wire/message.hpp"

namespace umpire::wire {

std::string_view to_string(Primitive p) {
    switch (p) {
    case Primitive::FloorRequest: return "FloorRequest";
    case Primitive::FloorRelease: return "FloorRelease";
    case Primitive::FloorRequestQuery: return "FloorRequestQuery";
    case Primitive::FloorRequestStatus: return "FloorRequestStatus";
    case Primitive::UserQuery: return "UserQuery";
    case Primitive::UserStatus: return "UserStatus";
    case Primitive::FloorQuery: return "FloorQuery";
    case Primitive::FloorStatus: return "FloorStatus";
    case Primitive::ChairAction: return "ChairAction";
    case Primitive::ChairActionAck: return "ChairActionAck";
    case Primitive::Hello: return "Hello";
    case Primitive::HelloAck: return "HelloAck";
    case Primitive::Error: return "Error";
    }
    return "?";
}

std::string_view to_string(AttributeType t) {
    switch (t) {
    case AttributeType::BeneficiaryId: return "BENEFICIARY-ID";
    case AttributeType::FloorId: return "FLOOR-ID";
    case AttributeType::FloorRequestId: return "FLOOR-REQUEST-ID";
    case AttributeType::Priority: return "PRIORITY";
    case AttributeType::RequestStatus: return "REQUEST-STATUS";
    case AttributeType::ErrorCode: return "ERROR-CODE";
    case AttributeType::ErrorInfo: return "ERROR-INFO";
    case AttributeType::ParticipantProvidedInfo: return "PARTICIPANT-PROVIDED-INFO";
    case AttributeType::StatusInfo: return "STATUS-INFO";
    case AttributeType::SupportedAttributes: return "SUPPORTED-ATTRIBUTES";
    case AttributeType::SupportedPrimitives: return "SUPPORTED-PRIMITIVES";
    case AttributeType::UserDisplayName: return "USER-DISPLAY-NAME";
    case AttributeType::BeneficiaryInformation: return "BENEFICIARY-INFORMATION";
    case AttributeType::FloorRequestInformation: return "FLOOR-REQUEST-INFORMATION";
    case AttributeType::RequestedByInformation: return "REQUESTED-BY-INFORMATION";
    case AttributeType::FloorRequestStatus: return "FLOOR-REQUEST-STATUS";
    case AttributeType::OverallRequestStatus: return "OVERALL-REQUEST-STATUS";
    }
    return "?";
}

std::string_view to_string(RequestStatus s) {
    switch (s) {
    case RequestStatus::Pending: return "Pending";
    case RequestStatus::Accepted: return "Accepted";
    case RequestStatus::Granted: return "Granted";
    case RequestStatus::Denied: return "Denied";
    case RequestStatus::Cancelled: return "Cancelled";
    case RequestStatus::Released: return "Released";
    case RequestStatus::Revoked: return "Revoked";
    }
    return "?";
}

bool is_known_primitive(std::uint8_t raw) { return raw >= 1 && raw <= 13; }

bool is_known_attribute(std::uint8_t raw) { return (raw >= 1 && raw <= 12) || (raw >= 14 && raw <= 18); }

bool operator==(const Grouped& a, const Grouped& b) { return a.id == b.id && a.children == b.children; }

bool operator==(const Attribute& a, const Attribute& b) {
    return a.type == b.type && a.mandatory == b.mandatory && a.value == b.value;
}

const Attribute* BfcpMessage::find(AttributeType t) const {
    for (const auto& a : attributes) {
        if (a.is(t)) return &a;
    }
    return nullptr;
}

std::vector<const Attribute*> BfcpMessage::find_all(AttributeType t) const {
    std::vector<const Attribute*> out;
    for (const auto& a : attributes) {
        if (a.is(t)) out.push_back(&a);
    }
    return out;
}

const Attribute* find_child(const Grouped& g, AttributeType t) {
    for (const auto& a : g.children) {
        if (a.is(t)) return &a;
    }
    return nullptr;
}

namespace attr {

namespace {
constexpr std::uint8_t code(AttributeType t) { return static_cast<std::uint8_t>(t); }
}  // namespace

Attribute beneficiary_id(std::uint16_t user, bool mandatory) {
    return {code(AttributeType::BeneficiaryId), mandatory, user};
}

Attribute floor_id(std::uint16_t floor, bool mandatory) { return {code(AttributeType::FloorId), mandatory, floor}; }

Attribute floor_request_id(std::uint16_t request, bool mandatory) {
    return {code(AttributeType::FloorRequestId), mandatory, request};
}

Attribute priority(PriorityLevel level, bool mandatory) {
    return {code(AttributeType::Priority), mandatory, PriorityValue{level}};
}

Attribute request_status(RequestStatus status, std::uint8_t queue_position, bool mandatory) {
    return {code(AttributeType::RequestStatus), mandatory, RequestStatusValue{status, queue_position}};
}

Attribute error_code(ErrorCode c, std::vector<std::uint8_t> details, bool mandatory) {
    return {code(AttributeType::ErrorCode), mandatory,
            ErrorCodeValue{static_cast<std::uint8_t>(c), std::move(details)}};
}

Attribute text(AttributeType type, std::string value, bool mandatory) {
    return {code(type), mandatory, std::move(value)};
}

Attribute octets(AttributeType type, std::vector<std::uint8_t> items, bool mandatory) {
    return {code(type), mandatory, OctetList{std::move(items)}};
}

Attribute grouped(AttributeType type, std::uint16_t id, std::vector<Attribute> children, bool mandatory) {
    return {code(type), mandatory, Grouped{id, std::move(children)}};
}

Attribute opaque(std::uint8_t type, std::vector<std::uint8_t> bytes) {
    return {type, false, OpaqueValue{std::move(bytes)}};
}

}  // namespace attr

}  // namespace umpire::wire
