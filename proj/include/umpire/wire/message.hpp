#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace umpire::wire {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 12;
/// Largest attribute block the decoder accepts, in octets.
inline constexpr std::size_t kMaxPayloadOctets = 16 * 1024;

enum class Primitive : std::uint8_t {
    FloorRequest = 1,
    FloorRelease = 2,
    FloorRequestQuery = 3,
    FloorRequestStatus = 4,
    UserQuery = 5,
    UserStatus = 6,
    FloorQuery = 7,
    FloorStatus = 8,
    ChairAction = 9,
    ChairActionAck = 10,
    Hello = 11,
    HelloAck = 12,
    Error = 13,
};

enum class AttributeType : std::uint8_t {
    BeneficiaryId = 1,
    FloorId = 2,
    FloorRequestId = 3,
    Priority = 4,
    RequestStatus = 5,
    ErrorCode = 6,
    ErrorInfo = 7,
    ParticipantProvidedInfo = 8,
    StatusInfo = 9,
    SupportedAttributes = 10,
    SupportedPrimitives = 11,
    UserDisplayName = 12,
    BeneficiaryInformation = 14,
    FloorRequestInformation = 15,
    RequestedByInformation = 16,
    FloorRequestStatus = 17,
    OverallRequestStatus = 18,
};

enum class RequestStatus : std::uint8_t {
    Pending = 1,
    Accepted = 2,
    Granted = 3,
    Denied = 4,
    Cancelled = 5,
    Released = 6,
    Revoked = 7,
};

enum class ErrorCode : std::uint8_t {
    ConferenceDoesNotExist = 1,
    UserDoesNotExist = 2,
    UnknownPrimitive = 3,
    UnknownMandatoryAttribute = 4,
    UnauthorizedOperation = 5,
    InvalidFloorId = 6,
    FloorRequestIdDoesNotExist = 7,
    MaxFloorRequestsReached = 8,
    UseTls = 9,
    IncorrectMessage = 10,
};

/// Priority levels carried in the PRIORITY attribute (3-bit field).
enum class PriorityLevel : std::uint8_t { Lowest = 0, Low = 1, Normal = 2, High = 3, Highest = 4 };

std::string_view to_string(Primitive p);
std::string_view to_string(AttributeType t);
std::string_view to_string(RequestStatus s);

bool is_known_primitive(std::uint8_t raw);
bool is_known_attribute(std::uint8_t raw);

struct CommonHeader {
    Primitive primitive = Primitive::Hello;
    std::uint32_t conference_id = 0;
    std::uint16_t transaction_id = 0;
    std::uint16_t user_id = 0;

    bool operator==(const CommonHeader&) const = default;
};

struct Attribute;

struct RequestStatusValue {
    RequestStatus status = RequestStatus::Pending;
    std::uint8_t queue_position = 0;
    bool operator==(const RequestStatusValue&) const = default;
};

struct ErrorCodeValue {
    std::uint8_t code = 0;
    std::vector<std::uint8_t> details;
    bool operator==(const ErrorCodeValue&) const = default;
};

struct PriorityValue {
    PriorityLevel level = PriorityLevel::Normal;
    bool operator==(const PriorityValue&) const = default;
};

/// SUPPORTED-ATTRIBUTES / SUPPORTED-PRIMITIVES: one raw code per octet.
struct OctetList {
    std::vector<std::uint8_t> items;
    bool operator==(const OctetList&) const = default;
};

/// Grouped attribute: a 16-bit identifier followed by nested attributes.
struct Grouped {
    std::uint16_t id = 0;
    std::vector<Attribute> children;
};

/// Contents of an attribute type this codec does not know. Only ever
/// produced for non-mandatory attributes.
struct OpaqueValue {
    std::vector<std::uint8_t> bytes;
    bool operator==(const OpaqueValue&) const = default;
};

using AttributeValue = std::variant<std::uint16_t, PriorityValue, RequestStatusValue, ErrorCodeValue,
                                    std::string, OctetList, Grouped, OpaqueValue>;

struct Attribute {
    std::uint8_t type = 0;  // 7-bit code; see AttributeType
    bool mandatory = false;
    AttributeValue value;

    [[nodiscard]] bool is(AttributeType t) const { return type == static_cast<std::uint8_t>(t); }
};

bool operator==(const Grouped& a, const Grouped& b);
bool operator==(const Attribute& a, const Attribute& b);

struct BfcpMessage {
    CommonHeader header;
    std::vector<Attribute> attributes;

    bool operator==(const BfcpMessage&) const = default;

    [[nodiscard]] const Attribute* find(AttributeType t) const;
    [[nodiscard]] std::vector<const Attribute*> find_all(AttributeType t) const;
};

/// Finds the first nested attribute of the given type inside a grouped attribute.
const Attribute* find_child(const Grouped& g, AttributeType t);

// Attribute constructors. Mandatory bit defaults follow what a floor control
// server needs the peer to understand.
namespace attr {
Attribute beneficiary_id(std::uint16_t user, bool mandatory = true);
Attribute floor_id(std::uint16_t floor, bool mandatory = true);
Attribute floor_request_id(std::uint16_t request, bool mandatory = true);
Attribute priority(PriorityLevel level, bool mandatory = false);
Attribute request_status(RequestStatus status, std::uint8_t queue_position, bool mandatory = true);
Attribute error_code(ErrorCode code, std::vector<std::uint8_t> details = {}, bool mandatory = true);
Attribute text(AttributeType type, std::string value, bool mandatory = false);
Attribute octets(AttributeType type, std::vector<std::uint8_t> items, bool mandatory = true);
Attribute grouped(AttributeType type, std::uint16_t id, std::vector<Attribute> children, bool mandatory = true);
Attribute opaque(std::uint8_t type, std::vector<std::uint8_t> bytes);
}  // namespace attr

}  // namespace umpire::wire
