#include "umpire/bfcp/floor_info.hpp"

#include <algorithm>
#include <charconv>

namespace umpire::bfcp {

using wire::AttributeType;

wire::RequestStatus to_wire(floor::RequestState s) {
    // Both enumerations follow the same order, offset by one.
    return static_cast<wire::RequestStatus>(static_cast<int>(s) + 1);
}

floor::RequestState from_wire(wire::RequestStatus s) { return static_cast<floor::RequestState>(static_cast<int>(s) - 1); }

wire::PriorityLevel to_wire(floor::Priority p) {
    return p == floor::Priority::BusinessClass ? wire::PriorityLevel::Highest : wire::PriorityLevel::Normal;
}

wire::Attribute request_information(const floor::FloorRequestRecord& r, std::optional<std::uint64_t> seq) {
    const auto pos = static_cast<std::uint8_t>(std::min<int>(r.queue_position, 255));
    std::vector<wire::Attribute> overall{wire::attr::request_status(to_wire(r.state), pos)};
    if (seq) overall.push_back(wire::attr::text(AttributeType::StatusInfo, "seq=" + std::to_string(*seq)));

    std::vector<wire::Attribute> children;
    children.push_back(wire::attr::grouped(AttributeType::OverallRequestStatus, r.request_id, std::move(overall)));
    children.push_back(wire::attr::grouped(AttributeType::FloorRequestStatus, r.floor_id, {}));
    children.push_back(wire::attr::grouped(AttributeType::BeneficiaryInformation, r.user_id,
                                           {wire::attr::text(AttributeType::UserDisplayName, r.display_name)}));
    children.push_back(wire::attr::priority(to_wire(r.priority)));
    return wire::attr::grouped(AttributeType::FloorRequestInformation, r.request_id, std::move(children));
}

namespace {

void read_status(const wire::Grouped& g, RequestInfo& out) {
    if (const auto* rs = wire::find_child(g, AttributeType::RequestStatus)) {
        const auto& v = std::get<wire::RequestStatusValue>(rs->value);
        out.state = from_wire(v.status);
        out.position = v.queue_position;
    }
    if (const auto* si = wire::find_child(g, AttributeType::StatusInfo)) {
        const auto& text = std::get<std::string>(si->value);
        if (text.starts_with("seq=")) {
            std::uint64_t n = 0;
            auto [p, ec] = std::from_chars(text.data() + 4, text.data() + text.size(), n);
            if (ec == std::errc{}) out.seq = n;
        }
    }
}

}  // namespace

std::optional<RequestInfo> parse_request_information(const wire::Attribute& a) {
    if (!a.is(AttributeType::FloorRequestInformation)) return std::nullopt;
    const auto& g = std::get<wire::Grouped>(a.value);
    RequestInfo out;
    out.request_id = g.id;
    for (const auto& c : g.children) {
        if (c.is(AttributeType::OverallRequestStatus)) {
            read_status(std::get<wire::Grouped>(c.value), out);
        } else if (c.is(AttributeType::FloorRequestStatus)) {
            const auto& frs = std::get<wire::Grouped>(c.value);
            out.floor_id = frs.id;
            if (!out.state) read_status(frs, out);
        } else if (c.is(AttributeType::BeneficiaryInformation)) {
            const auto& bi = std::get<wire::Grouped>(c.value);
            out.user_id = bi.id;
            if (const auto* name = wire::find_child(bi, AttributeType::UserDisplayName)) {
                out.display_name = std::get<std::string>(name->value);
            }
        }
    }
    return out;
}

std::optional<RequestInfo> first_request_information(const wire::BfcpMessage& m) {
    const auto* a = m.find(AttributeType::FloorRequestInformation);
    return a ? parse_request_information(*a) : std::nullopt;
}

wire::ErrorCode error_code_for(floor::FloorErrc e) {
    switch (e) {
    case floor::FloorErrc::UnknownFloor: return wire::ErrorCode::InvalidFloorId;
    case floor::FloorErrc::UnknownRequest: return wire::ErrorCode::FloorRequestIdDoesNotExist;
    case floor::FloorErrc::DuplicateRequest: return wire::ErrorCode::MaxFloorRequestsReached;
    default: return wire::ErrorCode::UnauthorizedOperation;
    }
}

wire::BfcpMessage make_error(const wire::CommonHeader& request, wire::ErrorCode code, const std::string& info,
                             std::vector<std::uint8_t> details) {
    wire::BfcpMessage m;
    m.header = request;
    m.header.primitive = wire::Primitive::Error;
    m.attributes.push_back(wire::attr::error_code(code, std::move(details)));
    if (!info.empty()) m.attributes.push_back(wire::attr::text(AttributeType::ErrorInfo, info));
    return m;
}

std::optional<std::string> provided_info_value(const wire::BfcpMessage& m, std::string_view key) {
    const auto* a = m.find(AttributeType::ParticipantProvidedInfo);
    if (!a) return std::nullopt;
    std::string_view text = std::get<std::string>(a->value);
    while (!text.empty()) {
        const auto end = text.find(';');
        auto item = text.substr(0, end);
        text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        const auto eq = item.find('=');
        if (eq != std::string_view::npos && item.substr(0, eq) == key) return std::string(item.substr(eq + 1));
    }
    return std::nullopt;
}

}  // namespace umpire::bfcp
