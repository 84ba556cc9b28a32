#include "umpire/floor/types.hpp"

#include <algorithm>
#include <cctype>

namespace umpire::floor {

std::string_view to_string(RequestState s) {
    switch (s) {
    case RequestState::Pending: return "PENDING";
    case RequestState::Accepted: return "ACCEPTED";
    case RequestState::Granted: return "GRANTED";
    case RequestState::Denied: return "DENIED";
    case RequestState::Cancelled: return "CANCELLED";
    case RequestState::Released: return "RELEASED";
    case RequestState::Revoked: return "REVOKED";
    }
    return "?";
}

std::string_view to_string(Priority p) { return p == Priority::BusinessClass ? "business" : "normal"; }

std::string_view to_string(Origin o) {
    switch (o) {
    case Origin::Rfid: return "rfid";
    case Origin::BfcpClient: return "bfcp";
    case Origin::Web: return "web";
    }
    return "?";
}

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::RequestStateChanged: return "state";
    case EventKind::QueueReordered: return "reorder";
    case EventKind::PolicyChanged: return "policy";
    }
    return "?";
}

std::string_view to_string(FloorErrc e) {
    switch (e) {
    case FloorErrc::UnknownFloor: return "UnknownFloor";
    case FloorErrc::UnknownRequest: return "UnknownRequest";
    case FloorErrc::DuplicateRequest: return "DuplicateRequest";
    case FloorErrc::NotCancellable: return "NotCancellable";
    case FloorErrc::NotGranted: return "NotGranted";
    case FloorErrc::NotPending: return "NotPending";
    case FloorErrc::NotDeniable: return "NotDeniable";
    case FloorErrc::NotReorderable: return "NotReorderable";
    case FloorErrc::InvalidPolicy: return "InvalidPolicy";
    }
    return "?";
}

std::optional<RequestState> parse_state(std::string_view s) {
    for (auto st : {RequestState::Pending, RequestState::Accepted, RequestState::Granted, RequestState::Denied,
                    RequestState::Cancelled, RequestState::Released, RequestState::Revoked}) {
        const auto name = to_string(st);
        if (s.size() == name.size() &&
            std::equal(s.begin(), s.end(), name.begin(), [](char a, char b) { return std::toupper(a) == b; })) {
            return st;
        }
    }
    return std::nullopt;
}

std::optional<Priority> parse_priority(std::string_view s) {
    if (s == "normal") return Priority::Normal;
    if (s == "business" || s == "business_class") return Priority::BusinessClass;
    return std::nullopt;
}

bool is_legal_transition(RequestState from, RequestState to) {
    using S = RequestState;
    switch (from) {
    case S::Pending: return to == S::Accepted || to == S::Granted || to == S::Denied || to == S::Cancelled;
    case S::Accepted: return to == S::Granted || to == S::Cancelled || to == S::Denied;
    case S::Granted: return to == S::Released || to == S::Revoked;
    default: return false;
    }
}

}  // namespace umpire::floor
