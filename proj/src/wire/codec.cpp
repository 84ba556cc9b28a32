#include "umpire/wire/codec.hpp"

#include <algorithm>
#include <array>
#include <span>

namespace umpire::wire {

namespace {

enum class ValueKind { U16, Priority, RequestStatus, ErrorCode, Text, OctetList, Grouped, Opaque };

std::optional<ValueKind> kind_of(std::uint8_t type) {
    switch (static_cast<AttributeType>(type)) {
    case AttributeType::BeneficiaryId:
    case AttributeType::FloorId:
    case AttributeType::FloorRequestId: return ValueKind::U16;
    case AttributeType::Priority: return ValueKind::Priority;
    case AttributeType::RequestStatus: return ValueKind::RequestStatus;
    case AttributeType::ErrorCode: return ValueKind::ErrorCode;
    case AttributeType::ErrorInfo:
    case AttributeType::ParticipantProvidedInfo:
    case AttributeType::StatusInfo:
    case AttributeType::UserDisplayName: return ValueKind::Text;
    case AttributeType::SupportedAttributes:
    case AttributeType::SupportedPrimitives: return ValueKind::OctetList;
    case AttributeType::BeneficiaryInformation:
    case AttributeType::FloorRequestInformation:
    case AttributeType::RequestedByInformation:
    case AttributeType::FloorRequestStatus:
    case AttributeType::OverallRequestStatus: return ValueKind::Grouped;
    }
    return std::nullopt;
}

ValueKind kind_held(const AttributeValue& v) {
    return std::visit(
        [](const auto& x) -> ValueKind {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::uint16_t>) return ValueKind::U16;
            else if constexpr (std::is_same_v<T, PriorityValue>) return ValueKind::Priority;
            else if constexpr (std::is_same_v<T, RequestStatusValue>) return ValueKind::RequestStatus;
            else if constexpr (std::is_same_v<T, ErrorCodeValue>) return ValueKind::ErrorCode;
            else if constexpr (std::is_same_v<T, std::string>) return ValueKind::Text;
            else if constexpr (std::is_same_v<T, OctetList>) return ValueKind::OctetList;
            else if constexpr (std::is_same_v<T, Grouped>) return ValueKind::Grouped;
            else return ValueKind::Opaque;
        },
        v);
}

using TypeSet = std::span<const AttributeType>;

bool contains(TypeSet set, std::uint8_t type) {
    return std::any_of(set.begin(), set.end(), [type](AttributeType t) { return static_cast<std::uint8_t>(t) == type; });
}

using A = AttributeType;
constexpr std::array kFloorRequestAttrs{A::FloorId, A::BeneficiaryId, A::ParticipantProvidedInfo, A::Priority};
constexpr std::array kRequestIdAttrs{A::FloorRequestId};
constexpr std::array kRequestInfoAttrs{A::FloorRequestInformation};
constexpr std::array kBeneficiaryIdAttrs{A::BeneficiaryId};
constexpr std::array kUserStatusAttrs{A::BeneficiaryInformation, A::FloorRequestInformation};
constexpr std::array kFloorIdAttrs{A::FloorId};
constexpr std::array kFloorStatusAttrs{A::FloorId, A::FloorRequestInformation};
constexpr std::array kHelloAttrs{A::ParticipantProvidedInfo};
constexpr std::array kHelloAckAttrs{A::SupportedPrimitives, A::SupportedAttributes};
constexpr std::array kErrorAttrs{A::ErrorCode, A::ErrorInfo};

constexpr std::array kRequestInfoChildren{A::OverallRequestStatus, A::FloorRequestStatus, A::BeneficiaryInformation,
                                          A::RequestedByInformation, A::Priority, A::ParticipantProvidedInfo};
constexpr std::array kStatusChildren{A::RequestStatus, A::StatusInfo};
constexpr std::array kUserInfoChildren{A::UserDisplayName};

TypeSet allowed_top_level(Primitive p) {
    switch (p) {
    case Primitive::FloorRequest: return kFloorRequestAttrs;
    case Primitive::FloorRelease:
    case Primitive::FloorRequestQuery: return kRequestIdAttrs;
    case Primitive::FloorRequestStatus:
    case Primitive::ChairAction: return kRequestInfoAttrs;
    case Primitive::UserQuery: return kBeneficiaryIdAttrs;
    case Primitive::UserStatus: return kUserStatusAttrs;
    case Primitive::FloorQuery: return kFloorIdAttrs;
    case Primitive::FloorStatus: return kFloorStatusAttrs;
    case Primitive::ChairActionAck: return {};
    case Primitive::Hello: return kHelloAttrs;
    case Primitive::HelloAck: return kHelloAckAttrs;
    case Primitive::Error: return kErrorAttrs;
    }
    return {};
}

TypeSet allowed_children(AttributeType parent) {
    switch (parent) {
    case A::FloorRequestInformation: return kRequestInfoChildren;
    case A::OverallRequestStatus:
    case A::FloorRequestStatus: return kStatusChildren;
    case A::BeneficiaryInformation:
    case A::RequestedByInformation: return kUserInfoChildren;
    default: return {};
    }
}

void check_attribute_legal(const Attribute& a, TypeSet allowed, std::string_view where) {
    if (!is_known_attribute(a.type)) return;  // opaque extension, validated on encode
    if (!contains(allowed, a.type)) {
        throw InvalidMessage(std::string(to_string(static_cast<AttributeType>(a.type))) + " not allowed in " +
                             std::string(where));
    }
    if (const auto* g = std::get_if<Grouped>(&a.value)) {
        auto parent = static_cast<AttributeType>(a.type);
        for (const auto& child : g->children) check_attribute_legal(child, allowed_children(parent), to_string(parent));
    }
}

// ---------------------------------------------------------------------------
// Encoding

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void pad() {
        while (out_.size() % 4 != 0) out_.push_back(0);
    }
    std::size_t size() const { return out_.size(); }
    void patch_u8(std::size_t at, std::uint8_t v) { out_[at] = v; }
    void patch_u16(std::size_t at, std::uint16_t v) {
        out_[at] = static_cast<std::uint8_t>(v >> 8);
        out_[at + 1] = static_cast<std::uint8_t>(v);
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

constexpr std::size_t kMaxAttributeLength = 255;

void encode_attribute(Writer& w, const Attribute& a) {
    if (a.type == 0 || a.type > 0x7F) throw InvalidMessage("attribute type out of range");
    const auto expected = kind_of(a.type);
    const auto held = kind_held(a.value);
    if (expected ? *expected != held : held != ValueKind::Opaque) {
        throw InvalidMessage("attribute value does not match type " + std::to_string(a.type));
    }
    if (!expected && a.mandatory) throw InvalidMessage("unknown attribute cannot be mandatory");

    const std::size_t start = w.size();
    w.u8(static_cast<std::uint8_t>(a.type << 1 | (a.mandatory ? 1 : 0)));
    w.u8(0);  // length, patched below

    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::uint16_t>) {
                w.u16(v);
            } else if constexpr (std::is_same_v<T, PriorityValue>) {
                if (static_cast<std::uint8_t>(v.level) > 4) throw InvalidMessage("priority out of range");
                w.u8(static_cast<std::uint8_t>(static_cast<std::uint8_t>(v.level) << 5));
                w.u8(0);
            } else if constexpr (std::is_same_v<T, RequestStatusValue>) {
                auto s = static_cast<std::uint8_t>(v.status);
                if (s < 1 || s > 7) throw InvalidMessage("request status out of range");
                w.u8(s);
                w.u8(v.queue_position);
            } else if constexpr (std::is_same_v<T, ErrorCodeValue>) {
                if (v.code == 0) throw InvalidMessage("error code 0 is reserved");
                w.u8(v.code);
                w.bytes(v.details);
            } else if constexpr (std::is_same_v<T, std::string>) {
                w.bytes({reinterpret_cast<const std::uint8_t*>(v.data()), v.size()});
            } else if constexpr (std::is_same_v<T, OctetList>) {
                const bool shifted = a.is(AttributeType::SupportedAttributes);
                for (auto item : v.items) {
                    if (shifted && item > 0x7F) throw InvalidMessage("supported attribute code out of range");
                    w.u8(shifted ? static_cast<std::uint8_t>(item << 1) : item);
                }
            } else if constexpr (std::is_same_v<T, Grouped>) {
                w.u16(v.id);
                for (const auto& child : v.children) encode_attribute(w, child);
            } else {
                w.bytes(v.bytes);
            }
        },
        a.value);

    const std::size_t length = w.size() - start;
    if (length > kMaxAttributeLength) throw InvalidMessage("attribute exceeds 255 octets");
    w.patch_u8(start + 1, static_cast<std::uint8_t>(length));
    w.pad();
}

// ---------------------------------------------------------------------------
// Decoding

struct Reader {
    std::span<const std::uint8_t> data;

    std::uint16_t u16(std::size_t at) const { return static_cast<std::uint16_t>(data[at] << 8 | data[at + 1]); }
    std::uint32_t u32(std::size_t at) const {
        return static_cast<std::uint32_t>(u16(at)) << 16 | u16(at + 2);
    }
};

constexpr int kMaxGroupDepth = 8;

struct AttrError {
    DecodeErrc code;
    std::string detail;
    std::uint8_t type = 0;
};

using AttrResult = std::variant<Attribute, AttrError>;

std::optional<AttrError> decode_block(std::span<const std::uint8_t> block, std::vector<Attribute>& out, int depth);

AttrError malformed(std::uint8_t type, std::string what) {
    return {DecodeErrc::MalformedAttribute, std::move(what), type};
}

// Decodes one attribute at the front of block; consumed receives the padded size.
AttrResult decode_attribute(std::span<const std::uint8_t> block, std::size_t& consumed, int depth) {
    if (block.size() < 2) return malformed(0, "attribute header truncated");
    const std::uint8_t type = block[0] >> 1;
    const bool mandatory = (block[0] & 1) != 0;
    const std::size_t length = block[1];
    if (type == 0) return malformed(0, "attribute type 0 is reserved");
    if (length < 2) return malformed(type, "attribute length below 2");
    if (length > block.size()) return malformed(type, "attribute length overruns block");
    const std::size_t padded = (length + 3) & ~std::size_t{3};
    if (padded > block.size()) return malformed(type, "attribute padding overruns block");
    consumed = padded;

    const auto content = block.subspan(2, length - 2);
    const auto kind = kind_of(type);
    if (!kind) {
        if (mandatory) {
            return AttrError{DecodeErrc::UnknownMandatoryAttribute,
                             "unknown mandatory attribute " + std::to_string(type), type};
        }
        return Attribute{type, false, OpaqueValue{{content.begin(), content.end()}}};
    }

    Attribute a{type, mandatory, {}};
    switch (*kind) {
    case ValueKind::U16:
        if (content.size() != 2) return malformed(type, "expected 2-octet value");
        a.value = static_cast<std::uint16_t>(content[0] << 8 | content[1]);
        break;
    case ValueKind::Priority: {
        if (content.size() != 2) return malformed(type, "expected 2-octet priority");
        const std::uint8_t level = content[0] >> 5;
        if (level > 4) return malformed(type, "priority out of range");
        a.value = PriorityValue{static_cast<PriorityLevel>(level)};
        break;
    }
    case ValueKind::RequestStatus:
        if (content.size() != 2) return malformed(type, "expected 2-octet request status");
        if (content[0] < 1 || content[0] > 7) return malformed(type, "request status out of range");
        a.value = RequestStatusValue{static_cast<RequestStatus>(content[0]), content[1]};
        break;
    case ValueKind::ErrorCode:
        if (content.empty()) return malformed(type, "missing error code");
        if (content[0] == 0) return malformed(type, "error code 0 is reserved");
        a.value = ErrorCodeValue{content[0], {content.begin() + 1, content.end()}};
        break;
    case ValueKind::Text:
        a.value = std::string(content.begin(), content.end());
        break;
    case ValueKind::OctetList: {
        OctetList list;
        const bool shifted = a.is(AttributeType::SupportedAttributes);
        for (auto b : content) list.items.push_back(shifted ? static_cast<std::uint8_t>(b >> 1) : b);
        a.value = std::move(list);
        break;
    }
    case ValueKind::Grouped: {
        if (depth >= kMaxGroupDepth) return malformed(type, "grouped attributes nested too deeply");
        if (length % 4 != 0) return malformed(type, "grouped attribute length not word aligned");
        if (content.size() < 2) return malformed(type, "grouped attribute missing identifier");
        Grouped g{static_cast<std::uint16_t>(content[0] << 8 | content[1]), {}};
        if (auto err = decode_block(content.subspan(2), g.children, depth + 1)) return *err;
        a.value = std::move(g);
        break;
    }
    case ValueKind::Opaque: break;
    }
    return a;
}

std::optional<AttrError> decode_block(std::span<const std::uint8_t> block, std::vector<Attribute>& out, int depth) {
    while (!block.empty()) {
        std::size_t consumed = 0;
        auto r = decode_attribute(block, consumed, depth);
        if (auto* err = std::get_if<AttrError>(&r)) return std::move(*err);
        out.push_back(std::move(std::get<Attribute>(r)));
        block = block.subspan(consumed);
    }
    return std::nullopt;
}

DecodeError header_error(DecodeErrc code, std::string detail, Reader r) {
    DecodeError e{code, std::move(detail)};
    if (r.data.size() >= kHeaderSize) {
        e.header_valid = true;
        e.conference_id = r.u32(4);
        e.transaction_id = r.u16(8);
        e.user_id = r.u16(10);
    }
    return e;
}

// Validates the fixed header; on success returns the attribute block length.
std::variant<std::size_t, DecodeError> check_header(Reader r) {
    if (r.data.size() < kHeaderSize) return DecodeError{DecodeErrc::Truncated, "header needs 12 octets"};
    const std::uint8_t version = r.data[0] >> 5;
    if (version != kProtocolVersion) {
        return header_error(DecodeErrc::BadVersion, "version " + std::to_string(version), r);
    }
    const std::size_t payload = std::size_t{r.u16(2)} * 4;
    if (payload > kMaxPayloadOctets) {
        return header_error(DecodeErrc::Truncated, "payload length exceeds 16 KiB limit", r);
    }
    if (!is_known_primitive(r.data[1])) {
        return header_error(DecodeErrc::UnknownPrimitive, "primitive " + std::to_string(r.data[1]), r);
    }
    return payload;
}

}  // namespace

std::string_view to_string(DecodeErrc e) {
    switch (e) {
    case DecodeErrc::Truncated: return "Truncated";
    case DecodeErrc::BadVersion: return "BadVersion";
    case DecodeErrc::UnknownPrimitive: return "UnknownPrimitive";
    case DecodeErrc::MalformedAttribute: return "MalformedAttribute";
    case DecodeErrc::UnknownMandatoryAttribute: return "UnknownMandatoryAttribute";
    case DecodeErrc::StreamClosed: return "StreamClosed";
    }
    return "?";
}

void check_legal(const BfcpMessage& msg) {
    const auto allowed = allowed_top_level(msg.header.primitive);
    for (const auto& a : msg.attributes) check_attribute_legal(a, allowed, to_string(msg.header.primitive));
}

std::vector<std::uint8_t> encode(const BfcpMessage& msg) {
    if (!is_known_primitive(static_cast<std::uint8_t>(msg.header.primitive))) {
        throw InvalidMessage("unknown primitive");
    }
    check_legal(msg);

    Writer w;
    w.u8(kProtocolVersion << 5);
    w.u8(static_cast<std::uint8_t>(msg.header.primitive));
    w.u16(0);  // payload length, patched below
    w.u32(msg.header.conference_id);
    w.u16(msg.header.transaction_id);
    w.u16(msg.header.user_id);
    for (const auto& a : msg.attributes) encode_attribute(w, a);

    const std::size_t payload = w.size() - kHeaderSize;
    if (payload > kMaxPayloadOctets) throw InvalidMessage("attribute block exceeds 16 KiB");
    w.patch_u16(2, static_cast<std::uint16_t>(payload / 4));
    return w.take();
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    Reader r{bytes};
    auto checked = check_header(r);
    if (auto* err = std::get_if<DecodeError>(&checked)) return std::move(*err);
    const std::size_t payload = std::get<std::size_t>(checked);
    if (bytes.size() < kHeaderSize + payload) {
        return header_error(DecodeErrc::Truncated, "attribute block shorter than payload length", r);
    }
    if (bytes.size() > kHeaderSize + payload) {
        return header_error(DecodeErrc::MalformedAttribute, "trailing octets after attribute block", r);
    }

    BfcpMessage msg;
    msg.header.primitive = static_cast<Primitive>(bytes[1]);
    msg.header.conference_id = r.u32(4);
    msg.header.transaction_id = r.u16(8);
    msg.header.user_id = r.u16(10);
    if (auto err = decode_block(bytes.subspan(kHeaderSize), msg.attributes, 0)) {
        auto e = header_error(err->code, std::move(err->detail), r);
        e.attribute_type = err->type;
        return e;
    }
    return msg;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
    if (failed_) return;
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<DecodeResult> FrameReader::next() {
    if (failed_ || buffer_.size() < kHeaderSize) return std::nullopt;

    std::array<std::uint8_t, kHeaderSize> header{};
    std::copy_n(buffer_.begin(), kHeaderSize, header.begin());
    auto checked = check_header(Reader{header});
    // An unknown primitive still has a trustworthy length, so the frame can
    // be skipped. Any other header fault leaves no way to find the next frame.
    if (auto* err = std::get_if<DecodeError>(&checked); err && err->code != DecodeErrc::UnknownPrimitive) {
        failed_ = true;
        return DecodeResult{std::move(*err)};
    }
    const std::size_t total = kHeaderSize + (static_cast<std::size_t>(header[2] << 8 | header[3]) * 4);
    if (buffer_.size() < total) return std::nullopt;

    std::vector<std::uint8_t> frame(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(total));
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(total));
    return decode(frame);
}

DecodeError FrameReader::finish() const {
    if (buffer_.empty()) return {DecodeErrc::StreamClosed, "stream closed"};
    return {DecodeErrc::Truncated, "stream closed mid-frame"};
}

}  // namespace umpire::wire
