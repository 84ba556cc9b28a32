#pragma once

#include "umpire/wire/message.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace umpire::wire {

/// Thrown by encode() when a message breaks a type invariant or carries an
/// attribute that is not legal for its primitive.
class InvalidMessage : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DecodeErrc {
    Truncated,
    BadVersion,
    UnknownPrimitive,
    MalformedAttribute,
    UnknownMandatoryAttribute,
    StreamClosed,
};

std::string_view to_string(DecodeErrc e);

struct DecodeError {
    DecodeErrc code = DecodeErrc::Truncated;
    std::string detail;
    // Raw header fields, valid when header_valid is set, so that a server can
    // address an Error reply to the sender.
    bool header_valid = false;
    std::uint32_t conference_id = 0;
    std::uint16_t transaction_id = 0;
    std::uint16_t user_id = 0;
    // Attribute code for UnknownMandatoryAttribute.
    std::uint8_t attribute_type = 0;
};

using DecodeResult = std::variant<BfcpMessage, DecodeError>;

/// Returns the canonical octet encoding of msg. The header payload length is
/// computed from the attribute block.
std::vector<std::uint8_t> encode(const BfcpMessage& msg);

/// Decodes exactly one message occupying all of bytes. Never throws on
/// malformed input.
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Throws InvalidMessage if msg carries an attribute not allowed for its
/// primitive (recursively through grouped attributes).
void check_legal(const BfcpMessage& msg);

/// Splits an octet stream into messages on header-declared lengths.
/// Single owner. A frame with a readable header but bad contents (unknown
/// primitive, malformed attributes) is reported and skipped; header faults
/// that lose the framing leave the reader failed for good.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);

    /// Next complete frame, or nullopt when more input is needed.
    std::optional<DecodeResult> next();

    /// Call when the underlying stream ends. StreamClosed if it ended on a
    /// frame boundary, Truncated otherwise.
    DecodeError finish() const;

    [[nodiscard]] bool failed() const { return failed_; }
    [[nodiscard]] std::size_t buffered() const { return buffer_.size(); }

private:
    std::deque<std::uint8_t> buffer_;
    bool failed_ = false;
};

}  // namespace umpire::wire
