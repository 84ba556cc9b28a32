#include "oracle/fuzz.hpp"
#include "oracle/message_gen.hpp"
#include "umpire/wire/codec.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace umpire::wire {
namespace {

// Reference packer for the 12-octet common header, written straight from the
// bit layout: ver(3) | reserved(5) | primitive(8) | length(16) | conf(32) |
// transaction(16) | user(16).
std::vector<std::uint8_t> pack_header(std::uint8_t primitive, std::uint16_t words, std::uint32_t conf,
                                      std::uint16_t tx, std::uint16_t user) {
    const std::uint64_t hi = (std::uint64_t{1} << 61) | (std::uint64_t{primitive} << 48) |
                             (std::uint64_t{words} << 32) | conf;
    const std::uint32_t lo = (std::uint32_t{tx} << 16) | user;
    std::vector<std::uint8_t> out;
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(hi >> shift));
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(lo >> shift));
    return out;
}

BfcpMessage hello(std::uint32_t conf, std::uint16_t tx, std::uint16_t user) {
    return {{Primitive::Hello, conf, tx, user}, {}};
}

DecodeError expect_error(const DecodeResult& r) {
    EXPECT_TRUE(std::holds_alternative<DecodeError>(r)) << "expected a decode error";
    return std::holds_alternative<DecodeError>(r) ? std::get<DecodeError>(r) : DecodeError{};
}

TEST(WireEncode, HelloMatchesHandPackedHeader) {
    const auto bytes = encode(hello(1, 7, 2));
    const std::vector<std::uint8_t> expected = {0x20, 0x0B, 0x00, 0x00, 0x00, 0x00,
                                                0x00, 0x01, 0x00, 0x07, 0x00, 0x02};
    EXPECT_EQ(bytes, expected);
    EXPECT_EQ(bytes, pack_header(11, 0, 1, 7, 2));
}

TEST(WireEncode, FloorRequestWithFloorId) {
    BfcpMessage m{{Primitive::FloorRequest, 1, 3, 2}, {attr::floor_id(1)}};
    const auto bytes = encode(m);
    ASSERT_EQ(bytes.size(), 16u);
    auto expected = pack_header(1, 1, 1, 3, 2);
    // FLOOR-ID: type 2, M=1 -> 0x05; length 4; value 0x0001.
    expected.insert(expected.end(), {0x05, 0x04, 0x00, 0x01});
    EXPECT_EQ(bytes, expected);
}

TEST(WireEncode, ZeroAttributesHasZeroPayloadLength) {
    const auto bytes = encode({{Primitive::ChairActionAck, 9, 9, 9}, {}});
    EXPECT_EQ(bytes[2], 0);
    EXPECT_EQ(bytes[3], 0);
}

TEST(WireEncode, TextAttributeIsPaddedWithZeros) {
    BfcpMessage m{{Primitive::Error, 1, 1, 1},
                  {attr::error_code(ErrorCode::UnauthorizedOperation), attr::text(AttributeType::ErrorInfo, "nope!")}};
    const auto bytes = encode(m);
    EXPECT_EQ(bytes.size() % 4, 0u);
    // ERROR-CODE: 3 octets + 1 pad; ERROR-INFO: 2 + 5 = 7 octets + 1 pad.
    ASSERT_EQ(bytes.size(), 12u + 4 + 8);
    EXPECT_EQ(bytes[12 + 1], 3);
    EXPECT_EQ(bytes[12 + 3], 0);
    EXPECT_EQ(bytes[16 + 1], 7);
    EXPECT_EQ(bytes.back(), 0);
}

TEST(WireEncode, RequestStatusCarriesQueuePosition) {
    BfcpMessage m{{Primitive::FloorRequestStatus, 1, 2, 3},
                  {attr::grouped(AttributeType::FloorRequestInformation, 4,
                                 {attr::grouped(AttributeType::OverallRequestStatus, 4,
                                                {attr::request_status(RequestStatus::Pending, 2)})})}};
    const auto bytes = encode(m);
    // FRI header(4) + ORS header(4) + REQUEST-STATUS(4).
    ASSERT_EQ(bytes.size(), 24u);
    EXPECT_EQ(bytes[12 + 1], 12);  // FRI length covers nested attributes
    EXPECT_EQ(bytes[16 + 1], 8);
    EXPECT_EQ(bytes[20], (5 << 1) | 1);
    EXPECT_EQ(bytes[22], 1);  // Pending
    EXPECT_EQ(bytes[23], 2);  // queue position
}

TEST(WireEncode, RejectsAttributeIllegalForPrimitive) {
    BfcpMessage m{{Primitive::Hello, 1, 1, 1}, {attr::floor_id(1)}};
    EXPECT_THROW(encode(m), InvalidMessage);
    BfcpMessage nested{{Primitive::ChairAction, 1, 1, 1},
                       {attr::grouped(AttributeType::FloorRequestInformation, 1, {attr::floor_id(2)})}};
    EXPECT_THROW(encode(nested), InvalidMessage);
}

TEST(WireEncode, RejectsValuesOutOfRange) {
    BfcpMessage long_text{{Primitive::Error, 1, 1, 1},
                          {attr::text(AttributeType::ErrorInfo, std::string(254, 'x'))}};
    EXPECT_THROW(encode(long_text), InvalidMessage);
    BfcpMessage bad_prio{{Primitive::FloorRequest, 1, 1, 1},
                         {Attribute{4, false, PriorityValue{static_cast<PriorityLevel>(6)}}}};
    EXPECT_THROW(encode(bad_prio), InvalidMessage);
    BfcpMessage mismatched{{Primitive::FloorRequest, 1, 1, 1}, {Attribute{2, true, std::string("x")}}};
    EXPECT_THROW(encode(mismatched), InvalidMessage);
    BfcpMessage mandatory_unknown{{Primitive::Hello, 1, 1, 1}, {Attribute{50, true, OpaqueValue{{1}}}}};
    EXPECT_THROW(encode(mandatory_unknown), InvalidMessage);
}

TEST(WireDecode, RoundTripsHello) {
    const auto m = hello(1, 7, 2);
    auto r = decode(encode(m));
    ASSERT_TRUE(std::holds_alternative<BfcpMessage>(r));
    EXPECT_EQ(std::get<BfcpMessage>(r), m);
}

TEST(WireDecode, ElevenZeroOctetsAreTruncated) {
    std::vector<std::uint8_t> zeros(11, 0);
    EXPECT_EQ(expect_error(decode(zeros)).code, DecodeErrc::Truncated);
}

TEST(WireDecode, BadVersion) {
    auto bytes = pack_header(11, 0, 1, 1, 1);
    bytes[0] = 0x40;  // version 2
    auto err = expect_error(decode(bytes));
    EXPECT_EQ(err.code, DecodeErrc::BadVersion);
    EXPECT_TRUE(err.header_valid);
}

TEST(WireDecode, UnknownPrimitiveIsTypedError) {
    for (std::uint8_t p : {0, 14, 200, 255}) {
        auto err = expect_error(decode(pack_header(p, 0, 5, 6, 7)));
        EXPECT_EQ(err.code, DecodeErrc::UnknownPrimitive) << int(p);
        EXPECT_EQ(err.conference_id, 5u);
        EXPECT_EQ(err.transaction_id, 6u);
    }
}

TEST(WireDecode, AttributeLengthOverrunIsMalformed) {
    auto bytes = pack_header(1, 1, 1, 1, 1);
    bytes.insert(bytes.end(), {0x05, 0x09, 0x00, 0x01});
    EXPECT_EQ(expect_error(decode(bytes)).code, DecodeErrc::MalformedAttribute);
}

TEST(WireDecode, UnknownMandatoryAttributeReportedDistinctly) {
    auto bytes = pack_header(11, 1, 1, 1, 1);
    bytes.insert(bytes.end(), {(60 << 1) | 1, 0x04, 0xAB, 0xCD});
    auto err = expect_error(decode(bytes));
    EXPECT_EQ(err.code, DecodeErrc::UnknownMandatoryAttribute);
    EXPECT_EQ(err.attribute_type, 60);
}

TEST(WireDecode, UnknownOptionalAttributeIsPreserved) {
    auto bytes = pack_header(11, 2, 1, 1, 1);
    bytes.insert(bytes.end(), {60 << 1, 0x05, 0xAB, 0xCD, 0xEF, 0x00, 0x00, 0x00});
    auto r = decode(bytes);
    ASSERT_TRUE(std::holds_alternative<BfcpMessage>(r));
    const auto& m = std::get<BfcpMessage>(r);
    ASSERT_EQ(m.attributes.size(), 1u);
    EXPECT_EQ(m.attributes[0].type, 60);
    EXPECT_EQ(std::get<OpaqueValue>(m.attributes[0].value).bytes, (std::vector<std::uint8_t>{0xAB, 0xCD, 0xEF}));
    EXPECT_EQ(encode(m), bytes);
}

TEST(WireDecode, InvalidRequestStatusIsMalformed) {
    auto bytes = pack_header(4, 3, 1, 1, 1);
    bytes.insert(bytes.end(), {(15 << 1) | 1, 12, 0, 1, (18 << 1) | 1, 8, 0, 1, (5 << 1) | 1, 4, 9, 0});
    EXPECT_EQ(expect_error(decode(bytes)).code, DecodeErrc::MalformedAttribute);
}

TEST(WireDecode, PayloadAboveLimitRejected) {
    auto bytes = pack_header(1, 0xFFFF, 1, 1, 1);
    EXPECT_EQ(expect_error(decode(bytes)).code, DecodeErrc::Truncated);
}

TEST(WireProperties, RoundTripAndCanonicalForGeneratedMessages) {
    testing::MessageGenerator gen(0x5eed);
    for (int i = 0; i < 2000; ++i) {
        const auto m = gen.next();
        const auto bytes = encode(m);
        ASSERT_EQ(bytes.size() % 4, 0u);
        auto r = decode(bytes);
        ASSERT_TRUE(std::holds_alternative<BfcpMessage>(r)) << std::get<DecodeError>(r).detail;
        ASSERT_EQ(std::get<BfcpMessage>(r), m) << "iteration " << i;
        ASSERT_EQ(encode(std::get<BfcpMessage>(r)), bytes);
    }
}

TEST(WireProperties, DecodeNeverThrowsOnFuzz) {
    const auto stats = testing::run_decode_fuzz(50'000, std::chrono::seconds(60), 42);
    EXPECT_EQ(stats.inputs, 50'000u);
    EXPECT_EQ(stats.exceptions, 0u);
    EXPECT_EQ(stats.roundtrip_failures, 0u);
    EXPECT_GT(stats.decoded, 0u);
}

TEST(FrameReader, TwoMessagesInOneRead) {
    auto a = encode(hello(1, 1, 1));
    auto b = encode(hello(1, 3, 1));
    a.insert(a.end(), b.begin(), b.end());
    FrameReader reader;
    reader.feed(a);
    auto first = reader.next();
    auto second = reader.next();
    ASSERT_TRUE(first && second);
    EXPECT_EQ(std::get<BfcpMessage>(*first).header.transaction_id, 1);
    EXPECT_EQ(std::get<BfcpMessage>(*second).header.transaction_id, 3);
    EXPECT_FALSE(reader.next());
    EXPECT_EQ(reader.finish().code, DecodeErrc::StreamClosed);
}

TEST(FrameReader, MessageSplitAcrossThreeReads) {
    BfcpMessage m{{Primitive::FloorRequest, 1, 5, 2},
                  {attr::floor_id(1), attr::text(AttributeType::ParticipantProvidedInfo, "hi there")}};
    const auto bytes = encode(m);
    const std::span<const std::uint8_t> all(bytes);
    FrameReader reader;
    reader.feed(all.subspan(0, 5));
    EXPECT_FALSE(reader.next());
    reader.feed(all.subspan(5, 10));
    EXPECT_FALSE(reader.next());
    reader.feed(all.subspan(15));
    auto out = reader.next();
    ASSERT_TRUE(out);
    EXPECT_EQ(std::get<BfcpMessage>(*out), m);
}

TEST(FrameReader, OversizedDeclaredLengthFailsWithoutWaiting) {
    FrameReader reader;
    reader.feed(pack_header(1, 0xFFFF, 1, 1, 1));
    auto out = reader.next();
    ASSERT_TRUE(out);
    EXPECT_EQ(std::get<DecodeError>(*out).code, DecodeErrc::Truncated);
    EXPECT_TRUE(reader.failed());
    reader.feed(encode(hello(1, 1, 1)));
    EXPECT_FALSE(reader.next());  // no resynchronization
}

TEST(FrameReader, ShortStreamIsTruncatedOnClose) {
    FrameReader reader;
    auto bytes = pack_header(1, 100, 1, 1, 1);
    bytes.resize(40);
    reader.feed(bytes);
    EXPECT_FALSE(reader.next());
    EXPECT_EQ(reader.finish().code, DecodeErrc::Truncated);
}

TEST(FrameReader, SkipsFramesWithBadContents) {
    auto bytes = pack_header(20, 0, 1, 1, 1);  // unknown primitive, empty payload
    auto bad_attr = pack_header(11, 1, 1, 3, 1);
    for (std::uint8_t b : {60 << 1 | 1, 0x04, 0x00, 0x00}) bad_attr.push_back(b);  // unknown mandatory type 60
    bytes.insert(bytes.end(), bad_attr.begin(), bad_attr.end());
    const auto good = encode(hello(1, 5, 1));
    bytes.insert(bytes.end(), good.begin(), good.end());

    FrameReader reader;
    reader.feed(bytes);
    EXPECT_EQ(std::get<DecodeError>(*reader.next()).code, DecodeErrc::UnknownPrimitive);
    EXPECT_EQ(std::get<DecodeError>(*reader.next()).code, DecodeErrc::UnknownMandatoryAttribute);
    auto last = reader.next();
    ASSERT_TRUE(last);
    EXPECT_EQ(std::get<BfcpMessage>(*last).header.transaction_id, 5);
    EXPECT_FALSE(reader.failed());
}

}  // namespace
}  // namespace umpire::wire
