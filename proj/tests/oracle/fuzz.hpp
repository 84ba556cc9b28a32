#pragma once

// Decoder fuzz harness. The oracle is behavioral: decode() must return
// either a message or a typed error for every input, and anything it
// accepts must survive a re-encode/decode cycle unchanged.

#include "message_gen.hpp"
#include "umpire/wire/codec.hpp"

#include <chrono>
#include <map>
#include <string>

namespace umpire::testing {

struct FuzzStats {
    std::size_t inputs = 0;
    std::size_t decoded = 0;
    std::map<wire::DecodeErrc, std::size_t> errors;
    std::size_t roundtrip_failures = 0;
    std::size_t exceptions = 0;
};

inline std::vector<std::uint8_t> fuzz_input(MessageGenerator& gen) {
    auto& rng = gen.rng();
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    std::vector<std::uint8_t> bytes;
    switch (pick(0, 3)) {
    case 0: {  // raw noise
        bytes.resize(static_cast<std::size_t>(pick(0, 64)));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(pick(0, 255));
        break;
    }
    case 1: {  // valid header, noisy attribute block
        const std::size_t words = static_cast<std::size_t>(pick(0, 12));
        bytes = {0x20, static_cast<std::uint8_t>(pick(0, 15)), 0, static_cast<std::uint8_t>(words)};
        bytes.resize(12 + words * 4);
        for (std::size_t i = 4; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(pick(0, 255));
        break;
    }
    default: {  // mutated valid encoding
        bytes = wire::encode(gen.next());
        const int mutations = pick(1, 4);
        for (int i = 0; i < mutations && !bytes.empty(); ++i) {
            const auto at = static_cast<std::size_t>(pick(0, static_cast<int>(bytes.size()) - 1));
            switch (pick(0, 3)) {
            case 0: bytes[at] ^= static_cast<std::uint8_t>(1u << pick(0, 7)); break;
            case 1: bytes[at] = static_cast<std::uint8_t>(pick(0, 255)); break;
            case 2: bytes.resize(at); break;
            default: bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(pick(0, 255))); break;
            }
        }
        break;
    }
    }
    return bytes;
}

/// Runs until max_inputs have been decoded or the time budget is spent.
inline FuzzStats run_decode_fuzz(std::size_t max_inputs, std::chrono::seconds budget, std::uint64_t seed) {
    MessageGenerator gen(seed);
    FuzzStats stats;
    const auto deadline = std::chrono::steady_clock::now() + budget;
    while (stats.inputs < max_inputs) {
        if ((stats.inputs & 0x3FFF) == 0 && std::chrono::steady_clock::now() > deadline) break;
        const auto bytes = fuzz_input(gen);
        ++stats.inputs;
        try {
            auto result = wire::decode(bytes);
            if (auto* err = std::get_if<wire::DecodeError>(&result)) {
                ++stats.errors[err->code];
                continue;
            }
            ++stats.decoded;
            const auto& msg = std::get<wire::BfcpMessage>(result);
            try {
                wire::check_legal(msg);
            } catch (const wire::InvalidMessage&) {
                continue;  // decodable but not legal for its primitive
            }
            auto again = wire::decode(wire::encode(msg));
            if (!std::holds_alternative<wire::BfcpMessage>(again) || std::get<wire::BfcpMessage>(again) != msg) {
                ++stats.roundtrip_failures;
            }
        } catch (...) {
            ++stats.exceptions;
        }
    }
    return stats;
}

}  // namespace umpire::testing
