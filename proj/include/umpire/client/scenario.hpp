#pragma once

#include "umpire/client/bfcp_client.hpp"
#include "umpire/client/http_client.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace umpire::client {

class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class ActorKind { Participant, Web, Badge };

/// What one queue entry is expected to look like.
struct Expectation {
    std::string actor;
    floor::RequestState state = floor::RequestState::Pending;
    std::optional<std::uint16_t> position;
};

/// One line of a scenario file. Grammar (one step per line, '#' comments):
///
///   participant <name> connect user <id>
///   participant <name> request|release floor <f> [expect <state> [pos <n>]]
///   participant <name> await <state> [within <ms>]
///   web <name> join
///   web <name> request|release floor <f> [expect ...]
///   badge <name> tag <hex> reader <id>          declares a badge wearer
///   badge <name> read [expect ...]
///   chair accept|deny|revoke <actor> [floor <f>] [expect ...]
///   chair priority <actor> normal|business [floor <f>]
///   chair revoke-all floor <f>
///   chair policy floor <f> max <n> [auto on|off]
///   expect floor <f> <actor> <state> [pos <n>] {, <actor> <state> [pos <n>]}
///   expect-exact floor <f> empty | <same list as expect>
struct ScenarioStep {
    std::size_t line = 0;
    std::string text;
    std::vector<std::string> words;
    floor::FloorId floor = 1;
    std::vector<Expectation> expect;
    bool exact = false;
};

struct Scenario {
    std::string name;
    std::vector<ScenarioStep> steps;
};

Scenario parse_scenario(std::string_view text, std::string name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

struct ScenarioTarget {
    std::string host = "127.0.0.1";
    std::uint16_t bfcp_port = 8124;
    std::uint16_t http_port = 8080;
    std::uint16_t badge_port = 8125;
    std::uint32_t conference_id = 1;
    std::string chair_token;
    std::chrono::milliseconds timeout{5000};
};

struct StepResult {
    std::size_t line = 0;
    std::string text;
    bool ok = true;
    std::string diff;  // expected vs actual on failure
    // Queue of the step's floor as served after the step.
    std::vector<floor::FloorRequestRecord> queue;
};

struct ScenarioReport {
    std::string name;
    bool passed = true;
    std::vector<StepResult> steps;
    std::chrono::milliseconds elapsed{0};

    /// First failing step, if any.
    [[nodiscard]] const StepResult* failure() const;
    [[nodiscard]] std::string text() const;
};

/// Drives BFCP sessions, chair HTTP calls and badge-feed lines against a
/// running daemon, checking the served queue after every step. Stops at the
/// first divergence.
class ScenarioRunner {
public:
    explicit ScenarioRunner(ScenarioTarget target);
    ~ScenarioRunner();

    ScenarioReport run(const Scenario& scenario);

    /// Sessions opened for participant actors, for inspecting their notifications.
    [[nodiscard]] BfcpClient* participant(const std::string& name);

private:
    struct Actor {
        ActorKind kind = ActorKind::Participant;
        floor::UserId user_id = 0;
        std::unique_ptr<BfcpClient> bfcp;
        std::unique_ptr<WebClient> web;
        std::string tag, reader;
        std::map<floor::FloorId, floor::RequestId> requests;
    };

    void execute(const ScenarioStep& step, StepResult& result);
    std::string badge_line(const std::string& line);
    Actor& actor(const ScenarioStep& step, const std::string& name);
    const floor::FloorRequestRecord* find_entry(const std::vector<floor::FloorRequestRecord>& queue,
                                                const std::string& name, floor::FloorId floor) const;
    std::string check(const ScenarioStep& step, floor::FloorId floor,
                      const std::vector<floor::FloorRequestRecord>& queue) const;
    floor::RequestId request_of(const ScenarioStep& step, const std::string& name, floor::FloorId floor);

    ScenarioTarget target_;
    std::unique_ptr<ChairClient> chair_;
    std::map<std::string, Actor> actors_;
    int badge_fd_ = -1;
    std::string badge_buffer_;
};

}  // namespace umpire::client
