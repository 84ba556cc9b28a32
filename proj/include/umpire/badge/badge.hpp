#pragma once

#include "umpire/floor/types.hpp"
#include "umpire/server/conference_service.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

namespace umpire::badge {

struct BadgeHolder {
    floor::UserId user_id = 0;
    std::string display_name;
    bool operator==(const BadgeHolder&) const = default;
};

/// Who wears which tag, and which floor each reader's microphone belongs to.
struct BadgeDirectory {
    std::map<std::string, BadgeHolder> tags;
    std::map<std::string, floor::FloorId> readers;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// CSV, one record per line:
///   <tag>,<user_id>,<display_name>
///   reader,<reader_id>,<floor_id>
/// Blank lines and lines starting with '#' are skipped. When floors is
/// given, readers must point at one of them.
BadgeDirectory parse_directory(std::string_view text, const std::set<floor::FloorId>* floors = nullptr);
BadgeDirectory load_directory(const std::filesystem::path& path, const std::set<floor::FloorId>* floors = nullptr);

struct BadgeEvent {
    std::string tag;
    std::string reader_id;
    floor::Clock::time_point ts{};
};

/// Parses "TAG <lowercase-hex> READER <token>" (trailing CR tolerated).
/// Throws std::invalid_argument naming what is wrong.
BadgeEvent parse_feed_line(std::string_view line);

enum class IngestOutcome { Requested, Released, Cancelled, Debounced, UnknownTag, UnknownReader, Rejected };

std::string_view to_string(IngestOutcome o);

struct IngestResult {
    IngestOutcome outcome = IngestOutcome::Rejected;
    std::optional<floor::FloorRequestRecord> record;
    std::string detail;

    [[nodiscard]] bool acted() const {
        return outcome == IngestOutcome::Requested || outcome == IngestOutcome::Released ||
               outcome == IngestOutcome::Cancelled;
    }
    /// One-line answer written back on the feed connection.
    [[nodiscard]] std::string reply_line() const;
};

/// Turns badge reads into floor requests: the first read asks for the
/// floor, the next one withdraws it.
class BadgeGateway {
public:
    BadgeGateway(std::shared_ptr<server::ConferenceService> conference, BadgeDirectory directory,
                 std::chrono::milliseconds debounce = std::chrono::seconds(2));

    IngestResult ingest(const BadgeEvent& event);

    /// Swaps the whole mapping at once; reads already being processed finish
    /// against the old one.
    void replace_directory(BadgeDirectory directory);
    [[nodiscard]] std::shared_ptr<const BadgeDirectory> directory() const;

    void set_clock(std::function<floor::Clock::time_point()> now) { now_ = std::move(now); }

private:
    std::shared_ptr<server::ConferenceService> conference_;
    std::chrono::milliseconds debounce_;
    std::function<floor::Clock::time_point()> now_ = [] { return floor::Clock::now(); };

    mutable std::mutex mu_;
    std::shared_ptr<const BadgeDirectory> directory_;
    std::map<std::pair<std::string, std::string>, floor::Clock::time_point> last_read_;
};

/// Reads feed lines from a stream until EOF, answering each on out.
void serve_stream(BadgeGateway& gateway, std::istream& in, std::ostream* out);

/// Accepts badge-feed connections on a TCP port.
class BadgeFeedServer {
public:
    BadgeFeedServer(BadgeGateway& gateway, std::string host, std::uint16_t port);
    ~BadgeFeedServer();

    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const { return port_; }

private:
    void accept_loop();
    void serve(int fd);

    BadgeGateway& gateway_;
    std::string host_;
    std::uint16_t port_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::list<std::thread> workers_;
    std::set<int> open_fds_;
};

}  // namespace umpire::badge
