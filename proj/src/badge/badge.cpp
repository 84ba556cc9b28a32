#include "umpire/badge/badge.hpp"

#include <spdlog/spdlog.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace umpire::badge {

using floor::RequestState;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_lower_hex(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c)) && (c < 'a' || c > 'f')) return false;
    }
    return true;
}

template <typename T>
std::optional<T> to_number(std::string_view s) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

BadgeDirectory parse_directory(std::string_view text, const std::set<floor::FloorId>* floors) {
    BadgeDirectory dir;
    std::map<std::string, std::size_t> tag_line, reader_line;
    std::size_t lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        auto line = trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> fields;
        for (std::size_t start = 0;;) {
            const auto comma = line.find(',', start);
            fields.push_back(trim(line.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 3) throw ParseError(lineno, "expected 3 comma-separated fields, got " + std::to_string(fields.size()));

        if (fields[0] == "reader") {
            const std::string reader(fields[1]);
            const auto floor_id = to_number<floor::FloorId>(fields[2]);
            if (reader.empty()) throw ParseError(lineno, "empty reader id");
            if (!floor_id) throw ParseError(lineno, "bad floor id '" + std::string(fields[2]) + "'");
            if (floors && !floors->contains(*floor_id)) {
                throw ParseError(lineno, "reader " + reader + " points at unknown floor " + std::to_string(*floor_id));
            }
            if (auto [it, fresh] = reader_line.emplace(reader, lineno); !fresh) {
                throw ParseError(lineno, "duplicate reader " + reader + " on lines " + std::to_string(it->second) +
                                             " and " + std::to_string(lineno));
            }
            dir.readers[reader] = *floor_id;
            continue;
        }

        const std::string tag(fields[0]);
        if (!is_lower_hex(tag)) throw ParseError(lineno, "tag '" + tag + "' is not lowercase hex");
        const auto user = to_number<floor::UserId>(fields[1]);
        if (!user || *user == 0) throw ParseError(lineno, "bad user id '" + std::string(fields[1]) + "'");
        if (fields[2].empty()) throw ParseError(lineno, "empty display name");
        if (auto [it, fresh] = tag_line.emplace(tag, lineno); !fresh) {
            throw ParseError(lineno, "duplicate tag " + tag + " on lines " + std::to_string(it->second) + " and " +
                                         std::to_string(lineno));
        }
        dir.tags[tag] = {*user, std::string(fields[2])};
    }
    return dir;
}

BadgeDirectory load_directory(const std::filesystem::path& path, const std::set<floor::FloorId>* floors) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open badge directory " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_directory(ss.str(), floors);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
    }
}

BadgeEvent parse_feed_line(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> words;
    for (std::size_t start = 0;;) {
        const auto sp = line.find(' ', start);
        words.push_back(line.substr(start, sp - start));
        if (sp == std::string_view::npos) break;
        start = sp + 1;
    }
    if (words.size() != 4 || words[0] != "TAG" || words[2] != "READER") {
        throw std::invalid_argument("expected 'TAG <hex> READER <id>'");
    }
    if (!is_lower_hex(words[1])) throw std::invalid_argument("tag '" + std::string(words[1]) + "' is not lowercase hex");
    if (words[3].empty()) throw std::invalid_argument("empty reader id");
    return {std::string(words[1]), std::string(words[3]), {}};
}

std::string_view to_string(IngestOutcome o) {
    switch (o) {
    case IngestOutcome::Requested: return "requested";
    case IngestOutcome::Released: return "released";
    case IngestOutcome::Cancelled: return "cancelled";
    case IngestOutcome::Debounced: return "debounced";
    case IngestOutcome::UnknownTag: return "unknown-tag";
    case IngestOutcome::UnknownReader: return "unknown-reader";
    case IngestOutcome::Rejected: return "rejected";
    }
    return "?";
}

std::string IngestResult::reply_line() const {
    std::string out = acted() ? "OK " : "DROP ";
    out += to_string(outcome);
    if (record) {
        out += " request=" + std::to_string(record->request_id) + " floor=" + std::to_string(record->floor_id) +
               " state=" + std::string(floor::to_string(record->state)) +
               " position=" + std::to_string(record->queue_position);
    }
    if (!detail.empty()) out += " " + detail;
    return out;
}

BadgeGateway::BadgeGateway(std::shared_ptr<server::ConferenceService> conference, BadgeDirectory directory,
                           std::chrono::milliseconds debounce)
    : conference_(std::move(conference)), debounce_(debounce),
      directory_(std::make_shared<const BadgeDirectory>(std::move(directory))) {}

void BadgeGateway::replace_directory(BadgeDirectory directory) {
    auto next = std::make_shared<const BadgeDirectory>(std::move(directory));
    std::lock_guard lock(mu_);
    directory_ = std::move(next);
}

std::shared_ptr<const BadgeDirectory> BadgeGateway::directory() const {
    std::lock_guard lock(mu_);
    return directory_;
}

IngestResult BadgeGateway::ingest(const BadgeEvent& event) {
    const auto dir = directory();
    const auto holder = dir->tags.find(event.tag);
    if (holder == dir->tags.end()) {
        spdlog::warn("badge {} at {} is not in the directory", event.tag, event.reader_id);
        return {IngestOutcome::UnknownTag, std::nullopt, "tag=" + event.tag};
    }
    const auto reader = dir->readers.find(event.reader_id);
    if (reader == dir->readers.end()) {
        spdlog::warn("badge read at unknown reader {}", event.reader_id);
        return {IngestOutcome::UnknownReader, std::nullopt, "reader=" + event.reader_id};
    }

    const auto ts = event.ts == floor::Clock::time_point{} ? now_() : event.ts;
    {
        // A tag held at the reader keeps firing; reads closer together than
        // the window are one gesture.
        std::lock_guard lock(mu_);
        auto [it, fresh] = last_read_.try_emplace({event.tag, event.reader_id}, ts);
        if (!fresh) {
            const bool bounce = ts - it->second < debounce_;
            it->second = ts;
            if (bounce) return {IngestOutcome::Debounced, std::nullopt, "tag=" + event.tag};
        }
    }

    const auto floor_id = reader->second;
    const auto& who = holder->second;
    try {
        return conference_->execute("badge:" + event.reader_id, [&](floor::Conference& c) -> IngestResult {
            if (auto live = c.live_request(who.user_id, floor_id)) {
                if (live->state == RequestState::Granted) {
                    return {IngestOutcome::Released, c.release_floor(floor_id, live->request_id), {}};
                }
                return {IngestOutcome::Cancelled, c.cancel_request(floor_id, live->request_id), {}};
            }
            return {IngestOutcome::Requested,
                    c.submit_request(floor_id, who.user_id, who.display_name, floor::Origin::Rfid), {}};
        });
    } catch (const floor::FloorError& e) {
        return {IngestOutcome::Rejected, std::nullopt, std::string(floor::to_string(e.code())) + ": " + e.what()};
    }
}

void serve_stream(BadgeGateway& gateway, std::istream& in, std::ostream* out) {
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::string reply;
        try {
            reply = gateway.ingest(parse_feed_line(line)).reply_line();
        } catch (const std::invalid_argument& e) {
            reply = std::string("ERR ") + e.what();
        }
        if (out) *out << reply << '\n' << std::flush;
    }
}

BadgeFeedServer::BadgeFeedServer(BadgeGateway& gateway, std::string host, std::uint16_t port)
    : gateway_(gateway), host_(std::move(host)), port_(port) {}

BadgeFeedServer::~BadgeFeedServer() { stop(); }

void BadgeFeedServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) throw std::invalid_argument("bad listen address " + host_);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const int err = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::system_error(err, std::generic_category(), "bind badge port " + std::to_string(port_));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    spdlog::info("badge feed listening on {}:{}", host_, port_);
}

void BadgeFeedServer::stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;
    std::list<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
}

void BadgeFeedServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        std::lock_guard lock(mu_);
        open_fds_.insert(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void BadgeFeedServer::serve(int fd) {
    std::string pending;
    char buf[1024];
    for (;;) {
        const auto n = ::recv(fd, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        pending.append(buf, static_cast<std::size_t>(n));
        for (auto nl = pending.find('\n'); nl != std::string::npos; nl = pending.find('\n')) {
            const auto line = pending.substr(0, nl);
            pending.erase(0, nl + 1);
            if (trim(line).empty()) continue;
            std::string reply;
            try {
                reply = gateway_.ingest(parse_feed_line(line)).reply_line();
            } catch (const std::invalid_argument& e) {
                reply = std::string("ERR ") + e.what();
            }
            reply += '\n';
            ::send(fd, reply.data(), reply.size(), MSG_NOSIGNAL);
        }
        // Nobody sends badge lines this long.
        if (pending.size() > 4096) break;
    }
    std::lock_guard lock(mu_);
    open_fds_.erase(fd);
    ::close(fd);
}

}  // namespace umpire::badge
