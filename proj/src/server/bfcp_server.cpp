#include "umpire/server/bfcp_server.hpp"

#include "umpire/bfcp/floor_info.hpp"
#include "umpire/wire/codec.hpp"

#include <spdlog/spdlog.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <deque>
#include <system_error>

namespace umpire::server {

using Clock = std::chrono::steady_clock;

class TcpConnection : public SessionChannel, public std::enable_shared_from_this<TcpConnection> {
public:
    TcpConnection(int fd, std::string peer, ConferenceRegistry& registry, const BfcpServerOptions& options)
        : fd_(fd), peer_(std::move(peer)), registry_(registry), options_(options) {}

    ~TcpConnection() override {
        close();
        join();
        ::close(fd_);
    }

    void start() {
        writer_ = std::thread([this] { write_loop(); });
        reader_ = std::thread([this] { read_loop(); });
    }

    void join() {
        if (reader_.joinable()) reader_.join();
        if (writer_.joinable()) writer_.join();
    }

    [[nodiscard]] bool done() const { return done_; }

    bool send(const wire::BfcpMessage& msg) override {
        auto bytes = wire::encode(msg);
        {
            std::lock_guard lock(mu_);
            if (closed_ || draining_) return false;
            if (outbox_.size() >= options_.outbox_limit) {
                spdlog::warn("closing {}: outbox overflow", peer_);
                close_locked();
                return false;
            }
            outbox_.push_back(std::move(bytes));
        }
        cv_.notify_all();
        return true;
    }

    void close() override {
        std::lock_guard lock(mu_);
        close_locked();
    }

    [[nodiscard]] bool is_open() const override {
        std::lock_guard lock(mu_);
        return !closed_ && !draining_;
    }

    [[nodiscard]] std::string peer() const override { return peer_; }

private:
    void close_locked() {
        if (!closed_) {
            closed_ = true;
            ::shutdown(fd_, SHUT_RDWR);
        }
        cv_.notify_all();
    }

    // Stops accepting new messages and closes once the outbox is flushed.
    void drain_and_close() {
        {
            std::lock_guard lock(mu_);
            draining_ = true;
        }
        cv_.notify_all();
    }

    void write_loop() {
        for (;;) {
            std::vector<std::uint8_t> bytes;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return closed_ || draining_ || !outbox_.empty(); });
                if (closed_) return;
                if (outbox_.empty()) {
                    close_locked();
                    return;
                }
                bytes = std::move(outbox_.front());
                outbox_.pop_front();
            }
            std::size_t off = 0;
            while (off < bytes.size()) {
                const auto n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
                if (n < 0 && errno == EINTR) continue;
                if (n <= 0) {
                    close();
                    return;
                }
                off += static_cast<std::size_t>(n);
            }
        }
    }

    void read_loop() {
        wire::FrameReader frames;
        auto last_rx = Clock::now();
        std::optional<Clock::time_point> hello_sent;
        bool draining = false;
        std::uint8_t buf[4096];

        while (is_open()) {
            pollfd p{fd_, POLLIN, 0};
            const int ready = ::poll(&p, 1, 100);
            const auto now = Clock::now();
            if (ready < 0 && errno != EINTR) break;

            if (ready > 0) {
                const auto n = ::recv(fd_, buf, sizeof buf, 0);
                if (n < 0 && errno == EINTR) continue;
                if (n <= 0) break;
                last_rx = now;
                hello_sent.reset();
                frames.feed({buf, static_cast<std::size_t>(n)});
                while (auto result = frames.next()) dispatch(*result);
                if (frames.failed()) {
                    drain_and_close();
                    draining = true;
                    break;
                }
                continue;
            }

            if (hello_sent && now - *hello_sent > options_.hello_timeout) {
                spdlog::info("closing {}: no answer to Hello", peer_);
                break;
            }
            if (!hello_sent && now - last_rx > options_.idle_timeout) {
                if (!service_) {
                    spdlog::info("closing idle unbound connection {}", peer_);
                    break;
                }
                wire::BfcpMessage hello;
                hello.header = {wire::Primitive::Hello, service_->id(), next_server_transaction(), user_};
                send(hello);
                hello_sent = now;
            }
        }

        if (!draining) close();
        if (service_) service_->disconnect(id());
        done_ = true;
    }

    void dispatch(const wire::DecodeResult& result) {
        if (const auto* err = std::get_if<wire::DecodeError>(&result)) {
            spdlog::debug("{}: undecodable input: {}", peer_, err->detail);
            wire::CommonHeader h{wire::Primitive::Error, err->conference_id, err->transaction_id, err->user_id};
            if (!err->header_valid) h = {wire::Primitive::Error, 0, 0, 0};
            auto code = wire::ErrorCode::IncorrectMessage;
            std::vector<std::uint8_t> details;
            if (err->header_valid && err->code == wire::DecodeErrc::UnknownPrimitive) {
                code = wire::ErrorCode::UnknownPrimitive;
            } else if (err->header_valid && err->code == wire::DecodeErrc::UnknownMandatoryAttribute) {
                code = wire::ErrorCode::UnknownMandatoryAttribute;
                details.push_back(err->attribute_type);
            }
            send(bfcp::make_error(h, code, err->detail, std::move(details)));
            return;
        }

        const auto& msg = std::get<wire::BfcpMessage>(result);
        try {
            wire::check_legal(msg);
        } catch (const wire::InvalidMessage& e) {
            send(bfcp::make_error(msg.header, wire::ErrorCode::IncorrectMessage, e.what()));
            return;
        }

        if (!service_) {
            auto svc = registry_.find(msg.header.conference_id);
            if (!svc) {
                send(bfcp::make_error(msg.header, wire::ErrorCode::ConferenceDoesNotExist,
                                      "unknown conference " + std::to_string(msg.header.conference_id)));
                return;
            }
            service_ = std::move(svc);
            user_ = msg.header.user_id;
        }
        service_->deliver(shared_from_this(), msg);
    }

    int fd_;
    std::string peer_;
    ConferenceRegistry& registry_;
    BfcpServerOptions options_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::vector<std::uint8_t>> outbox_;
    bool closed_ = false;
    bool draining_ = false;
    std::atomic<bool> done_{false};

    // Reader thread only.
    std::shared_ptr<ConferenceService> service_;
    std::uint16_t user_ = 0;

    std::thread reader_;
    std::thread writer_;
};

BfcpServer::BfcpServer(ConferenceRegistry& registry, BfcpServerOptions options)
    : registry_(registry), options_(std::move(options)) {}

BfcpServer::~BfcpServer() { stop(); }

void BfcpServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options_.port);
    if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
        throw std::invalid_argument("bad listen address " + options_.host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
        const int err = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::system_error(err, std::generic_category(), "bind BFCP port " + std::to_string(options_.port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);

    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    spdlog::info("BFCP listening on {}:{}", options_.host, bound_port_);
}

void BfcpServer::stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;

    std::list<std::shared_ptr<TcpConnection>> conns;
    {
        std::lock_guard lock(mu_);
        conns.swap(connections_);
    }
    for (auto& c : conns) c->close();
    for (auto& c : conns) c->join();
}

std::size_t BfcpServer::connection_count() {
    reap();
    std::lock_guard lock(mu_);
    return connections_.size();
}

void BfcpServer::reap() {
    std::list<std::shared_ptr<TcpConnection>> finished;
    {
        std::lock_guard lock(mu_);
        for (auto it = connections_.begin(); it != connections_.end();) {
            if ((*it)->done()) finished.splice(finished.end(), connections_, it++);
            else ++it;
        }
    }
    for (auto& c : finished) c->join();
}

void BfcpServer::accept_loop() {
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) {
            reap();
            continue;
        }
        sockaddr_in peer{};
        socklen_t len = sizeof peer;
        const int fd = ::accept(listen_fd_, reinterpret_cast<sockaddr*>(&peer), &len);
        if (fd < 0) continue;
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

        char ip[INET_ADDRSTRLEN] = {};
        ::inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof ip);
        auto conn = std::make_shared<TcpConnection>(fd, fmt::format("{}:{}", ip, ntohs(peer.sin_port)), registry_,
                                                    options_);
        {
            std::lock_guard lock(mu_);
            connections_.push_back(conn);
        }
        conn->start();
        reap();
    }
}

}  // namespace umpire::server
