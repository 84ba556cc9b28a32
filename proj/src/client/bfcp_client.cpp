#include "umpire/client/bfcp_client.hpp"

#include "umpire/wire/codec.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace umpire::client {

using wire::AttributeType;
using wire::BfcpMessage;
using wire::Primitive;

BfcpClient::BfcpClient(ClientOptions options) : options_(std::move(options)) {}

BfcpClient::~BfcpClient() { close(); }

void BfcpClient::connect() {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto port = std::to_string(options_.port);
    if (::getaddrinfo(options_.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
        throw ConnectionError("cannot resolve " + options_.host);
    }
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0) {
        const std::string why = std::strerror(errno);
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        throw ConnectionError("connect " + options_.host + ":" + port + ": " + why);
    }
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    connected_ = true;
    reader_ = std::thread([this] { read_loop(); });

    BfcpMessage hello;
    hello.header.primitive = Primitive::Hello;
    std::string info;
    if (!options_.display_name.empty()) info += "name=" + options_.display_name;
    if (!options_.chair_token.empty()) info += (info.empty() ? "" : ";") + std::string("chair-token=") + options_.chair_token;
    if (!info.empty()) hello.attributes.push_back(wire::attr::text(AttributeType::ParticipantProvidedInfo, info));
    throw_if_error(transact(hello, Primitive::HelloAck));
}

void BfcpClient::close() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    if (reader_.joinable()) reader_.join();
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    connected_ = false;
}

void BfcpClient::write(const BfcpMessage& msg) {
    const auto bytes = wire::encode(msg);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw ConnectionError("connection lost while sending");
        off += static_cast<std::size_t>(n);
    }
}

BfcpMessage BfcpClient::transact(BfcpMessage msg, Primitive reply) {
    if (!connected_) throw ConnectionError("not connected");
    std::future<BfcpMessage> future;
    {
        std::lock_guard lock(write_mu_);
        msg.header.conference_id = options_.conference_id;
        msg.header.user_id = options_.user_id;
        msg.header.transaction_id = next_tx_;
        next_tx_ = static_cast<std::uint16_t>(next_tx_ + 2);
        future = transactions_.expect(msg.header.transaction_id, reply);
        try {
            write(msg);
        } catch (...) {
            transactions_.cancel(msg.header.transaction_id);
            throw;
        }
    }
    if (future.wait_for(options_.timeout) != std::future_status::ready) {
        transactions_.cancel(msg.header.transaction_id);
        throw TimeoutError("no " + std::string(wire::to_string(reply)) + " within " +
                           std::to_string(options_.timeout.count()) + " ms");
    }
    return future.get();
}

void BfcpClient::throw_if_error(const BfcpMessage& reply) {
    if (reply.header.primitive != Primitive::Error) return;
    int code = 0;
    std::string info;
    if (const auto* a = reply.find(AttributeType::ErrorCode)) code = std::get<wire::ErrorCodeValue>(a->value).code;
    if (const auto* a = reply.find(AttributeType::ErrorInfo)) info = std::get<std::string>(a->value);
    std::string name = info.substr(0, info.find(':'));
    if (name.find(' ') != std::string::npos) name.clear();
    throw ServerError(code, name, "server error " + std::to_string(code) + (info.empty() ? "" : ": " + info));
}

namespace {

bfcp::RequestInfo info_of(const BfcpMessage& reply) {
    auto info = bfcp::first_request_information(reply);
    if (!info) throw ClientError("reply carries no FLOOR-REQUEST-INFORMATION");
    return *info;
}

}  // namespace

bfcp::RequestInfo BfcpClient::request_floor(floor::FloorId floor) {
    BfcpMessage m;
    m.header.primitive = Primitive::FloorRequest;
    m.attributes.push_back(wire::attr::floor_id(floor));
    const auto reply = transact(m, Primitive::FloorRequestStatus);
    throw_if_error(reply);
    return info_of(reply);
}

bfcp::RequestInfo BfcpClient::release_floor(floor::RequestId request) {
    BfcpMessage m;
    m.header.primitive = Primitive::FloorRelease;
    m.attributes.push_back(wire::attr::floor_request_id(request));
    const auto reply = transact(m, Primitive::FloorRequestStatus);
    throw_if_error(reply);
    return info_of(reply);
}

bfcp::RequestInfo BfcpClient::query_request(floor::RequestId request) {
    BfcpMessage m;
    m.header.primitive = Primitive::FloorRequestQuery;
    m.attributes.push_back(wire::attr::floor_request_id(request));
    const auto reply = transact(m, Primitive::FloorRequestStatus);
    throw_if_error(reply);
    return info_of(reply);
}

std::vector<bfcp::RequestInfo> BfcpClient::query_floor(floor::FloorId floor) {
    BfcpMessage m;
    m.header.primitive = Primitive::FloorQuery;
    m.attributes.push_back(wire::attr::floor_id(floor));
    const auto reply = transact(m, Primitive::FloorStatus);
    throw_if_error(reply);
    std::vector<bfcp::RequestInfo> out;
    for (const auto* a : reply.find_all(AttributeType::FloorRequestInformation)) {
        if (auto info = bfcp::parse_request_information(*a)) out.push_back(*info);
    }
    return out;
}

void BfcpClient::chair_action(floor::RequestId request, floor::RequestState target) {
    BfcpMessage m;
    m.header.primitive = Primitive::ChairAction;
    m.attributes.push_back(wire::attr::grouped(
        AttributeType::FloorRequestInformation, request,
        {wire::attr::grouped(AttributeType::OverallRequestStatus, request,
                             {wire::attr::request_status(bfcp::to_wire(target), 0)})}));
    throw_if_error(transact(m, Primitive::ChairActionAck));
}

bfcp::RequestInfo BfcpClient::await_status(floor::RequestId request, floor::RequestState target,
                                           std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    std::optional<bfcp::RequestInfo> found;
    const bool ok = cv_.wait_for(lock, timeout, [&] {
        for (const auto& m : notifications_) {
            if (m.header.primitive != Primitive::FloorRequestStatus) continue;
            auto info = bfcp::first_request_information(m);
            if (info && info->request_id == request && info->state == target) {
                found = info;
                return true;
            }
        }
        return !connected_.load();
    });
    if (!ok || !found) {
        throw TimeoutError("request " + std::to_string(request) + " did not reach " +
                           std::string(floor::to_string(target)));
    }
    return *found;
}

std::vector<BfcpMessage> BfcpClient::notifications() const {
    std::lock_guard lock(mu_);
    return notifications_;
}

void BfcpClient::on_notification(std::function<void(const BfcpMessage&)> fn) {
    std::lock_guard lock(mu_);
    handler_ = std::move(fn);
}

void BfcpClient::read_loop() {
    wire::FrameReader frames;
    std::uint8_t buf[4096];
    for (;;) {
        const auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        frames.feed({buf, static_cast<std::size_t>(n)});
        while (auto result = frames.next()) {
            if (!std::holds_alternative<BfcpMessage>(*result)) continue;
            const auto& msg = std::get<BfcpMessage>(*result);
            if (transactions_.complete(msg)) continue;
            if (msg.header.primitive == Primitive::Hello) {
                BfcpMessage ack;
                ack.header = msg.header;
                ack.header.primitive = Primitive::HelloAck;
                std::lock_guard lock(write_mu_);
                try {
                    write(ack);
                } catch (const ConnectionError&) {
                }
                continue;
            }
            std::function<void(const BfcpMessage&)> handler;
            {
                std::lock_guard lock(mu_);
                notifications_.push_back(msg);
                handler = handler_;
            }
            cv_.notify_all();
            if (handler) handler(msg);
        }
        if (frames.failed()) break;
    }
    connected_ = false;
    transactions_.fail_all(std::make_exception_ptr(ConnectionError("connection closed")));
    cv_.notify_all();
}

}  // namespace umpire::client
