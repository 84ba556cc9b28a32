#include "umpire/client/http_client.hpp"

#include <httplib.h>

#include <algorithm>

namespace umpire::client {

using floor::FloorRequestRecord;

namespace {

std::unique_ptr<httplib::Client> make_http(const HttpEndpoint& ep) {
    auto c = std::make_unique<httplib::Client>(ep.host, ep.port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    c->set_connection_timeout(secs.count(), usecs.count());
    c->set_read_timeout(secs.count(), usecs.count());
    c->set_write_timeout(secs.count(), usecs.count());
    return c;
}

httplib::Headers auth(const std::string& token) {
    if (token.empty()) return {};
    return {{"Authorization", "Bearer " + token}};
}

Json check(const httplib::Result& res, const std::string& what) {
    if (!res) throw ConnectionError(what + ": " + httplib::to_string(res.error()));
    auto body = Json::parse(res->body, nullptr, false);
    if (res->status / 100 != 2) {
        std::string code = "HTTP" + std::to_string(res->status);
        std::string message = res->body;
        if (body.is_object()) {
            code = body.value("error", code);
            message = body.value("message", message);
        }
        throw HttpError(res->status, code, what + ": " + std::to_string(res->status) + " " + code + ": " + message);
    }
    if (body.is_discarded()) throw ClientError(what + ": response is not JSON");
    return body;
}

}  // namespace

HttpApi::HttpApi(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)), http_(make_http(endpoint_)) {}

HttpApi::HttpApi(HttpApi&&) noexcept = default;
HttpApi& HttpApi::operator=(HttpApi&&) noexcept = default;
HttpApi::~HttpApi() = default;

std::string HttpApi::conf_path(const std::string& rest) const {
    return "/api/conf/" + std::to_string(endpoint_.conference_id) + rest;
}

Json HttpApi::get(const std::string& path, const std::string& token) {
    std::lock_guard lock(*mu_);
    return check(http_->Get(path, auth(token)), "GET " + path);
}

Json HttpApi::post(const std::string& path, const Json& body, const std::string& token) {
    std::lock_guard lock(*mu_);
    return check(http_->Post(path, auth(token), body.dump(), "application/json"), "POST " + path);
}

std::vector<FloorRequestRecord> HttpApi::queue(floor::FloorId floor) {
    const auto body = get(conf_path("/floors/" + std::to_string(floor) + "/queue"));
    std::vector<FloorRequestRecord> out;
    for (const auto& e : body) out.push_back(gateway::record_from_json(e));
    return out;
}

Json ChairClient::command(const Json& cmd) { return post(conf_path("/chair/command"), cmd, token_); }

FloorRequestRecord ChairClient::single(const Json& cmd) {
    const auto body = command(cmd);
    return gateway::record_from_json(body.at("records").at(0));
}

FloorRequestRecord ChairClient::accept(floor::RequestId request) {
    return single({{"action", "accept"}, {"request_id", request}});
}

FloorRequestRecord ChairClient::deny(floor::RequestId request) {
    return single({{"action", "deny"}, {"request_id", request}});
}

FloorRequestRecord ChairClient::revoke(floor::RequestId request) {
    return single({{"action", "revoke"}, {"request_id", request}});
}

FloorRequestRecord ChairClient::set_priority(floor::RequestId request, floor::Priority priority) {
    return single({{"action", "set_priority"}, {"request_id", request}, {"priority", floor::to_string(priority)}});
}

std::vector<FloorRequestRecord> ChairClient::revoke_all(floor::FloorId floor) {
    const auto body = command({{"action", "revoke_all"}, {"floor_id", floor}});
    std::vector<FloorRequestRecord> out;
    for (const auto& r : body.at("records")) out.push_back(gateway::record_from_json(r));
    return out;
}

floor::FloorPolicy ChairClient::set_policy(floor::FloorId floor, floor::FloorPolicy policy) {
    const auto body = command({{"action", "set_policy"}, {"floor_id", floor}, {"policy", gateway::to_json(policy)}});
    return gateway::policy_from_json(body.at("policy"));
}

void WebClient::join(const std::string& display_name) {
    const auto body = post(conf_path("/participants"), {{"display_name", display_name}});
    token_ = body.at("token").get<std::string>();
    user_id_ = body.at("user_id").get<floor::UserId>();
}

FloorRequestRecord WebClient::request(floor::FloorId floor) {
    return gateway::record_from_json(post(conf_path("/floor-action"), {{"kind", "request"}, {"floor_id", floor}}, token_));
}

FloorRequestRecord WebClient::release(floor::FloorId floor) {
    return gateway::record_from_json(post(conf_path("/floor-action"), {{"kind", "release"}, {"floor_id", floor}}, token_));
}

EventStream::EventStream(HttpEndpoint endpoint, std::string token, std::optional<std::uint64_t> last_event_id)
    : endpoint_(std::move(endpoint)), token_(std::move(token)), resume_(last_event_id) {}

EventStream::~EventStream() { stop(); }

void EventStream::start() {
    http_ = make_http(endpoint_);
    // The stream is idle between events; heartbeats arrive far apart.
    http_->set_read_timeout(3600, 0);
    thread_ = std::thread([this] {
        auto headers = auth(token_);
        if (resume_) headers.emplace("Last-Event-ID", std::to_string(*resume_));
        const auto path = "/api/conf/" + std::to_string(endpoint_.conference_id) + "/events";
        http_->Get(
            path, headers,
            [this](const httplib::Response& res) {
                status_ = res.status;
                return res.status == 200 && !stopping_;
            },
            [this](const char* data, std::size_t len) {
                feed({data, len});
                return !stopping_.load();
            });
        finished_ = true;
        cv_.notify_all();
    });
}

void EventStream::stop() {
    stopping_ = true;
    if (http_) http_->stop();
    if (thread_.joinable()) thread_.join();
}

void EventStream::feed(std::string_view chunk) {
    buffer_.append(chunk);
    for (;;) {
        const auto end = buffer_.find("\n\n");
        if (end == std::string::npos) break;
        const auto frame = buffer_.substr(0, end);
        buffer_.erase(0, end + 2);
        dispatch_frame(frame);
    }
}

void EventStream::dispatch_frame(const std::string& frame) {
    StreamEvent ev;
    std::string data;
    bool any = false;
    std::size_t pos = 0;
    while (pos <= frame.size()) {
        auto nl = frame.find('\n', pos);
        if (nl == std::string::npos) nl = frame.size();
        const std::string_view line(frame.data() + pos, nl - pos);
        pos = nl + 1;
        if (line.empty() || line.front() == ':') continue;
        const auto colon = line.find(':');
        const auto key = line.substr(0, colon);
        auto value = colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        any = true;
        if (key == "id") ev.id = std::stoull(std::string(value));
        else if (key == "event") ev.event = value;
        else if (key == "data") data += (data.empty() ? "" : "\n") + std::string(value);
    }
    if (!any) {
        ++heartbeats_;
        return;
    }
    ev.data = Json::parse(data, nullptr, false);
    std::function<void(const StreamEvent&)> handler;
    {
        std::lock_guard lock(mu_);
        events_.push_back(ev);
        handler = handler_;
    }
    cv_.notify_all();
    if (handler) handler(ev);
}

std::vector<StreamEvent> EventStream::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

std::uint64_t EventStream::last_id() const {
    std::lock_guard lock(mu_);
    std::uint64_t id = 0;
    for (const auto& e : events_) id = std::max(id, e.id);
    return id;
}

bool EventStream::wait_for(const std::function<bool(const std::vector<StreamEvent>&)>& pred,
                           std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return pred(events_) || finished_; }) && pred(events_);
}

bool EventStream::wait_for_id(std::uint64_t id, std::chrono::milliseconds timeout) const {
    return wait_for(
        [id](const auto& evs) { return std::any_of(evs.begin(), evs.end(), [id](const auto& e) { return e.id >= id; }); },
        timeout);
}

void EventStream::on_event(std::function<void(const StreamEvent&)> fn) {
    std::lock_guard lock(mu_);
    handler_ = std::move(fn);
}

void QueueMirror::apply_positions(FloorView& f, const Json& queue) {
    std::map<floor::RequestId, std::uint16_t> pos;
    for (const auto& q : queue) pos[q.at("request_id").get<floor::RequestId>()] = q.at("position").get<std::uint16_t>();
    for (auto& r : f.queued) r.queue_position = pos.contains(r.request_id) ? pos[r.request_id] : 0;
    std::stable_sort(f.queued.begin(), f.queued.end(),
                     [](const auto& a, const auto& b) { return a.queue_position < b.queue_position; });
}

bool QueueMirror::apply(const StreamEvent& e) {
    if (e.event == "snapshot") {
        floors_.clear();
        for (const auto& f : e.data.at("floors")) {
            auto& view = floors_[f.at("floor_id").get<floor::FloorId>()];
            view.policy = gateway::policy_from_json(f.at("policy"));
            for (const auto& j : f.at("entries")) {
                auto r = gateway::record_from_json(j);
                if (r.state == floor::RequestState::Granted) view.granted.push_back(r);
                else if (floor::is_queued(r.state)) view.queued.push_back(r);
                else view.finished.push_back(r);
            }
        }
        seq_ = e.id;
        return true;
    }
    if (e.id != seq_ + 1) return false;
    seq_ = e.id;
    auto& view = floors_[e.data.at("floor_id").get<floor::FloorId>()];
    if (e.data.contains("policy")) view.policy = gateway::policy_from_json(e.data.at("policy"));
    if (e.data.contains("request")) {
        const auto r = gateway::record_from_json(e.data.at("request"));
        auto drop = [&](auto& v) {
            std::erase_if(v, [&](const auto& x) { return x.request_id == r.request_id; });
        };
        drop(view.granted);
        drop(view.queued);
        drop(view.finished);
        if (r.state == floor::RequestState::Granted) view.granted.push_back(r);
        else if (floor::is_queued(r.state)) view.queued.push_back(r);
        else view.finished.push_back(r);
    }
    apply_positions(view, e.data.at("queue"));
    return true;
}

std::vector<FloorRequestRecord> QueueMirror::entries(floor::FloorId floor) const {
    auto it = floors_.find(floor);
    if (it == floors_.end()) return {};
    std::vector<FloorRequestRecord> out = it->second.granted;
    out.insert(out.end(), it->second.queued.begin(), it->second.queued.end());
    out.insert(out.end(), it->second.finished.begin(), it->second.finished.end());
    return out;
}

}  // namespace umpire::client
