#include "umpire/gateway/http_gateway.hpp"

#include "umpire/gateway/json.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

namespace umpire::gateway {

using server::ConferenceService;
using floor::FloorErrc;
using floor::FloorError;
using floor::RequestState;

std::optional<HttpResult> IdempotencyCache::find(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = results_.find(key);
    if (it == results_.end()) return std::nullopt;
    return it->second;
}

void IdempotencyCache::put(const std::string& key, HttpResult result) {
    std::lock_guard lock(mu_);
    if (capacity_ == 0) return;
    if (results_.insert_or_assign(key, std::move(result)).second) order_.push_back(key);
    while (order_.size() > capacity_) {
        results_.erase(order_.front());
        order_.pop_front();
    }
}

std::size_t IdempotencyCache::size() const {
    std::lock_guard lock(mu_);
    return results_.size();
}

namespace {

HttpResult json_result(int status, const Json& body) { return {status, body.dump()}; }

HttpResult error_result(int status, std::string_view code, const std::string& message) {
    return json_result(status, {{"error", code}, {"message", message}});
}

int status_for(FloorErrc e) {
    switch (e) {
    case FloorErrc::UnknownFloor:
    case FloorErrc::UnknownRequest: return 404;
    default: return 409;
    }
}

HttpResult floor_error(const FloorError& e) { return error_result(status_for(e.code()), to_string(e.code()), e.what()); }

std::optional<std::uint32_t> parse_id(const std::string& s) {
    std::uint32_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string bearer(const httplib::Request& req) {
    const auto h = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (h.size() > prefix.size() && h.compare(0, prefix.size(), prefix) == 0) return h.substr(prefix.size());
    // EventSource in browsers cannot set headers.
    if (req.has_param("token")) return req.get_param_value("token");
    return {};
}

void reply(httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace

struct HttpGateway::Impl {
    std::mutex caches_mu;
    std::map<std::uint32_t, std::unique_ptr<IdempotencyCache>> caches;
    // Serializes concurrent retries of the same command id.
    std::mutex command_mu;

    IdempotencyCache& cache_for(std::uint32_t conf, std::size_t capacity) {
        std::lock_guard lock(caches_mu);
        auto& c = caches[conf];
        if (!c) c = std::make_unique<IdempotencyCache>(capacity);
        return *c;
    }
};

HttpGateway::HttpGateway(server::ConferenceRegistry& registry, HttpGatewayOptions options)
    : registry_(registry), options_(std::move(options)), server_(std::make_unique<httplib::Server>()),
      impl_(std::make_unique<Impl>()) {}

HttpGateway::~HttpGateway() { stop(); }

namespace {

struct Context {
    std::shared_ptr<ConferenceService> conf;
    Json body;
};

HttpResult chair_command(ConferenceService& svc, const Json& cmd) {
    const auto action = get_or<std::string>(cmd, "action", "");
    const auto request = cmd.contains("request_id") ? std::optional(cmd.at("request_id").get<floor::RequestId>())
                                                    : std::nullopt;
    auto floor_id = cmd.contains("floor_id") ? std::optional(cmd.at("floor_id").get<floor::FloorId>()) : std::nullopt;

    const bool per_request = action == "accept" || action == "deny" || action == "revoke" || action == "set_priority";
    const bool per_floor = action == "revoke_all" || action == "set_policy";
    if (!per_request && !per_floor) return error_result(400, "BadCommand", "unknown action '" + action + "'");
    if (per_request && !request) return error_result(400, "BadCommand", action + " needs request_id");
    std::optional<floor::Priority> priority;
    if (action == "set_priority") {
        priority = floor::parse_priority(get_or<std::string>(cmd, "priority", ""));
        if (!priority) return error_result(400, "BadCommand", "set_priority needs priority normal|business");
    }
    if (action == "set_policy" && !cmd.contains("policy")) return error_result(400, "BadCommand", "set_policy needs policy");
    if (per_floor && !floor_id) {
        // Single-floor conferences may omit the floor.
        if (svc.config().floors.size() != 1) return error_result(400, "BadCommand", action + " needs floor_id");
        floor_id = svc.config().floors.front().id;
    }

    return svc.execute("chair-http", [&](floor::Conference& c) -> HttpResult {
        try {
            Json records = Json::array();
            Json out;
            if (per_request) {
                auto rec = c.find(*request);
                if (!rec) return error_result(404, "UnknownRequest", "no request " + std::to_string(*request));
                if (floor_id && *floor_id != rec->floor_id) {
                    return error_result(404, "UnknownRequest",
                                        "request " + std::to_string(*request) + " is not on floor " +
                                            std::to_string(*floor_id));
                }
                floor::FloorRequestRecord r;
                if (action == "accept") r = c.chair_accept(rec->floor_id, *request);
                else if (action == "deny") r = c.chair_deny(rec->floor_id, *request);
                else if (action == "revoke") r = c.chair_revoke(rec->floor_id, *request);
                else r = c.chair_set_priority(rec->floor_id, *request, *priority);
                // Promotion may have moved the record further; report where it ended up.
                records.push_back(to_json(*c.find(*request)));
                out["floor_id"] = r.floor_id;
            } else if (action == "revoke_all") {
                for (const auto& r : c.chair_revoke_all(*floor_id)) records.push_back(to_json(r));
                out["floor_id"] = *floor_id;
            } else {
                const auto& p = cmd.at("policy");
                floor::FloorPolicy policy = c.policy(*floor_id);
                policy.max_granted = get_or<std::uint16_t>(p, "max_granted", policy.max_granted);
                policy.auto_grant = get_or<bool>(p, "auto_grant", policy.auto_grant);
                c.set_policy(*floor_id, policy);
                out["floor_id"] = *floor_id;
                out["policy"] = to_json(c.policy(*floor_id));
            }
            out["action"] = action;
            out["records"] = records;
            out["seq"] = c.last_event_seq();
            return json_result(200, out);
        } catch (const FloorError& e) {
            return floor_error(e);
        }
    });
}

HttpResult floor_action(ConferenceService& svc, const server::WebParticipant& who, const Json& body) {
    const auto kind = get_or<std::string>(body, "kind", "");
    if (kind != "request" && kind != "release") return error_result(400, "BadCommand", "kind must be request|release");
    floor::FloorId floor_id = 0;
    if (body.contains("floor_id")) floor_id = body.at("floor_id").get<floor::FloorId>();
    else if (svc.config().floors.size() == 1) floor_id = svc.config().floors.front().id;
    else return error_result(400, "BadCommand", "floor_id is required");

    return svc.execute("web:" + std::to_string(who.user_id), [&](floor::Conference& c) -> HttpResult {
        try {
            floor::FloorRequestRecord r;
            if (kind == "request") {
                r = c.submit_request(floor_id, who.user_id, who.display_name, floor::Origin::Web);
            } else {
                if (!c.has_floor(floor_id)) return error_result(404, "UnknownFloor", "no floor " + std::to_string(floor_id));
                auto live = c.live_request(who.user_id, floor_id);
                if (!live) return error_result(404, "NoLiveRequest", "no live request on floor " + std::to_string(floor_id));
                r = live->state == RequestState::Granted ? c.release_floor(floor_id, live->request_id)
                                                         : c.cancel_request(floor_id, live->request_id);
            }
            auto j = to_json(*c.find(r.request_id));
            j["seq"] = c.last_event_seq();
            return json_result(200, j);
        } catch (const FloorError& e) {
            return floor_error(e);
        }
    });
}

}  // namespace

void HttpGateway::start() {
    auto& srv = *server_;
    const int workers = options_.worker_threads;
    srv.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };

    // Resolves the conference and parses the JSON body; replies itself and
    // returns nullopt when either fails.
    auto context = [this](const httplib::Request& req, httplib::Response& res, bool want_body) -> std::optional<Context> {
        const auto id = parse_id(req.matches[1]);
        auto conf = id ? registry_.find(*id) : nullptr;
        if (!conf) {
            reply(res, error_result(404, "UnknownConference", "no conference " + std::string(req.matches[1])));
            return std::nullopt;
        }
        Context ctx{std::move(conf), Json::object()};
        if (want_body && !req.body.empty()) {
            ctx.body = Json::parse(req.body, nullptr, false);
            if (ctx.body.is_discarded() || !ctx.body.is_object()) {
                reply(res, error_result(400, "BadJson", "body must be a JSON object"));
                return std::nullopt;
            }
        }
        return ctx;
    };

    // Runs fn once per command id; retries get the cached answer.
    auto idempotent = [this](const httplib::Request& req, const Context& ctx, auto&& fn) -> HttpResult {
        std::string key = req.get_header_value("Idempotency-Key");
        if (key.empty() && ctx.body.contains("command_id") && ctx.body.at("command_id").is_string()) {
            key = ctx.body.at("command_id").get<std::string>();
        }
        if (key.empty()) return fn();
        auto& cache = impl_->cache_for(ctx.conf->id(), options_.command_cache);
        std::lock_guard lock(impl_->command_mu);
        key = req.path + "\n" + key;
        if (auto hit = cache.find(key)) return *hit;
        auto result = fn();
        cache.put(key, result);
        return result;
    };

    srv.Get(R"(/api/conf/([^/]+)/floors/(\d+)/queue)", [context](const httplib::Request& req, httplib::Response& res) {
        auto ctx = context(req, res, false);
        if (!ctx) return;
        const auto fid = parse_id(req.matches[2]);
        try {
            if (!fid || *fid > 0xffff) throw FloorError(FloorErrc::UnknownFloor, "no floor " + std::string(req.matches[2]));
            const auto snap = ctx->conf->snapshot(static_cast<floor::FloorId>(*fid));
            res.set_header("X-Event-Seq", std::to_string(snap.last_event_seq));
            reply(res, json_result(200, entries_json(snap)));
        } catch (const FloorError& e) {
            reply(res, floor_error(e));
        }
    });

    srv.Post(R"(/api/conf/([^/]+)/chair/command)", [context, idempotent](const httplib::Request& req,
                                                                          httplib::Response& res) {
        auto ctx = context(req, res, true);
        if (!ctx) return;
        if (!ctx->conf->is_chair_token(bearer(req))) {
            reply(res, error_result(401, "Unauthorized", "chair token required"));
            return;
        }
        try {
            reply(res, idempotent(req, *ctx, [&] { return chair_command(*ctx->conf, ctx->body); }));
        } catch (const Json::exception& e) {
            reply(res, error_result(400, "BadCommand", e.what()));
        }
    });

    srv.Post(R"(/api/conf/([^/]+)/participants)", [context, idempotent](const httplib::Request& req,
                                                                         httplib::Response& res) {
        auto ctx = context(req, res, true);
        if (!ctx) return;
        const auto name = ctx->body.value("display_name", std::string{});
        if (name.empty()) {
            reply(res, error_result(400, "BadCommand", "display_name is required"));
            return;
        }
        reply(res, idempotent(req, *ctx, [&] {
                  const auto p = ctx->conf->join_web(name);
                  return json_result(200, {{"user_id", p.user_id}, {"display_name", p.display_name}, {"token", p.token}});
              }));
    });

    srv.Post(R"(/api/conf/([^/]+)/floor-action)", [context, idempotent](const httplib::Request& req,
                                                                         httplib::Response& res) {
        auto ctx = context(req, res, true);
        if (!ctx) return;
        const auto who = ctx->conf->web_participant(bearer(req));
        if (!who) {
            reply(res, error_result(401, "Unauthorized", "participant token required"));
            return;
        }
        try {
            reply(res, idempotent(req, *ctx, [&] { return floor_action(*ctx->conf, *who, ctx->body); }));
        } catch (const Json::exception& e) {
            reply(res, error_result(400, "BadCommand", e.what()));
        }
    });

    srv.Get(R"(/api/conf/([^/]+)/events)", [this, context](const httplib::Request& req, httplib::Response& res) {
        auto ctx = context(req, res, false);
        if (!ctx) return;
        const auto token = bearer(req);
        if (!ctx->conf->is_chair_token(token) && !ctx->conf->web_participant(token)) {
            reply(res, error_result(401, "Unauthorized", "chair or participant token required"));
            return;
        }
        std::optional<std::uint64_t> resume;
        auto last_id = req.get_header_value("Last-Event-ID");
        if (last_id.empty() && req.has_param("last_event_id")) last_id = req.get_param_value("last_event_id");
        if (!last_id.empty()) {
            if (auto v = parse_id(last_id)) resume = *v;
        }

        res.set_header("Cache-Control", "no-cache");
        res.set_header("X-Accel-Buffering", "no");
        auto conf = ctx->conf;
        auto last = std::make_shared<std::optional<std::uint64_t>>();
        auto last_write = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
        ++open_streams_;
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, conf, resume, last, last_write](std::size_t, httplib::DataSink& sink) {
                auto write = [&](const std::string& s) {
                    *last_write = std::chrono::steady_clock::now();
                    return sink.write(s.data(), s.size());
                };
                auto send_snapshot = [&] {
                    const auto v = conf->view();
                    *last = v.seq;
                    return write(sse_frame(v.seq, "snapshot", to_json(v)));
                };

                if (!*last) {
                    std::optional<std::vector<floor::FloorEvent>> replay;
                    if (resume && *resume <= conf->events().last_seq()) replay = conf->events().since(*resume);
                    if (!replay) return send_snapshot();
                    *last = *resume;
                    for (const auto& e : *replay) {
                        if (!write(sse_frame(e.seq, to_string(e.kind), to_json(e)))) return false;
                        *last = e.seq;
                    }
                    return true;
                }

                while (!stopping_) {
                    if (conf->events().closed()) return false;
                    if (conf->events().wait_beyond(**last, std::chrono::milliseconds(200))) break;
                    if (!sink.is_writable()) return false;
                    if (std::chrono::steady_clock::now() - *last_write >= options_.heartbeat) {
                        return write(": heartbeat\n\n");
                    }
                }
                if (stopping_) return false;
                auto events = conf->events().since(**last);
                // Evicted before we could send them: start over from a fresh snapshot.
                if (!events) return send_snapshot();
                for (const auto& e : *events) {
                    if (!write(sse_frame(e.seq, to_string(e.kind), to_json(e)))) return false;
                    *last = e.seq;
                }
                return true;
            },
            [this](bool) { --open_streams_; });
    });

    if (options_.ui_dir && !srv.set_mount_point("/", options_.ui_dir->string())) {
        throw std::invalid_argument("UI directory " + options_.ui_dir->string() + " does not exist");
    }

    srv.set_exception_handler([](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        spdlog::error("{} {} failed: {}", req.method, req.path, what);
        reply(res, error_result(500, "Internal", what));
    });

    if (options_.port == 0) {
        const int bound = srv.bind_to_any_port(options_.host);
        if (bound < 0) throw std::runtime_error("cannot bind HTTP on " + options_.host);
        port_ = static_cast<std::uint16_t>(bound);
    } else {
        if (!srv.bind_to_port(options_.host, options_.port)) {
            throw std::runtime_error("cannot bind HTTP port " + std::to_string(options_.port));
        }
        port_ = options_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    spdlog::info("HTTP listening on {}:{}", options_.host, port_);
}

void HttpGateway::stop() {
    if (!thread_.joinable()) return;
    stopping_ = true;
    server_->stop();
    thread_.join();
}

}  // namespace umpire::gateway
