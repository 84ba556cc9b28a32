#include "umpire/client/scenario.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace umpire::client {

using floor::RequestState;

namespace {

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

template <typename T>
std::optional<T> number(const std::string& s) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string describe(const floor::FloorRequestRecord& r) {
    std::string s = r.display_name + " " + std::string(floor::to_string(r.state));
    if (r.queue_position) s += " pos " + std::to_string(r.queue_position);
    return s;
}

std::string describe(const Expectation& e) {
    std::string s = e.actor + " " + std::string(floor::to_string(e.state));
    if (e.position) s += " pos " + std::to_string(*e.position);
    return s;
}

std::string describe(const std::vector<floor::FloorRequestRecord>& queue) {
    if (queue.empty()) return "(empty)";
    std::string s;
    for (const auto& r : queue) s += (s.empty() ? "" : ", ") + describe(r);
    return s;
}

class LineParser {
public:
    LineParser(std::size_t line, std::vector<std::string> words) : line_(line), words_(std::move(words)) {}

    [[noreturn]] void fail(const std::string& why) const { throw ScenarioParseError(line_, why); }

    [[nodiscard]] bool done() const { return pos_ >= words_.size(); }
    [[nodiscard]] const std::string* peek() const { return done() ? nullptr : &words_[pos_]; }

    std::string next(const char* what) {
        if (done()) fail(std::string("missing ") + what);
        return words_[pos_++];
    }
    void keyword(const char* kw) {
        const auto w = next(kw);
        if (w != kw) fail(std::string("expected '") + kw + "', got '" + w + "'");
    }
    bool accept(const char* kw) {
        if (!done() && words_[pos_] == kw) {
            ++pos_;
            return true;
        }
        return false;
    }
    template <typename T>
    T num(const char* what) {
        const auto w = next(what);
        auto v = number<T>(w);
        if (!v) fail(std::string("bad ") + what + " '" + w + "'");
        return *v;
    }
    RequestState state() {
        const auto w = next("state");
        auto s = floor::parse_state(w);
        if (!s) fail("unknown state '" + w + "'");
        return *s;
    }
    void end() const {
        if (!done()) fail("unexpected '" + words_[pos_] + "'");
    }

private:
    std::size_t line_;
    std::vector<std::string> words_;
    std::size_t pos_ = 0;
};

}  // namespace

Scenario parse_scenario(std::string_view text, std::string name) {
    Scenario sc{std::move(name), {}};
    std::map<std::string, ActorKind> declared;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        auto words = split_words(raw);
        if (words.empty()) continue;

        ScenarioStep step;
        step.line = lineno;
        step.text = raw.substr(raw.find_first_not_of(" \t"));
        while (!step.text.empty() && std::isspace(static_cast<unsigned char>(step.text.back()))) step.text.pop_back();
        step.words = words;
        LineParser p(lineno, words);

        auto known = [&](const std::string& actor) {
            if (!declared.contains(actor)) p.fail("actor '" + actor + "' is not declared before this line");
        };
        auto expectations = [&](const std::string& actor) {
            if (!p.accept("expect")) return;
            Expectation e{actor, p.state(), std::nullopt};
            if (p.accept("pos")) e.position = p.num<std::uint16_t>("position");
            step.expect.push_back(e);
        };
        auto floor_clause = [&] {
            if (p.accept("floor")) step.floor = p.num<floor::FloorId>("floor id");
        };
        auto declare = [&](const std::string& actor, ActorKind kind) {
            if (actor == "chair") p.fail("'chair' is reserved");
            if (!declared.emplace(actor, kind).second) p.fail("actor '" + actor + "' declared twice");
        };
        auto of_kind = [&](const std::string& actor, ActorKind kind, const char* what) {
            known(actor);
            if (declared.at(actor) != kind) p.fail("'" + actor + "' is not a " + what + " actor");
        };

        const auto head = p.next("command");
        if (head == "participant" || head == "web") {
            const auto kind = head == "web" ? ActorKind::Web : ActorKind::Participant;
            const auto actor = p.next("actor name");
            const auto verb = p.next("action");
            if (verb == "connect" && kind == ActorKind::Participant) {
                p.keyword("user");
                if (p.num<floor::UserId>("user id") == 0) p.fail("user id 0 is reserved");
                declare(actor, kind);
            } else if (verb == "join" && kind == ActorKind::Web) {
                declare(actor, kind);
            } else if (verb == "request" || verb == "release") {
                of_kind(actor, kind, head.c_str());
                p.keyword("floor");
                step.floor = p.num<floor::FloorId>("floor id");
                expectations(actor);
            } else if (verb == "await" && kind == ActorKind::Participant) {
                of_kind(actor, kind, head.c_str());
                p.state();
                if (p.accept("within")) p.num<unsigned>("milliseconds");
            } else {
                p.fail("unknown " + head + " action '" + verb + "'");
            }
        } else if (head == "badge") {
            const auto actor = p.next("actor name");
            const auto verb = p.next("action");
            if (verb == "tag") {
                p.next("tag");
                p.keyword("reader");
                p.next("reader id");
                declare(actor, ActorKind::Badge);
            } else if (verb == "read") {
                of_kind(actor, ActorKind::Badge, "badge");
                expectations(actor);
            } else {
                p.fail("unknown badge action '" + verb + "'");
            }
        } else if (head == "chair") {
            const auto verb = p.next("chair action");
            if (verb == "accept" || verb == "deny" || verb == "revoke") {
                const auto actor = p.next("actor name");
                known(actor);
                floor_clause();
                expectations(actor);
            } else if (verb == "priority") {
                const auto actor = p.next("actor name");
                known(actor);
                const auto prio = p.next("priority");
                if (!floor::parse_priority(prio)) p.fail("unknown priority '" + prio + "'");
                floor_clause();
            } else if (verb == "revoke-all") {
                p.keyword("floor");
                step.floor = p.num<floor::FloorId>("floor id");
            } else if (verb == "policy") {
                p.keyword("floor");
                step.floor = p.num<floor::FloorId>("floor id");
                p.keyword("max");
                if (p.num<std::uint16_t>("max granted") == 0) p.fail("max must be at least 1");
                if (p.accept("auto")) {
                    const auto v = p.next("on|off");
                    if (v != "on" && v != "off") p.fail("auto takes on|off");
                }
            } else {
                p.fail("unknown chair action '" + verb + "'");
            }
        } else if (head == "expect" || head == "expect-exact") {
            step.exact = head == "expect-exact";
            p.keyword("floor");
            step.floor = p.num<floor::FloorId>("floor id");
            if (step.exact && p.accept("empty")) {
                p.end();
                sc.steps.push_back(std::move(step));
                continue;
            }
            // Entries are comma separated; commas may stick to words.
            std::string rest;
            for (auto w = p.peek(); w; w = p.peek()) rest += p.next("entry") + " ";
            std::istringstream entries(rest);
            for (std::string entry; std::getline(entries, entry, ',');) {
                LineParser e(lineno, split_words(entry));
                Expectation x;
                x.actor = e.next("actor name");
                known(x.actor);
                x.state = e.state();
                if (e.accept("pos")) x.position = e.num<std::uint16_t>("position");
                e.end();
                step.expect.push_back(x);
            }
            if (step.expect.empty()) p.fail("expect needs at least one entry");
        } else {
            p.fail("unknown command '" + head + "'");
        }
        p.end();
        sc.steps.push_back(std::move(step));
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.stem().string());
}

const StepResult* ScenarioReport::failure() const {
    for (const auto& s : steps) {
        if (!s.ok) return &s;
    }
    return nullptr;
}

std::string ScenarioReport::text() const {
    std::string out;
    for (const auto& s : steps) {
        out += (s.ok ? "  ok    " : "  FAIL  ") + std::string("line ") + std::to_string(s.line) + ": " + s.text + "\n";
        if (!s.ok) out += s.diff + "\n";
    }
    out += (passed ? "PASS " : "FAIL ") + name + " (" + std::to_string(steps.size()) + " steps, " +
           std::to_string(elapsed.count()) + " ms)\n";
    return out;
}

ScenarioRunner::ScenarioRunner(ScenarioTarget target)
    : target_(std::move(target)),
      chair_(std::make_unique<ChairClient>(
          HttpEndpoint{target_.host, target_.http_port, target_.conference_id, target_.timeout}, target_.chair_token)) {}

ScenarioRunner::~ScenarioRunner() {
    for (auto& [name, a] : actors_) {
        if (a.bfcp) a.bfcp->close();
    }
    if (badge_fd_ >= 0) ::close(badge_fd_);
}

BfcpClient* ScenarioRunner::participant(const std::string& name) {
    auto it = actors_.find(name);
    return it == actors_.end() ? nullptr : it->second.bfcp.get();
}

ScenarioReport ScenarioRunner::run(const Scenario& scenario) {
    ScenarioReport report;
    report.name = scenario.name;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& step : scenario.steps) {
        StepResult r{step.line, step.text, true, {}, {}};
        try {
            execute(step, r);
        } catch (const std::exception& e) {
            r.ok = false;
            r.diff = std::string("    error: ") + e.what();
        }
        report.steps.push_back(std::move(r));
        if (!report.steps.back().ok) {
            report.passed = false;
            break;
        }
    }
    report.elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return report;
}

ScenarioRunner::Actor& ScenarioRunner::actor(const ScenarioStep& step, const std::string& name) {
    auto it = actors_.find(name);
    if (it == actors_.end()) throw ScenarioParseError(step.line, "actor '" + name + "' is not declared");
    return it->second;
}

const floor::FloorRequestRecord* ScenarioRunner::find_entry(const std::vector<floor::FloorRequestRecord>& queue,
                                                            const std::string& name, floor::FloorId floor) const {
    auto it = actors_.find(name);
    if (it != actors_.end()) {
        if (auto req = it->second.requests.find(floor); req != it->second.requests.end()) {
            for (const auto& r : queue) {
                if (r.request_id == req->second) return &r;
            }
        }
    }
    // Most recent request by this actor, live ones first.
    const floor::FloorRequestRecord* best = nullptr;
    for (const auto& r : queue) {
        const bool mine = it != actors_.end() && it->second.user_id ? r.user_id == it->second.user_id
                                                                    : r.display_name == name;
        if (!mine) continue;
        if (!best || (floor::is_live(r.state) && !floor::is_live(best->state)) ||
            (floor::is_live(r.state) == floor::is_live(best->state) && r.request_id > best->request_id)) {
            best = &r;
        }
    }
    return best;
}

floor::RequestId ScenarioRunner::request_of(const ScenarioStep& step, const std::string& name, floor::FloorId floor) {
    const auto queue = chair_->queue(floor);
    const auto* r = find_entry(queue, name, floor);
    if (!r) throw std::runtime_error("no request by " + name + " on floor " + std::to_string(floor) + "; queue is " +
                                     describe(queue));
    actor(step, name).requests[floor] = r->request_id;
    return r->request_id;
}

std::string ScenarioRunner::check(const ScenarioStep& step, floor::FloorId floor,
                                  const std::vector<floor::FloorRequestRecord>& queue) const {
    std::string diff;
    std::set<floor::RequestId> matched;
    for (const auto& e : step.expect) {
        const auto* r = find_entry(queue, e.actor, floor);
        const bool ok = r && r->state == e.state && (!e.position || r->queue_position == *e.position);
        if (r) matched.insert(r->request_id);
        if (!ok) {
            diff += "    expected: " + describe(e) + "\n    actual:   " + (r ? describe(*r) : e.actor + " absent") + "\n";
        }
    }
    if (step.exact) {
        for (const auto& r : queue) {
            if (!matched.contains(r.request_id)) diff += "    unexpected: " + describe(r) + "\n";
        }
    }
    if (!diff.empty()) diff += "    queue:    " + describe(queue);
    return diff;
}

std::string ScenarioRunner::badge_line(const std::string& line) {
    if (badge_fd_ < 0) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        const auto port = std::to_string(target_.badge_port);
        if (::getaddrinfo(target_.host.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
            throw ConnectionError("cannot resolve " + target_.host);
        }
        badge_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        const int rc = ::connect(badge_fd_, res->ai_addr, res->ai_addrlen);
        ::freeaddrinfo(res);
        if (rc < 0) {
            ::close(badge_fd_);
            badge_fd_ = -1;
            throw ConnectionError("cannot reach badge feed on port " + port);
        }
    }
    const auto out = line + "\n";
    if (::send(badge_fd_, out.data(), out.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(out.size())) {
        throw ConnectionError("badge feed closed");
    }
    const auto deadline = std::chrono::steady_clock::now() + target_.timeout;
    for (;;) {
        if (auto nl = badge_buffer_.find('\n'); nl != std::string::npos) {
            auto reply = badge_buffer_.substr(0, nl);
            badge_buffer_.erase(0, nl + 1);
            return reply;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw TimeoutError("no answer from badge feed");
        pollfd p{badge_fd_, POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) continue;
        char buf[512];
        const auto n = ::recv(badge_fd_, buf, sizeof buf, 0);
        if (n <= 0) throw ConnectionError("badge feed closed");
        badge_buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

void ScenarioRunner::execute(const ScenarioStep& step, StepResult& result) {
    const auto& w = step.words;
    const auto& head = w[0];
    // Badge reads learn their floor from the reader mapping.
    floor::FloorId floor_id = step.floor;

    if (head == "participant" || head == "web") {
        const auto& name = w[1];
        const auto& verb = w[2];
        if (verb == "connect") {
            Actor a;
            a.kind = ActorKind::Participant;
            a.user_id = *number<floor::UserId>(w[4]);
            ClientOptions o;
            o.host = target_.host;
            o.port = target_.bfcp_port;
            o.conference_id = target_.conference_id;
            o.user_id = a.user_id;
            o.display_name = name;
            o.timeout = target_.timeout;
            a.bfcp = std::make_unique<BfcpClient>(o);
            a.bfcp->connect();
            actors_[name] = std::move(a);
        } else if (verb == "join") {
            Actor a;
            a.kind = ActorKind::Web;
            a.web = std::make_unique<WebClient>(HttpEndpoint{target_.host, target_.http_port, target_.conference_id,
                                                             target_.timeout});
            a.web->join(name);
            a.user_id = a.web->user_id();
            actors_[name] = std::move(a);
        } else if (verb == "request" || verb == "release") {
            auto& a = actor(step, name);
            if (a.kind == ActorKind::Web) {
                const auto r = verb == "request" ? a.web->request(step.floor) : a.web->release(step.floor);
                a.requests[step.floor] = r.request_id;
            } else if (verb == "request") {
                a.requests[step.floor] = a.bfcp->request_floor(step.floor).request_id;
            } else {
                a.bfcp->release_floor(request_of(step, name, step.floor));
            }
        } else if (verb == "await") {
            auto& a = actor(step, name);
            const auto target = *floor::parse_state(w[3]);
            const auto within = w.size() > 5 ? std::chrono::milliseconds(*number<unsigned>(w[5])) : target_.timeout;
            auto req = a.requests.begin();
            if (req == a.requests.end()) throw std::runtime_error(name + " has no request to wait on");
            a.bfcp->await_status(req->second, target, within);
        }
    } else if (head == "badge") {
        const auto& name = w[1];
        if (w[2] == "tag") {
            Actor a;
            a.kind = ActorKind::Badge;
            a.tag = w[3];
            a.reader = w[5];
            actors_[name] = std::move(a);
        } else {
            auto& a = actor(step, name);
            const auto reply = badge_line("TAG " + a.tag + " READER " + a.reader);
            if (reply.rfind("OK ", 0) != 0) throw std::runtime_error("badge feed answered '" + reply + "'");
            // "OK <action> request=<id> floor=<f> state=... position=..."
            auto field = [&](const std::string& key) -> std::optional<unsigned> {
                const auto at = reply.find(" " + key + "=");
                if (at == std::string::npos) return std::nullopt;
                const auto from = at + key.size() + 2;
                return number<unsigned>(reply.substr(from, reply.find(' ', from) - from));
            };
            const auto id = field("request");
            const auto f = field("floor");
            if (!id || !f) throw std::runtime_error("badge feed answered '" + reply + "'");
            floor_id = static_cast<floor::FloorId>(*f);
            a.requests[floor_id] = static_cast<floor::RequestId>(*id);
        }
    } else if (head == "chair") {
        const auto& verb = w[1];
        if (verb == "accept" || verb == "deny" || verb == "revoke" || verb == "priority") {
            const auto& name = w[2];
            const auto id = request_of(step, name, step.floor);
            if (verb == "accept") chair_->accept(id);
            else if (verb == "deny") chair_->deny(id);
            else if (verb == "revoke") chair_->revoke(id);
            else chair_->set_priority(id, *floor::parse_priority(w[3]));
        } else if (verb == "revoke-all") {
            chair_->revoke_all(step.floor);
        } else if (verb == "policy") {
            floor::FloorPolicy policy{*number<std::uint16_t>(w[5]), false};
            if (w.size() > 7) policy.auto_grant = w[7] == "on";
            chair_->set_policy(step.floor, policy);
        }
    }

    result.queue = chair_->queue(floor_id);
    result.diff = check(step, floor_id, result.queue);
    result.ok = result.diff.empty();
}

}  // namespace umpire::client
