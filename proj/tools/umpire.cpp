// umpire: participant, chair and badge client for umpired.

#include "umpire/bfcp/floor_info.hpp"
#include "umpire/client/bfcp_client.hpp"
#include "umpire/client/http_client.hpp"
#include "umpire/client/scenario.hpp"
#include "umpire/gateway/json.hpp"

#include <CLI11.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace {

using namespace umpire;
namespace wire = umpire::wire;

struct Common {
    std::string host = "127.0.0.1";
    std::uint16_t bfcp_port = 8124;
    std::uint16_t http_port = 8080;
    std::uint16_t badge_port = 8125;
    std::uint32_t conference = 1;
    std::uint16_t user = 0;
    std::string name;
    std::string chair_token;
    unsigned timeout_ms = 5000;

    [[nodiscard]] client::ClientOptions bfcp(bool as_chair = false) const {
        if (user == 0) throw std::invalid_argument("--user-id is required for BFCP sessions");
        client::ClientOptions o;
        o.host = host;
        o.port = bfcp_port;
        o.conference_id = conference;
        o.user_id = user;
        o.display_name = name;
        if (as_chair) o.chair_token = chair_token;
        o.timeout = std::chrono::milliseconds(timeout_ms);
        return o;
    }
    [[nodiscard]] client::HttpEndpoint http() const {
        return {host, http_port, conference, std::chrono::milliseconds(timeout_ms)};
    }
};

std::mutex out_mu;

void say(const std::string& line) {
    std::lock_guard lk(out_mu);
    std::cout << line << std::endl;
}

std::string describe(const bfcp::RequestInfo& r) {
    std::ostringstream s;
    s << "request=" << r.request_id << " floor=" << r.floor_id << " user=" << r.user_id;
    if (r.state) s << " state=" << floor::to_string(*r.state);
    if (r.position) s << " position=" << unsigned(r.position);
    if (!r.display_name.empty()) s << " name=" << r.display_name;
    return s.str();
}

std::string describe(const wire::BfcpMessage& m) {
    std::string s(wire::to_string(m.header.primitive));
    for (const auto& a : m.attributes) {
        if (auto info = bfcp::parse_request_information(a)) s += "\n  " + describe(*info);
    }
    return s;
}

floor::RequestState state_arg(const std::string& s) {
    auto st = floor::parse_state(s);
    if (!st) throw CLI::ValidationError("state", "unknown state '" + s + "'");
    return *st;
}

/// Prints notifications until stdin closes, or until stop() returns true for
/// one of them.
void hold(client::BfcpClient& c, const std::function<bool(const wire::BfcpMessage&)>& stop = {}) {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    c.on_notification([&](const wire::BfcpMessage& m) {
        say(describe(m));
        if (stop && stop(m)) {
            std::lock_guard lk(mu);
            done = true;
            cv.notify_all();
        }
    });
    std::thread([&] {
        for (std::string line; std::getline(std::cin, line);) {
        }
        std::lock_guard lk(mu);
        done = true;
        cv.notify_all();
    }).detach();
    std::unique_lock lk(mu);
    cv.wait(lk, [&] { return done; });
    c.on_notification({});
}

void interactive(client::BfcpClient& c) {
    c.on_notification([](const wire::BfcpMessage& m) { say("<- " + describe(m)); });
    say("commands: request <floor> | release <request> | query <request> | floor <floor> | quit");
    for (std::string line; std::getline(std::cin, line);) {
        std::istringstream in(line);
        std::string cmd;
        unsigned arg = 0;
        if (!(in >> cmd)) continue;
        if (cmd == "quit" || cmd == "exit") break;
        if (!(in >> arg)) {
            say("usage: " + cmd + " <number>");
            continue;
        }
        try {
            if (cmd == "request") say(describe(c.request_floor(static_cast<floor::FloorId>(arg))));
            else if (cmd == "release") say(describe(c.release_floor(static_cast<floor::RequestId>(arg))));
            else if (cmd == "query") say(describe(c.query_request(static_cast<floor::RequestId>(arg))));
            else if (cmd == "floor") {
                for (const auto& r : c.query_floor(static_cast<floor::FloorId>(arg))) say(describe(r));
            } else say("unknown command '" + cmd + "'");
        } catch (const std::exception& e) {
            say(std::string("error: ") + e.what());
        }
    }
    c.on_notification({});
}

std::string badge_exchange(const Common& o, const std::vector<std::string>& lines) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(o.host.c_str(), std::to_string(o.badge_port).c_str(), &hints, &res) != 0 || !res) {
        throw std::runtime_error("cannot resolve " + o.host);
    }
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0) {
        ::close(fd);
        throw std::runtime_error("cannot reach badge feed on port " + std::to_string(o.badge_port));
    }
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    ::send(fd, out.data(), out.size(), MSG_NOSIGNAL);
    ::shutdown(fd, SHUT_WR);
    std::string reply;
    char buf[512];
    for (ssize_t n; (n = ::recv(fd, buf, sizeof buf, 0)) > 0;) reply.append(buf, static_cast<std::size_t>(n));
    ::close(fd);
    return reply;
}

}  // namespace

int main(int argc, char** argv) {
    Common o;
    CLI::App app{"Client for the umpired floor control server", "umpire"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.add_option("--host", o.host);
    app.add_option("--bfcp-port", o.bfcp_port);
    app.add_option("--http-port", o.http_port);
    app.add_option("--badge-port", o.badge_port);
    app.add_option("--conference-id", o.conference);
    app.add_option("-u,--user-id", o.user, "BFCP user id");
    app.add_option("-n,--name", o.name, "Display name");
    app.add_option("--chair-token", o.chair_token)->envname("UMPIRE_CHAIR_TOKEN");
    app.add_option("--timeout-ms", o.timeout_ms, "Reply timeout");

    auto* connect = app.add_subcommand("connect", "Open a session and read commands from stdin");

    floor::FloorId req_floor = 1;
    std::string wait_state;
    auto* request = app.add_subcommand("request", "Request a floor, then print notifications until it finishes");
    request->add_option("floor", req_floor)->required();
    request->add_option("--wait", wait_state, "Exit once the request reaches this state");

    floor::RequestId rel_id = 0;
    auto* release = app.add_subcommand("release", "Release or cancel a request");
    release->add_option("request", rel_id)->required();

    bool watch_chair = false, watch_events = false;
    floor::FloorId watch_floor = 1;
    auto* watch = app.add_subcommand("watch", "Print notifications until stdin closes");
    watch->add_flag("--chair", watch_chair, "Log in with the chair token to see every new request");
    watch->add_flag("--events", watch_events, "Follow the HTTP event stream instead of BFCP");
    watch->add_option("--floor", watch_floor, "Floor whose status to subscribe to");

    auto* chair = app.add_subcommand("chair", "Moderator commands over HTTP");
    chair->require_subcommand(1);
    floor::RequestId chair_req = 0;
    floor::FloorId chair_floor = 1;
    std::string prio;
    unsigned max_granted = 0;
    std::string auto_grant;
    for (const char* verb : {"accept", "deny", "revoke"}) {
        chair->add_subcommand(verb, std::string(verb) + " a request")->add_option("request", chair_req)->required();
    }
    auto* priority = chair->add_subcommand("priority", "Set a request's priority");
    priority->add_option("request", chair_req)->required();
    priority->add_option("level", prio)->required()->check(CLI::IsMember({"normal", "business"}));
    chair->add_subcommand("revoke-all", "Revoke every grant on a floor")->add_option("--floor", chair_floor);
    auto* policy = chair->add_subcommand("policy", "Change a floor's policy");
    policy->add_option("--floor", chair_floor);
    policy->add_option("--max", max_granted)->check(CLI::PositiveNumber);
    policy->add_option("--auto", auto_grant)->check(CLI::IsMember({"on", "off"}));
    chair->add_subcommand("queue", "Show a floor's queue")->add_option("--floor", chair_floor);

    std::string tag, reader;
    auto* badge = app.add_subcommand("badge", "Send badge reads to the feed; without --tag, lines come from stdin");
    badge->add_option("--tag", tag);
    badge->add_option("--reader", reader);

    std::string scenario_file;
    auto* scenario = app.add_subcommand("scenario", "Scripted multi-actor runs");
    scenario->require_subcommand(1);
    auto* scenario_run = scenario->add_subcommand("run", "Run a scenario file against a live daemon");
    scenario_run->add_option("file", scenario_file)->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*connect) {
            client::BfcpClient c(o.bfcp());
            c.connect();
            say("connected conference=" + std::to_string(o.conference) + " user=" + std::to_string(o.user));
            interactive(c);
        } else if (*request) {
            client::BfcpClient c(o.bfcp());
            c.connect();
            const auto r = c.request_floor(req_floor);
            say(describe(r));
            const auto target = wait_state.empty() ? std::optional<floor::RequestState>{} : state_arg(wait_state);
            if (target && r.state == target) return 0;
            hold(c, [&](const wire::BfcpMessage& m) {
                if (m.header.primitive != wire::Primitive::FloorRequestStatus) return false;
                const auto info = bfcp::first_request_information(m);
                if (!info || info->request_id != r.request_id || !info->state) return false;
                return target ? *info->state == *target : floor::is_terminal(*info->state);
            });
        } else if (*release) {
            client::BfcpClient c(o.bfcp());
            c.connect();
            say(describe(c.release_floor(rel_id)));
        } else if (*watch) {
            if (watch_events) {
                client::EventStream s(o.http(), o.chair_token);
                s.on_event([](const client::StreamEvent& e) {
                    say("id=" + std::to_string(e.id) + " " + e.event + " " + e.data.dump());
                });
                s.start();
                for (std::string line; std::getline(std::cin, line);) {
                }
                s.stop();
            } else {
                client::BfcpClient c(o.bfcp(watch_chair));
                c.connect();
                for (const auto& r : c.query_floor(watch_floor)) say(describe(r));
                hold(c);
            }
        } else if (*chair) {
            client::ChairClient c(o.http(), o.chair_token);
            auto* sub = chair->get_subcommands().front();
            const std::string verb = sub->get_name();
            gateway::Json cmd;
            if (verb == "queue") {
                for (const auto& r : c.queue(chair_floor)) {
                    say(gateway::to_json(r).dump());
                }
                return 0;
            }
            cmd["action"] = verb == "revoke-all" ? "revoke_all" : verb == "priority" ? "set_priority"
                            : verb == "policy"   ? "set_policy"
                                                 : verb;
            if (verb == "accept" || verb == "deny" || verb == "revoke" || verb == "priority") cmd["request_id"] = chair_req;
            if (verb == "priority") cmd["priority"] = prio;
            if (verb == "revoke-all" || verb == "policy") cmd["floor_id"] = chair_floor;
            if (verb == "policy") {
                gateway::Json p = gateway::Json::object();
                if (max_granted) p["max_granted"] = max_granted;
                if (!auto_grant.empty()) p["auto_grant"] = auto_grant == "on";
                cmd["policy"] = p;
            }
            std::cout << c.command(cmd).dump(2) << "\n";
        } else if (*badge) {
            std::vector<std::string> lines;
            if (!tag.empty()) {
                if (reader.empty()) throw CLI::ValidationError("--reader", "required with --tag");
                lines.push_back("TAG " + tag + " READER " + reader);
            } else {
                for (std::string l; std::getline(std::cin, l);) lines.push_back(l);
            }
            const auto reply = badge_exchange(o, lines);
            std::cout << reply;
            return reply.find("ERR ") == std::string::npos ? 0 : 1;
        } else if (*scenario_run) {
            client::ScenarioTarget t;
            t.host = o.host;
            t.bfcp_port = o.bfcp_port;
            t.http_port = o.http_port;
            t.badge_port = o.badge_port;
            t.conference_id = o.conference;
            t.chair_token = o.chair_token;
            t.timeout = std::chrono::milliseconds(o.timeout_ms);
            client::ScenarioRunner runner(t);
            const auto report = runner.run(client::load_scenario(scenario_file));
            std::cout << report.text();
            return report.passed ? 0 : 1;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "umpire: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
