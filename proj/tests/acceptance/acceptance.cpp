// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include "oracle/floor_harness.hpp"
#include "oracle/fuzz.hpp"
#include "oracle/message_gen.hpp"
#include "support/live_daemon.hpp"
#include "umpire/bfcp/floor_info.hpp"
#include "umpire/wire/codec.hpp"

#include <fmt/format.h>

#include <iostream>
#include <map>
#include <mutex>
#include <thread>

using namespace umpire;
using namespace std::chrono_literals;
using floor::RequestState;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (!o.ok) ++failures;
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << " (" << ms.count() << " ms): " << o.detail << std::endl;
}

client::ClientOptions participant(const umpire::testing::LiveDaemon& live, floor::UserId user, std::string name) {
    client::ClientOptions o;
    o.port = live.daemon->bfcp_port();
    o.conference_id = live.daemon->options().conference.id;
    o.user_id = user;
    o.display_name = std::move(name);
    return o;
}

std::map<std::string, const floor::FloorRequestRecord*> by_name(const std::vector<floor::FloorRequestRecord>& q) {
    std::map<std::string, const floor::FloorRequestRecord*> out;
    for (const auto& r : q) out[r.display_name] = &r;
    return out;
}

std::string states(const std::vector<floor::FloorRequestRecord>& q) {
    std::string s;
    for (const auto& r : q) {
        s += fmt::format("{}{}:{}", s.empty() ? "" : " ", r.display_name, floor::to_string(r.state));
        if (r.queue_position) s += fmt::format("@{}", r.queue_position);
    }
    return s.empty() ? "(empty)" : s;
}

Outcome golden_scenario() {
    const auto start = std::chrono::steady_clock::now();
    umpire::testing::LiveDaemon live;
    client::ScenarioRunner runner(live.target());
    const auto report = runner.run(client::load_scenario(umpire::testing::kScenarioDir / "ietf-fig2-4.scn"));
    if (!report.passed) return {false, report.text()};
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    const auto q = chair.queue(1);
    auto m = by_name(q);
    const bool exact = q.size() == 3 && m.count("User1") && m.count("User2") && m.count("spromano") &&
                       m["User1"]->state == RequestState::Pending && m["User1"]->queue_position == 1 &&
                       m["User2"]->state == RequestState::Granted && m["spromano"]->state == RequestState::Revoked;
    const auto total = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return {exact && total < 10s,
            fmt::format("{} steps, final {} in {} ms", report.steps.size(), states(q), total.count())};
}

Outcome single_grant_narrative() {
    umpire::testing::LiveDaemon live;
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    chair.set_policy(1, {1, false});
    std::vector<std::unique_ptr<client::BfcpClient>> users;
    std::vector<floor::RequestId> ids;
    for (int i = 0; i < 3; ++i) {
        users.push_back(std::make_unique<client::BfcpClient>(participant(live, 201 + i, fmt::format("p{}", i + 1))));
        users.back()->connect();
        ids.push_back(users.back()->request_floor(1).request_id);
    }
    std::vector<RequestState> after_accept;
    for (auto id : ids) after_accept.push_back(chair.accept(id).state);
    const bool accepts_ok = after_accept == std::vector{RequestState::Granted, RequestState::Accepted,
                                                        RequestState::Accepted};
    const auto before = states(chair.queue(1));

    users[0]->release_floor(ids[0]);
    const auto q = chair.queue(1);
    auto m = by_name(q);
    const bool promoted = m["p1"]->state == RequestState::Released && m["p2"]->state == RequestState::Granted &&
                          m["p3"]->state == RequestState::Accepted && m["p3"]->queue_position == 1;
    // The promoted owner hears about it without asking.
    users[1]->await_status(ids[1], RequestState::Granted, 2s);
    return {accepts_ok && promoted, fmt::format("after accepts [{}], after release [{}]", before, states(q))};
}

Outcome codec_roundtrip() {
    umpire::testing::MessageGenerator gen(20260101);
    std::size_t mismatches = 0;
    for (int i = 0; i < 10'000; ++i) {
        const auto m = gen.next();
        auto back = wire::decode(wire::encode(m));
        if (!std::holds_alternative<wire::BfcpMessage>(back) || std::get<wire::BfcpMessage>(back) != m) ++mismatches;
    }
    const auto fuzz = umpire::testing::run_decode_fuzz(1'000'000, std::chrono::hours(1), 99);
    return {mismatches == 0 && fuzz.exceptions == 0 && fuzz.roundtrip_failures == 0 && fuzz.inputs == 1'000'000,
            fmt::format("10000 round-trips, {} mismatches; fuzz {} inputs, {} decoded, {} exceptions, {} re-encode "
                        "mismatches",
                        mismatches, fuzz.inputs, fuzz.decoded, fuzz.exceptions, fuzz.roundtrip_failures)};
}

Outcome oracle_equivalence() {
    std::string detail;
    bool ok = true;
    for (int n : {1, 2}) {
        const auto r = oracle::explore(3, 2, n, 6);
        ok = ok && r.first_divergence.empty();
        detail += fmt::format("n={}: {} transitions, {} states{}; ", n, r.transitions, r.distinct_states,
                              r.first_divergence.empty() ? "" : ", diverged at " + r.first_divergence);
    }
    return {ok, detail};
}

Outcome grant_cap() {
    const auto r = oracle::random_sequences(100'000, 30, 314159);
    return {r.sequences == 100'000 && r.cap_violations == 0,
            fmt::format("{} sequences, {} operations, {} cap violations ({} position, {} illegal transitions)",
                        r.sequences, r.operations, r.cap_violations, r.position_violations, r.illegal_transitions)};
}

Outcome requirement_cancel() {
    umpire::testing::LiveDaemon live;
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    client::BfcpClient a(participant(live, 301, "remote"));
    a.connect();
    const auto req = a.request_floor(1);
    const auto rel = a.release_floor(req.request_id);

    client::WebClient w(live.endpoint());
    w.join("browser");
    w.request(1);
    const auto wrel = w.release(1);

    std::size_t live_left = 0;
    for (const auto& r : chair.queue(1)) live_left += floor::is_live(r.state);
    return {req.state == RequestState::Pending && rel.state == RequestState::Cancelled &&
                wrel.state == RequestState::Cancelled && live_left == 0,
            fmt::format("bfcp {} then {}, web {}, live entries left {}", floor::to_string(*req.state),
                        floor::to_string(*rel.state), floor::to_string(wrel.state), live_left)};
}

Outcome requirement_speak_signal() {
    umpire::testing::LiveDaemon live;
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    client::BfcpClient a(participant(live, 302, "speaker"));
    a.connect();
    const auto id = a.request_floor(1).request_id;
    chair.accept(id);
    const auto granted = a.await_status(id, RequestState::Granted, 2s);
    chair.revoke(id);
    const auto revoked = a.await_status(id, RequestState::Revoked, 2s);
    return {granted.state == RequestState::Granted && revoked.state == RequestState::Revoked,
            "owner notified of GRANTED and REVOKED without polling"};
}

Outcome requirement_queue_visible() {
    umpire::testing::LiveDaemon live;
    client::EventStream console(live.endpoint(), umpire::testing::kChairToken);
    client::QueueMirror mirror;
    std::mutex mirror_mu;
    console.on_event([&](const client::StreamEvent& e) {
        std::lock_guard lk(mirror_mu);
        mirror.apply(e);
    });
    console.start();
    if (!console.wait_for([](const auto& ev) { return !ev.empty(); }, 2s)) return {false, "no snapshot on the stream"};

    client::ScenarioRunner runner(live.target());
    const auto scenario = client::load_scenario(umpire::testing::kScenarioDir / "ietf-fig2-4.scn");
    const auto report = runner.run(scenario);
    if (!report.passed || report.steps.size() != scenario.steps.size()) return {false, report.text()};

    std::size_t seen = 0;
    for (const auto& step : report.steps) {
        if (step.queue.size() < seen) return {false, fmt::format("line {}: entries vanished", step.line)};
        seen = step.queue.size();
    }
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    const auto last = live.daemon->conference().events().last_seq();
    console.wait_for_id(last, 2s);
    const auto served = chair.queue(1);
    std::lock_guard lk(mirror_mu);
    const auto mirrored = states(mirror.entries(1));
    return {mirrored == states(served) && seen == 3,
            fmt::format("queue read after all {} steps; console mirror [{}]", report.steps.size(), mirrored)};
}

Outcome requirement_mute_all() {
    umpire::testing::LiveDaemon live;
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    chair.set_policy(1, {3, false});
    std::vector<std::unique_ptr<client::BfcpClient>> users;
    for (int i = 0; i < 3; ++i) {
        users.push_back(std::make_unique<client::BfcpClient>(participant(live, 311 + i, fmt::format("m{}", i))));
        users.back()->connect();
        chair.accept(users.back()->request_floor(1).request_id);
    }
    const auto revoked = chair.revoke_all(1);
    std::size_t granted = 0;
    for (const auto& r : chair.queue(1)) granted += r.state == RequestState::Granted;
    bool all_revoked = revoked.size() == 3;
    for (const auto& r : revoked) all_revoked = all_revoked && r.state == RequestState::Revoked;
    return {all_revoked && granted == 0,
            fmt::format("one command revoked {}, {} still granted", revoked.size(), granted)};
}

Outcome requirement_open_mic() {
    umpire::testing::LiveDaemon live;
    client::ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    chair.set_policy(1, {2, true});
    client::BfcpClient a(participant(live, 321, "a")), b(participant(live, 322, "b"));
    a.connect();
    b.connect();
    const auto ra = a.request_floor(1);
    const auto rb = b.request_floor(1);
    return {ra.state == RequestState::Granted && rb.state == RequestState::Granted,
            fmt::format("direct replies {} and {} with no chair decision", floor::to_string(*ra.state),
                        floor::to_string(*rb.state))};
}

Outcome notification_completeness() {
    umpire::testing::LiveDaemon live;
    auto& service = live.daemon->conference();
    // Badge wearers watch over BFCP too, so every request has an owning session.
    client::BfcpClient user1(participant(live, 101, "User1")), user2(participant(live, 102, "User2"));
    user1.connect();
    user2.connect();
    const auto from = service.events().last_seq();

    client::ScenarioRunner runner(live.target());
    const auto report = runner.run(client::load_scenario(umpire::testing::kScenarioDir / "ietf-fig2-4.scn"));
    if (!report.passed) return {false, report.text()};

    std::map<floor::UserId, std::size_t> transitions;
    std::size_t total = 0;
    for (const auto& e : *service.events().since(from)) {
        if (e.kind != floor::EventKind::RequestStateChanged) continue;
        ++transitions[e.request->user_id];
        ++total;
    }
    std::map<floor::UserId, client::BfcpClient*> sessions{{101, &user1}, {102, &user2}, {103, runner.participant("spromano")}};

    auto statuses = [](const client::BfcpClient& c) {
        std::vector<bfcp::RequestInfo> out;
        for (const auto& m : c.notifications()) {
            if (m.header.primitive != wire::Primitive::FloorRequestStatus) continue;
            if (auto info = bfcp::first_request_information(m)) out.push_back(*info);
        }
        return out;
    };
    // Notifications are asynchronous; give stragglers a moment.
    const auto deadline = std::chrono::steady_clock::now() + 2s;
    auto received_all = [&] {
        for (auto& [user, c] : sessions) {
            if (statuses(*c).size() < transitions[user]) return false;
        }
        return true;
    };
    while (!received_all() && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(10ms);
    std::this_thread::sleep_for(100ms);

    bool ok = total > 0;
    std::string detail;
    std::size_t sent = 0;
    for (auto& [user, c] : sessions) {
        const auto got = statuses(*c);
        sent += got.size();
        bool ordered = true;
        std::uint64_t prev = 0;
        for (const auto& s : got) {
            if (!s.seq || *s.seq <= prev) ordered = false;
            prev = s.seq.value_or(prev);
        }
        ok = ok && got.size() == transitions[user] && ordered;
        detail += fmt::format("user {}: {} statuses for {} transitions{}; ", user, got.size(), transitions[user],
                              ordered ? ", in seq order" : ", OUT OF ORDER");
    }
    ok = ok && sent == total;
    return {ok, detail + fmt::format("total {} statuses for {} transitions", sent, total)};
}

}  // namespace

int main() {
    criterion("golden-scenario", golden_scenario);
    criterion("single-grant-narrative", single_grant_narrative);
    criterion("codec-roundtrip-and-fuzz", codec_roundtrip);
    criterion("oracle-equivalence", oracle_equivalence);
    criterion("grant-cap", grant_cap);
    criterion("requirement/request-and-cancel", requirement_cancel);
    criterion("requirement/speak-signal", requirement_speak_signal);
    criterion("requirement/queue-visible-every-step", requirement_queue_visible);
    criterion("requirement/revoke-all", requirement_mute_all);
    criterion("requirement/auto-grant", requirement_open_mic);
    criterion("notification-completeness", notification_completeness);
    std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria" << std::endl;
    return failures;
}
