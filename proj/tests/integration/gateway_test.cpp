#include "umpire/client/http_client.hpp"
#include "umpire/gateway/http_gateway.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <random>

using namespace umpire;
using namespace std::chrono_literals;
using client::ChairClient;
using client::EventStream;
using client::HttpError;
using client::WebClient;
using floor::RequestState;

namespace {

struct Gateway {
    server::ConferenceRegistry registry;
    std::shared_ptr<server::ConferenceService> conf;
    std::unique_ptr<gateway::HttpGateway> http;

    explicit Gateway(floor::FloorPolicy policy = {}, std::size_t history = 1024, gateway::HttpGatewayOptions opts = {}) {
        server::ConferenceConfig cfg;
        cfg.id = 1;
        cfg.floors = {{1, "audio"}, {2, "video"}};
        cfg.policy = policy;
        cfg.chair_token = "chair-secret";
        cfg.event_history = history;
        conf = registry.create(cfg);
        opts.port = 0;
        if (opts.heartbeat == 15000ms) opts.heartbeat = 200ms;
        http = std::make_unique<gateway::HttpGateway>(registry, opts);
        http->start();
    }
    ~Gateway() {
        http->stop();
        registry.stop_all();
    }

    client::HttpEndpoint endpoint() const { return {"127.0.0.1", http->port(), 1, 3000ms}; }
    ChairClient chair() const { return {endpoint(), "chair-secret"}; }
    WebClient web(const std::string& name) const {
        WebClient w(endpoint());
        w.join(name);
        return w;
    }
    std::unique_ptr<EventStream> stream(std::optional<std::uint64_t> resume = std::nullopt,
                                        std::string token = "chair-secret") const {
        auto s = std::make_unique<EventStream>(endpoint(), std::move(token), resume);
        s->start();
        return s;
    }
    httplib::Client raw() const { return httplib::Client("127.0.0.1", http->port()); }
};

template <typename F>
HttpError http_error(F&& f) {
    try {
        f();
    } catch (const HttpError& e) {
        return e;
    }
    ADD_FAILURE() << "no HttpError";
    return HttpError(0, "", "");
}

std::vector<std::string> names(const std::vector<floor::FloorRequestRecord>& rs) {
    std::vector<std::string> out;
    for (const auto& r : rs) out.push_back(r.display_name + ":" + std::string(floor::to_string(r.state)));
    return out;
}

}  // namespace

TEST(QueueEndpoint, EmptyFloorIsEmptyArray) {
    Gateway g;
    auto c = g.raw();
    auto res = c.Get("/api/conf/1/floors/1/queue");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, "[]");
    EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
}

TEST(QueueEndpoint, OnePendingEntryWithAllFields) {
    Gateway g;
    auto user1 = g.web("User1");
    user1.request(1);
    auto c = g.raw();
    const auto body = gateway::Json::parse(c.Get("/api/conf/1/floors/1/queue")->body);
    ASSERT_EQ(body.size(), 1u);
    const auto& e = body[0];
    for (const char* key : {"request_id", "floor_id", "user_id", "display_name", "origin", "priority", "state", "position"}) {
        EXPECT_TRUE(e.contains(key)) << key;
    }
    EXPECT_EQ(e["display_name"], "User1");
    EXPECT_EQ(e["state"], "PENDING");
    EXPECT_EQ(e["origin"], "web");
    EXPECT_EQ(e["priority"], "normal");
    EXPECT_EQ(e["position"], 1);
}

TEST(QueueEndpoint, UnknownFloorOrConferenceIs404) {
    Gateway g;
    auto c = g.raw();
    EXPECT_EQ(c.Get("/api/conf/1/floors/9/queue")->status, 404);
    EXPECT_EQ(c.Get("/api/conf/7/floors/1/queue")->status, 404);
    EXPECT_EQ(c.Get("/api/conf/x/floors/1/queue")->status, 404);
}

TEST(ChairCommand, RequiresChairToken) {
    Gateway g;
    auto bad = ChairClient(g.endpoint(), "wrong");
    EXPECT_EQ(http_error([&] { bad.accept(1); }).status(), 401);
    auto c = g.raw();
    EXPECT_EQ(c.Post("/api/conf/1/chair/command", R"({"action":"accept","request_id":1})", "application/json")->status,
              401);
}

TEST(ChairCommand, AcceptRevokeAndConflicts) {
    Gateway g({2, false});
    auto chair = g.chair();
    auto a = g.web("User1");
    auto b = g.web("spromano");
    a.request(1);
    const auto r = b.request(1);
    EXPECT_EQ(r.queue_position, 2);

    EXPECT_EQ(chair.accept(r.request_id).state, RequestState::Granted);
    const auto again = http_error([&] { chair.accept(r.request_id); });
    EXPECT_EQ(again.status(), 409);
    EXPECT_EQ(again.code(), "NotPending");
    EXPECT_EQ(chair.revoke(r.request_id).state, RequestState::Revoked);
    EXPECT_EQ(http_error([&] { chair.revoke(999); }).status(), 404);
    EXPECT_EQ(http_error([&] { chair.command({{"action", "explode"}}); }).status(), 400);
    EXPECT_EQ(http_error([&] { chair.command({{"action", "accept"}}); }).status(), 400);
    EXPECT_EQ(http_error([&] { chair.command({{"action", "set_priority"}, {"request_id", 1}}); }).status(), 400);
}

TEST(ChairCommand, PolicyPriorityAndRevokeAll) {
    Gateway g({1, false});
    auto chair = g.chair();
    auto a = g.web("a"), b = g.web("b"), c = g.web("c");
    const auto ra = a.request(1), rb = b.request(1), rc = c.request(1);
    EXPECT_EQ(chair.set_priority(rc.request_id, floor::Priority::BusinessClass).queue_position, 1);
    EXPECT_EQ(chair.set_policy(1, {3, true}).max_granted, 3);
    EXPECT_EQ(names(chair.queue(1)), (std::vector<std::string>{"c:GRANTED", "a:GRANTED", "b:GRANTED"}));
    const auto shrink = http_error([&] { chair.set_policy(1, {1, true}); });
    EXPECT_EQ(shrink.status(), 409);
    EXPECT_EQ(shrink.code(), "InvalidPolicy");
    EXPECT_EQ(chair.revoke_all(1).size(), 3u);
    for (const auto& r : chair.queue(1)) EXPECT_EQ(r.state, RequestState::Revoked);
    (void)ra;
    (void)rb;
}

TEST(ChairCommand, RetriedCommandIdActsOnce) {
    Gateway g({1, false});
    auto chair = g.chair();
    g.web("a").request(1);
    g.web("b").request(1);
    chair.accept(1);
    const gateway::Json cmd{{"action", "accept"}, {"request_id", 2}, {"command_id", "c-1"}};
    const auto first = chair.command(cmd);
    const auto seq_after = g.conf->events().last_seq();
    const auto second = chair.command(cmd);
    EXPECT_EQ(first, second);
    EXPECT_EQ(g.conf->events().last_seq(), seq_after);
    EXPECT_EQ(first["records"][0]["state"], "ACCEPTED");

    // A fresh id acts again and hits the state machine.
    EXPECT_EQ(http_error([&] { chair.command({{"action", "accept"}, {"request_id", 2}, {"command_id", "c-2"}}); })
                  .code(),
              "NotPending");
}

TEST(ChairCommand, IdempotencyKeyHeaderWorksToo) {
    Gateway g;
    auto c = g.raw();
    const httplib::Headers h{{"Authorization", "Bearer chair-secret"}, {"Idempotency-Key", "k"}};
    const auto body = R"({"action":"set_policy","floor_id":1,"policy":{"max_granted":2}})";
    auto r1 = c.Post("/api/conf/1/chair/command", h, body, "application/json");
    const auto seq = g.conf->events().last_seq();
    auto r2 = c.Post("/api/conf/1/chair/command", h, body, "application/json");
    EXPECT_EQ(r1->body, r2->body);
    EXPECT_EQ(g.conf->events().last_seq(), seq);
}

TEST(IdempotencyCache, KeepsTheLastCapacityKeys) {
    gateway::IdempotencyCache cache(256);
    for (int i = 0; i < 300; ++i) cache.put("k" + std::to_string(i), {200, std::to_string(i)});
    EXPECT_EQ(cache.size(), 256u);
    EXPECT_FALSE(cache.find("k43"));
    EXPECT_EQ(cache.find("k44")->body, "44");
    EXPECT_EQ(cache.find("k299")->body, "299");
    cache.put("k299", {409, "x"});
    EXPECT_EQ(cache.size(), 256u);
    EXPECT_EQ(cache.find("k44")->body, "44");
}

TEST(WebParticipant, JoinRequestRelease) {
    Gateway g;
    auto alice = g.web("alice");
    EXPECT_GE(alice.user_id(), 0x8000);
    EXPECT_EQ(alice.token().size(), 32u);
    auto bob = g.web("bob");
    EXPECT_NE(alice.user_id(), bob.user_id());

    const auto r = alice.request(1);
    EXPECT_EQ(r.state, RequestState::Pending);
    EXPECT_EQ(r.queue_position, 1);
    EXPECT_EQ(r.origin, floor::Origin::Web);
    const auto dup = http_error([&] { alice.request(1); });
    EXPECT_EQ(dup.status(), 409);
    EXPECT_EQ(dup.code(), "DuplicateRequest");
    EXPECT_EQ(alice.release(1).state, RequestState::Cancelled);
    EXPECT_EQ(http_error([&] { alice.release(1); }).status(), 404);
}

TEST(WebParticipant, ReleaseWhileGrantedReleases) {
    Gateway g({1, true});
    auto alice = g.web("alice");
    EXPECT_EQ(alice.request(1).state, RequestState::Granted);
    EXPECT_EQ(alice.release(1).state, RequestState::Released);
}

TEST(WebParticipant, BadTokenOrPayload) {
    Gateway g;
    auto c = g.raw();
    const httplib::Headers bad{{"Authorization", "Bearer nope"}};
    EXPECT_EQ(c.Post("/api/conf/1/floor-action", bad, R"({"kind":"request","floor_id":1})", "application/json")->status,
              401);
    EXPECT_EQ(c.Post("/api/conf/1/participants", "{}", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/api/conf/1/participants", "not json", "application/json")->status, 400);
    auto alice = g.web("alice");
    const httplib::Headers ok{{"Authorization", "Bearer " + alice.token()}};
    EXPECT_EQ(c.Post("/api/conf/1/floor-action", ok, R"({"kind":"dance","floor_id":1})", "application/json")->status,
              400);
    EXPECT_EQ(c.Post("/api/conf/1/floor-action", ok, R"({"kind":"request","floor_id":9})", "application/json")->status,
              404);
}

TEST(EventStreamEndpoint, RequiresToken) {
    Gateway g;
    auto s = g.stream(std::nullopt, "nope");
    s->wait_for([](const auto&) { return false; }, 1000ms);
    EXPECT_EQ(s->status(), 401);
    EXPECT_TRUE(s->events().empty());

    auto alice = g.web("alice");
    auto ps = g.stream(std::nullopt, alice.token());
    EXPECT_TRUE(ps->wait_for([](const auto& evs) { return !evs.empty(); }, 2000ms));
    EXPECT_EQ(ps->events().front().event, "snapshot");
}

TEST(EventStreamEndpoint, SnapshotThenOneStateEventPerAccept) {
    Gateway g({1, false});
    const auto r = g.web("spromano").request(1);
    auto s = g.stream();
    ASSERT_TRUE(s->wait_for([](const auto& evs) { return !evs.empty(); }, 2000ms));
    g.chair().accept(r.request_id);
    ASSERT_TRUE(s->wait_for_id(g.conf->events().last_seq(), 2000ms));
    std::this_thread::sleep_for(100ms);
    const auto evs = s->events();
    ASSERT_EQ(evs.size(), 2u);
    EXPECT_EQ(evs[0].event, "snapshot");
    EXPECT_EQ(evs[0].data["floors"][0]["entries"][0]["display_name"], "spromano");
    EXPECT_EQ(evs[1].event, "state");
    EXPECT_EQ(evs[1].id, evs[0].id + 1);
    EXPECT_EQ(evs[1].data["old_state"], "PENDING");
    EXPECT_EQ(evs[1].data["state"], "GRANTED");
    EXPECT_EQ(evs[1].data["request"]["request_id"], r.request_id);
}

TEST(EventStreamEndpoint, ResumeReplaysEventsAfterLastId) {
    Gateway g({2, false});
    auto a = g.web("a"), b = g.web("b");
    a.request(1);
    b.request(1);
    a.release(1);
    const auto k = std::uint64_t{1};
    auto s = g.stream(k);
    ASSERT_TRUE(s->wait_for_id(3, 2000ms));
    const auto evs = s->events();
    ASSERT_EQ(evs.size(), 2u);
    EXPECT_EQ(evs[0].id, 2u);
    EXPECT_EQ(evs[1].id, 3u);
    EXPECT_EQ(evs[1].data["state"], "CANCELLED");

    // Then continues live.
    b.release(1);
    EXPECT_TRUE(s->wait_for_id(4, 2000ms));
}

TEST(EventStreamEndpoint, ResumeFromEvictedHistoryStartsWithSnapshot) {
    Gateway g({1, false}, 4);
    auto a = g.web("a");
    for (int i = 0; i < 5; ++i) {
        a.request(1);
        a.release(1);
    }
    auto s = g.stream(1);
    ASSERT_TRUE(s->wait_for([](const auto& evs) { return !evs.empty(); }, 2000ms));
    EXPECT_EQ(s->events().front().event, "snapshot");
    EXPECT_EQ(s->events().front().id, 10u);
}

TEST(EventStreamEndpoint, TwoConsolesSeeIdenticalSequences) {
    Gateway g({2, false});
    auto s1 = g.stream();
    auto s2 = g.stream();
    ASSERT_TRUE(s1->wait_for([](const auto& e) { return !e.empty(); }, 2000ms));
    ASSERT_TRUE(s2->wait_for([](const auto& e) { return !e.empty(); }, 2000ms));
    auto chair = g.chair();
    std::vector<WebClient> users;
    for (int i = 0; i < 4; ++i) users.push_back(g.web("u" + std::to_string(i)));
    for (auto& u : users) u.request(1);
    chair.accept(2);
    chair.accept(3);
    chair.revoke(2);
    users[0].release(1);
    chair.set_policy(1, {3, true});
    const auto last = g.conf->events().last_seq();
    ASSERT_TRUE(s1->wait_for_id(last, 2000ms));
    ASSERT_TRUE(s2->wait_for_id(last, 2000ms));

    auto strip = [](std::vector<client::StreamEvent> evs) {
        std::vector<std::pair<std::uint64_t, std::string>> out;
        for (const auto& e : evs) out.emplace_back(e.id, e.event + e.data.dump());
        return out;
    };
    EXPECT_EQ(strip(s1->events()), strip(s2->events()));
    const auto evs = s1->events();
    for (std::size_t i = 2; i < evs.size(); ++i) EXPECT_EQ(evs[i].id, evs[i - 1].id + 1);
}

TEST(EventStreamEndpoint, HeartbeatsKeepIdleStreamsAlive) {
    Gateway g;
    auto s = g.stream();
    std::this_thread::sleep_for(800ms);
    EXPECT_GE(s->heartbeats(), 2u);
    EXPECT_FALSE(s->finished());
}

TEST(EventStreamEndpoint, StreamClosesOnConferenceShutdown) {
    Gateway g;
    auto s = g.stream();
    ASSERT_TRUE(s->wait_for([](const auto& e) { return !e.empty(); }, 2000ms));
    g.conf->stop();
    EXPECT_TRUE(s->wait_for([](const auto&) { return false; }, 2000ms) || s->finished());
    for (int i = 0; i < 40 && !s->finished(); ++i) std::this_thread::sleep_for(50ms);
    EXPECT_TRUE(s->finished());
}

// Replaying the stream from its snapshot reconstructs the served queue at
// every quiescent point.
TEST(EventStreamEndpoint, MirrorMatchesQueueAtRandomPausePoints) {
    Gateway g({2, false});
    auto s = g.stream();
    ASSERT_TRUE(s->wait_for([](const auto& e) { return !e.empty(); }, 2000ms));
    auto chair = g.chair();
    std::vector<WebClient> users;
    for (int i = 0; i < 5; ++i) users.push_back(g.web("u" + std::to_string(i)));

    std::mt19937 rng(7);
    int pauses = 0;
    for (int step = 0; step < 300; ++step) {
        const auto floor_id = static_cast<floor::FloorId>(1 + rng() % 2);
        auto& u = users[rng() % users.size()];
        try {
            switch (rng() % 7) {
            case 0:
            case 1: u.request(floor_id); break;
            case 2: u.release(floor_id); break;
            case 3: chair.accept(static_cast<floor::RequestId>(1 + rng() % (step + 1))); break;
            case 4: chair.revoke(static_cast<floor::RequestId>(1 + rng() % (step + 1))); break;
            case 5:
                chair.set_priority(static_cast<floor::RequestId>(1 + rng() % (step + 1)),
                                   rng() % 2 ? floor::Priority::BusinessClass : floor::Priority::Normal);
                break;
            case 6:
                chair.set_policy(floor_id, {static_cast<std::uint16_t>(1 + rng() % 3), rng() % 4 == 0});
                break;
            }
        } catch (const HttpError&) {
        }
        if (rng() % 10 != 0) continue;

        ++pauses;
        const auto last = g.conf->events().last_seq();
        ASSERT_TRUE(s->wait_for_id(last, 2000ms));
        client::QueueMirror mirror;
        for (const auto& e : s->events()) ASSERT_TRUE(mirror.apply(e)) << "gap before event " << e.id;
        for (floor::FloorId f : {1, 2}) {
            EXPECT_EQ(mirror.entries(f), chair.queue(f)) << "floor " << f << " at step " << step;
        }
    }
    EXPECT_GT(pauses, 10);
}

TEST(StaticFiles, UiDirectoryIsServed) {
    const auto dir = std::filesystem::temp_directory_path() / "umpire-ui-test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "index.html") << "<html>console</html>";
    gateway::HttpGatewayOptions opts;
    opts.ui_dir = dir;
    Gateway g({}, 1024, opts);
    auto c = g.raw();
    auto res = c.Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, "<html>console</html>");
    std::filesystem::remove_all(dir);
}
