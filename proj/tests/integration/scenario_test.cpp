#include "support/live_daemon.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace umpire;
using namespace umpire::client;
using floor::RequestState;

namespace {

ScenarioReport run_text(umpire::testing::LiveDaemon& live, const std::string& text) {
    ScenarioRunner runner(live.target());
    return runner.run(parse_scenario(text, "inline"));
}

}  // namespace

TEST(ScenarioParse, CommentsAndBlankLinesAreSkipped) {
    const auto sc = parse_scenario("# header\n\n  participant a connect user 5   # trailing\nexpect-exact floor 1 empty\n");
    ASSERT_EQ(sc.steps.size(), 2u);
    EXPECT_EQ(sc.steps[0].line, 3u);
    EXPECT_EQ(sc.steps[0].text, "participant a connect user 5");
    EXPECT_TRUE(sc.steps[1].exact);
}

TEST(ScenarioParse, ExpectationsAreCollected) {
    const auto sc = parse_scenario(
        "participant a connect user 5\n"
        "participant a request floor 2 expect pending pos 3\n"
        "web b join\n"
        "expect floor 2 a granted, b pending pos 1\n");
    ASSERT_EQ(sc.steps.size(), 4u);
    ASSERT_EQ(sc.steps[1].expect.size(), 1u);
    EXPECT_EQ(sc.steps[1].floor, 2);
    EXPECT_EQ(sc.steps[1].expect[0].state, RequestState::Pending);
    EXPECT_EQ(sc.steps[1].expect[0].position, 3);
    ASSERT_EQ(sc.steps[3].expect.size(), 2u);
    EXPECT_EQ(sc.steps[3].expect[0].actor, "a");
    EXPECT_FALSE(sc.steps[3].expect[0].position);
    EXPECT_EQ(sc.steps[3].expect[1].actor, "b");
    EXPECT_EQ(sc.steps[3].expect[1].position, 1);
}

TEST(ScenarioParse, ActorMustBeDeclaredFirst) {
    try {
        parse_scenario("participant a connect user 5\n\nchair accept bob expect granted\n");
        FAIL() << "parsed";
    } catch (const ScenarioParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("bob"), std::string::npos);
    }
    EXPECT_THROW(parse_scenario("expect floor 1 ghost pending\n"), ScenarioParseError);
    EXPECT_THROW(parse_scenario("badge u read\nbadge u tag 01 reader r\n"), ScenarioParseError);
}

TEST(ScenarioParse, MalformedLinesAreRejectedWithTheirLine) {
    const char* bad[] = {
        "dance floor 1",
        "participant a connect user 0",
        "participant a connect user 5\nparticipant a request floor 1 expect speaking",
        "participant a connect user 5\nparticipant a request floor x",
        "participant a connect user 5\nparticipant a request floor 1 now",
        "participant a connect user 5\nparticipant a connect user 6",
        "web w join\nparticipant w request floor 1",
        "chair policy floor 1 max 0",
        "chair policy floor 1 max 2 auto maybe",
        "participant chair connect user 5",
        "expect floor 1",
    };
    for (const auto* text : bad) {
        EXPECT_THROW(parse_scenario(text), ScenarioParseError) << text;
    }
}

TEST(ScenarioParse, LoadUsesFileStemAsName) {
    const auto sc = load_scenario(umpire::testing::kScenarioDir / "ietf-fig2-4.scn");
    EXPECT_EQ(sc.name, "ietf-fig2-4");
    EXPECT_FALSE(sc.steps.empty());
    EXPECT_THROW(load_scenario("/nonexistent/x.scn"), std::runtime_error);
}

TEST(ScenarioRun, EmptyScenarioPassesWithZeroSteps) {
    ScenarioRunner runner(ScenarioTarget{});
    const auto report = runner.run(parse_scenario("# nothing here\n\n", "empty"));
    EXPECT_TRUE(report.passed);
    EXPECT_TRUE(report.steps.empty());
    EXPECT_EQ(report.failure(), nullptr);
}

TEST(ScenarioRun, BundledScenarioEndsInTheExpectedStates) {
    umpire::testing::LiveDaemon live;
    ScenarioRunner runner(live.target());
    const auto report = runner.run(load_scenario(umpire::testing::kScenarioDir / "ietf-fig2-4.scn"));
    ASSERT_TRUE(report.passed) << report.text();
    EXPECT_LT(report.elapsed, std::chrono::seconds(10));

    ChairClient chair(live.endpoint(), umpire::testing::kChairToken);
    const auto queue = chair.queue(1);
    ASSERT_EQ(queue.size(), 3u);
    std::map<std::string, floor::FloorRequestRecord> by_name;
    for (const auto& r : queue) by_name[r.display_name] = r;
    EXPECT_EQ(by_name.at("User1").state, RequestState::Pending);
    EXPECT_EQ(by_name.at("User1").queue_position, 1);
    EXPECT_EQ(by_name.at("User2").state, RequestState::Granted);
    EXPECT_EQ(by_name.at("spromano").state, RequestState::Revoked);
    // Grants first, then the waiting queue, then recent terminal records.
    EXPECT_EQ(queue[0].display_name, "User2");
    EXPECT_EQ(queue[1].display_name, "User1");
    EXPECT_EQ(queue[2].display_name, "spromano");
}

TEST(ScenarioRun, WrongPositionStopsWithADiff) {
    umpire::testing::LiveDaemon live;
    const auto report = run_text(live,
                                 "participant a connect user 5\n"
                                 "participant b connect user 6\n"
                                 "participant a request floor 1 expect pending pos 1\n"
                                 "participant b request floor 1 expect pending pos 1\n"
                                 "participant a release floor 1\n");
    EXPECT_FALSE(report.passed);
    ASSERT_EQ(report.steps.size(), 4u);
    const auto* f = report.failure();
    ASSERT_NE(f, nullptr);
    EXPECT_EQ(f->line, 4u);
    EXPECT_NE(f->diff.find("expected: b PENDING pos 1"), std::string::npos) << f->diff;
    EXPECT_NE(f->diff.find("actual:   b PENDING pos 2"), std::string::npos) << f->diff;
    EXPECT_NE(report.text().find("FAIL inline"), std::string::npos);
}

TEST(ScenarioRun, ExactExpectationFlagsUnlistedEntries) {
    umpire::testing::LiveDaemon live;
    const auto report = run_text(live,
                                 "participant a connect user 5\n"
                                 "web w join\n"
                                 "participant a request floor 1\n"
                                 "web w request floor 1 expect pending pos 2\n"
                                 "expect-exact floor 1 a pending pos 1\n");
    ASSERT_FALSE(report.passed);
    EXPECT_NE(report.failure()->diff.find("unexpected: w PENDING pos 2"), std::string::npos)
        << report.failure()->diff;
}

TEST(ScenarioRun, ServerErrorsFailTheStep) {
    umpire::testing::LiveDaemon live;
    const auto report = run_text(live,
                                 "participant a connect user 5\n"
                                 "participant a request floor 1\n"
                                 "participant a request floor 1\n");
    ASSERT_FALSE(report.passed);
    EXPECT_EQ(report.failure()->line, 3u);
    EXPECT_NE(report.failure()->diff.find("error:"), std::string::npos);
}

TEST(ScenarioRun, WebAndBadgeActorsCoverTheWholeCycle) {
    umpire::testing::LiveDaemon live;
    const auto report = run_text(live,
                                 "badge User1 tag 4d004b05d6 reader mic-1\n"
                                 "badge User2 tag 4d004a5c07 reader mic-1\n"
                                 "web w join\n"
                                 "chair policy floor 1 max 1 auto on\n"
                                 "badge User1 read expect granted\n"
                                 "web w request floor 1 expect pending pos 1\n"
                                 "chair priority w business\n"
                                 "chair revoke-all floor 1\n"
                                 "expect-exact floor 1 User1 revoked, w pending pos 1\n"
                                 "chair accept w expect granted\n"
                                 "web w release floor 1 expect released\n"
                                 "chair policy floor 1 max 1 auto off\n"
                                 "badge User2 read expect pending pos 1\n"
                                 "chair deny User2 expect denied\n");
    EXPECT_TRUE(report.passed) << report.text();
}
