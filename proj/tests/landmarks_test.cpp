#include "forge/landmarks.hpp"
#include "forge/pddl_text.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace forge {
namespace {

using test::blocks;

TEST(FactLandmarks, TwoBlocks) {
    AtomSet lms = extract_fact_landmarks(blocks(), test::two_block_problem());
    EXPECT_TRUE(lms.contains(Atom{"on", {"a", "b"}}));
    EXPECT_TRUE(lms.contains(Atom{"holding", {"a"}}));
    // Both really occur on the state sequence of every plan.
    for (const auto& plan : test::brute_force_plans(blocks(), test::two_block_problem(), 6)) {
        AtomSet seen = test::two_block_problem().init;
        AtomSet s = seen;
        for (const auto& c : plan) {
            s = test::naive_apply(s, test::naive_step(blocks(), c));
            seen.insert(s.begin(), s.end());
        }
        for (const auto& f : lms) EXPECT_TRUE(seen.contains(f)) << f << " missed by\n" << print_plan(plan);
    }
}

TEST(FactLandmarks, GoalInInit) {
    Problem p = test::two_block_problem();
    p.goal = {{"clear", {"a"}}, {"ontable", {"b"}}};
    EXPECT_EQ(extract_fact_landmarks(blocks(), p), p.goal);
    EXPECT_TRUE(extract_action_landmarks(blocks(), p).empty());
}

TEST(FactLandmarks, MixedGoal) {
    Problem p = test::two_block_problem();
    p.goal = {{"clear", {"a"}}, {"holding", {"b"}}};
    AtomSet lms = extract_fact_landmarks(blocks(), p);
    EXPECT_TRUE(lms.contains(Atom{"clear", {"a"}}));
    EXPECT_TRUE(lms.contains(Atom{"holding", {"b"}}));
    auto action_lms = extract_action_landmarks(blocks(), p);
    ASSERT_EQ(action_lms.size(), 1u);
    EXPECT_EQ(action_lms[0].origin, (Atom{"holding", {"b"}}));
}

TEST(FactLandmarks, UnsolvableThrows) {
    Problem p = test::two_block_problem();
    p.goal = {{"on", {"a", "b"}}, {"on", {"b", "a"}}};
    try {
        extract_fact_landmarks(blocks(), p);
        FAIL();
    } catch (const LandmarkError& e) {
        EXPECT_NE(std::string(e.what()).find("no landmarks for unsolvable problem"), std::string::npos);
    }
}

TEST(Achievers, Examples) {
    Problem p = test::two_block_problem();
    auto lms = achiever_landmarks(blocks(), p, {{"on", {"a", "b"}}, {"holding", {"a"}}, {"handempty", {}}});
    ASSERT_EQ(lms.size(), 2u);
    std::map<Atom, std::vector<ActionCall>> by_origin;
    for (const auto& lm : lms) by_origin[*lm.origin] = lm.actions;
    EXPECT_EQ(by_origin.at({"on", {"a", "b"}}), (std::vector<ActionCall>{{"stack", {"a", "b"}}}));
    EXPECT_EQ(by_origin.at({"holding", {"a"}}),
              (std::vector<ActionCall>{{"pick-up", {"a"}}, {"unstack", {"a", "b"}}}));
}

TEST(Hit, Examples) {
    DisjunctiveActionLandmark stack_ab{{{"stack", {"a", "b"}}}, std::nullopt};
    EXPECT_TRUE(landmark_hit(stack_ab, {parse_plan("(pick-up a)\n(stack a b)")}));
    EXPECT_FALSE(landmark_hit(stack_ab, {}));
    DisjunctiveActionLandmark either{{{"stack", {"a", "b"}}, {"stack", {"b", "a"}}}, std::nullopt};
    EXPECT_TRUE(landmark_hit(either, {parse_plan("(pick-up b)\n(stack b a)")}));
    EXPECT_FALSE(landmark_hit(stack_ab, {parse_plan("(pick-up b)\n(stack b a)")}));
}

TEST(Files, ReadWrite) {
    auto one = read_landmarks("(stack a b)");
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].actions.size(), 1u);
    EXPECT_FALSE(one[0].origin);

    auto two = read_landmarks("(pick-up a) | (unstack a b) ; origin: (holding a)\n");
    ASSERT_EQ(two.size(), 1u);
    EXPECT_EQ(two[0].actions.size(), 2u);
    EXPECT_EQ(two[0].origin, (Atom{"holding", {"a"}}));

    try {
        read_landmarks("(stack a b)\nstack a b\n");
        FAIL();
    } catch (const SourceError& e) {
        EXPECT_EQ(e.line, 2);
    }

    for (const auto& name : test::fixture_domains()) {
        for (const auto& f : list_files(test::source_path("dataset/" + name + "/feedback/landmarks"), ".lmk")) {
            std::string text = read_text(f);
            EXPECT_EQ(write_landmarks(read_landmarks(text)), text) << f;
        }
    }
}

// Removing all actions of a landmark must make the goal unreachable; the
// check runs over the whole reachable state space, so it covers every plan.
TEST(Soundness, EveryLandmarkIsUnavoidable) {
    for (const auto& fx : test::fixture_pool()) {
        auto lms = extract_action_landmarks(fx.domain, fx.problem);
        EXPECT_FALSE(lms.empty()) << fx.id;
        for (const auto& lm : lms) {
            std::set<ActionCall> forbidden(lm.actions.begin(), lm.actions.end());
            EXPECT_FALSE(test::naive_shortest(fx.domain, fx.problem, forbidden))
                << fx.domain_name << "/" << fx.id << " avoids " << lm.joined();
        }
    }
}

}  // namespace
}  // namespace forge
