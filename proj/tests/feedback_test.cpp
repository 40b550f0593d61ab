#include "forge/experiment.hpp"
#include "forge/feedback.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace forge {
namespace {

using test::blocks;

FeedbackAssets blocks_feedback() { return load_feedback_assets(test::source_path("dataset/blocks")); }

PlannerConfig landmark_planner() {
    PlannerConfig c;
    c.k = 2;
    return c;
}

Domain stack_without_on() {
    return test::mutate(blocks(), "stack", [](ActionSchema& a) { a.add.erase({"on", {"?x", "?y"}}); });
}

TEST(Template, SinglePass) {
    EXPECT_EQ(fill_template("a {x} b {y} c", {{"x", "{y}"}, {"y", "2"}}), "a {y} b 2 c");
    EXPECT_EQ(fill_template("{unknown} {x}", {{"x", "1"}}), "{unknown} 1");
    EXPECT_EQ(fill_template("no fields", {}), "no fields");
}

TEST(Template, BuiltinMatchesFiles) {
    FeedbackTemplates b = FeedbackTemplates::builtin();
    FeedbackTemplates f = FeedbackTemplates::load(test::source_path("assets/templates"));
    EXPECT_EQ(b.plan, f.plan);
    EXPECT_EQ(b.landmark, f.landmark);
    EXPECT_TRUE(b.plan.starts_with(kFeedbackOpening));
    EXPECT_TRUE(b.landmark.starts_with(kFeedbackOpening));
}

TEST(PlanPool, GroundTruthIsEmpty) {
    EXPECT_TRUE(plan_feedback_pool(blocks(), blocks_feedback()).empty());
}

TEST(PlanPool, StackMutantGoalFailures) {
    FeedbackAssets assets = blocks_feedback();
    auto pool = plan_feedback_pool(stack_without_on(), assets);
    std::vector<const FeedbackMessage*> p01;
    for (const auto& m : pool) {
        EXPECT_EQ(m.kind, FeedbackKind::Plan);
        if (m.problem_id == "p01") p01.push_back(&m);
    }
    ASSERT_EQ(p01.size(), 2u);
    for (const auto* m : p01) {
        EXPECT_EQ(m->verdict->kind, VerdictKind::GoalFailure);
        EXPECT_NE(m->rendered.find("Goal not satisfied"), std::string::npos);
    }
    EXPECT_EQ(p01[0]->source_index, 0u);
    EXPECT_EQ(p01[1]->source_index, 1u);
    for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(pool[i].stable_index, i);
}

TEST(PlanPool, RebindFailureReported) {
    Domain gen = blocks();
    std::erase_if(gen.predicates, [](const PredicateDecl& d) { return d.name == "handempty"; });
    for (auto& a : gen.actions) {
        std::erase_if(a.pre, [](const Atom& x) { return x.predicate == "handempty"; });
        std::erase_if(a.add, [](const Atom& x) { return x.predicate == "handempty"; });
        std::erase_if(a.del, [](const Atom& x) { return x.predicate == "handempty"; });
    }
    FeedbackAssets assets = blocks_feedback();
    auto pool = plan_feedback_pool(gen, assets);
    std::size_t plans = 0;
    for (const auto& [id, ps] : assets.plans) plans += ps.size();
    EXPECT_EQ(pool.size(), plans);
    EXPECT_NE(pool.front().rendered.find("missing predicate handempty/0"), std::string::npos);
}

TEST(PlanPool, PureFunctionOfInputs) {
    auto a = plan_feedback_pool(stack_without_on(), blocks_feedback());
    auto b = plan_feedback_pool(stack_without_on(), blocks_feedback());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].rendered, b[i].rendered);
}

TEST(LandmarkPool, GroundTruthIsEmpty) {
    for (const auto& name : test::fixture_domains()) {
        Domain d = test::load_domain("dataset/" + name + "/domain.pddl");
        auto assets = load_feedback_assets(test::source_path("dataset/" + name));
        EXPECT_TRUE(landmark_feedback_pool(d, assets, landmark_planner()).empty()) << name;
    }
}

TEST(LandmarkPool, PlansAvoidingStack) {
    Domain gen = blocks();
    gen.action("stack")->name = "place";
    auto pool = landmark_feedback_pool(gen, blocks_feedback(), landmark_planner());
    bool found = false;
    for (const auto& m : pool) {
        EXPECT_EQ(m.kind, FeedbackKind::Landmark);
        if (m.problem_id == "p01" && m.landmark->actions == std::vector<ActionCall>{{"stack", {"a", "b"}}}) {
            found = true;
            EXPECT_FALSE(m.no_plan);
            EXPECT_EQ(m.plan_text, "(pick-up a)\n(place a b)");
            EXPECT_NE(m.rendered.find("```\n(stack a b) \n```"), std::string::npos);
        }
    }
    EXPECT_TRUE(found);
}

TEST(LandmarkPool, UnsolvableGivesMarker) {
    FeedbackAssets assets = blocks_feedback();
    auto pool = landmark_feedback_pool(stack_without_on(), assets, landmark_planner());
    std::size_t p01 = 0;
    for (const auto& m : pool) {
        if (m.problem_id != "p01") continue;
        ++p01;
        EXPECT_TRUE(m.no_plan);
        EXPECT_NE(m.rendered.find(std::string(kNoPlanMarker)), std::string::npos);
    }
    EXPECT_EQ(p01, assets.landmarks.at("p01").size());
}

TEST(Combined, OrderAndIndices) {
    Domain gen = stack_without_on();
    auto plans = plan_feedback_pool(gen, blocks_feedback());
    auto lms = landmark_feedback_pool(gen, blocks_feedback(), landmark_planner());
    auto all = combined_pool(plans, lms);
    ASSERT_EQ(all.size(), plans.size() + lms.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(all[i].stable_index, i);
        EXPECT_EQ(all[i].kind, i < plans.size() ? FeedbackKind::Plan : FeedbackKind::Landmark);
    }
    EXPECT_TRUE(combined_pool({}, {}).empty());
    auto two_three = combined_pool({plans[0], plans[1]}, {lms[0], lms[1], lms[2]});
    EXPECT_EQ(two_three.size(), 5u);
    EXPECT_EQ(two_three[1].kind, FeedbackKind::Plan);
    EXPECT_EQ(two_three[2].kind, FeedbackKind::Landmark);
}

TEST(Select, Strategies) {
    auto pool = plan_feedback_pool(stack_without_on(), blocks_feedback());
    ASSERT_GE(pool.size(), 5u);
    std::mt19937_64 rng(1);
    std::vector<FeedbackMessage> one(pool.begin(), pool.begin() + 1);
    auto got = select_feedback(one, Selection::RandomSingle, 1, rng);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].rendered, one[0].rendered);

    std::vector<FeedbackMessage> five(pool.begin(), pool.begin() + 5);
    auto first = select_feedback(five, Selection::FirstN, 10, rng);
    ASSERT_EQ(first.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(first[i].stable_index, i);

    std::vector<FeedbackMessage> three(pool.begin(), pool.begin() + 3);
    std::mt19937_64 r1(77), r2(77);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(select_feedback(three, Selection::RandomSingle, 1, r1)[0].stable_index,
                  select_feedback(three, Selection::RandomSingle, 1, r2)[0].stable_index);
    }
    try {
        select_feedback({}, Selection::RandomSingle, 1, rng);
        FAIL();
    } catch (const NoFeedback& e) {
        EXPECT_STREQ(e.what(), "no feedback available");
    }
}

TEST(Select, RandomSingleIsRoughlyUniform) {
    auto pool = plan_feedback_pool(stack_without_on(), blocks_feedback());
    std::vector<FeedbackMessage> four(pool.begin(), pool.begin() + 4);
    std::mt19937_64 rng(3);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 4000; ++i) ++counts[select_feedback(four, Selection::RandomSingle, 1, rng)[0].stable_index];
    for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

}  // namespace
}  // namespace forge
