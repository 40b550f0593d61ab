#include "forge/construction.hpp"
#include "forge/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <chrono>

namespace forge {
namespace {

using test::blocks;

DomainDescription blocks_description() {
    return DomainDescription::parse(read_text(test::source_path("dataset/blocks/description.json")));
}

std::vector<std::string> blocks_script() {
    return parse_script(read_text(test::source_path("tests/fixtures/blocks_construction.script")));
}

const char* kOneAction = R"({
  "overall": {"simple": "A light can be switched."},
  "predicates": {"lit": {"simple": "the light is on"}},
  "actions": {"switch-on": {"simple": "turn the light on", "detailed": "turn the light on if it is off"}}
})";

const char* kSwitchReply = R"(```pddl
(:action switch-on
  :parameters ()
  :precondition (not-lit)
  :effect (and (lit) (not (not-lit))))
```
```predicates
(lit) ; the light is on
(not-lit) ; the light is off
```
```types
```
)";

TEST(Description, ParseBlocks) {
    DomainDescription d = blocks_description();
    EXPECT_EQ(d.action_names(), (std::vector<std::string>{"pick-up", "put-down", "stack", "unstack"}));
    EXPECT_TRUE(d.has_predicate("handempty"));
    EXPECT_FALSE(d.has_predicate("above"));
    EXPECT_FALSE(text_for(d.overall, DescriptionClass::Simple).empty());
    EXPECT_NE(text_for(d.overall, DescriptionClass::Simple), text_for(d.overall, DescriptionClass::Detailed));
}

TEST(Description, FallsBackToOtherClass) {
    DomainDescription d = DomainDescription::parse(kOneAction);
    EXPECT_EQ(text_for(d.overall, DescriptionClass::Detailed), "A light can be switched.");
    EXPECT_EQ(parse_description_class("detailed"), DescriptionClass::Detailed);
    EXPECT_THROW(parse_description_class("verbose"), std::invalid_argument);
}

TEST(Description, Malformed) {
    EXPECT_THROW(DomainDescription::parse("[]"), std::invalid_argument);
    EXPECT_THROW(DomainDescription::parse(R"({"overall": {"simple": "x"}})"), std::invalid_argument);
    EXPECT_THROW(DomainDescription::parse(R"({"overall": {"simple": "x"}, "actions": {}})"), std::invalid_argument);
    EXPECT_THROW(DomainDescription::parse(R"({"overall": {"fancy": "x"}, "actions": {"a": {"simple": "y"}}})"),
                 std::invalid_argument);
    EXPECT_THROW(DomainDescription::parse(R"({"overall": {"simple": "x"}, "actions": {"a": {"simple": "y"}}, "x": 1})"),
                 std::invalid_argument);
}

TEST(Prompt, FirstAndLaterActions) {
    DomainDescription d = blocks_description();
    std::string first = render_action_prompt(d, DescriptionClass::Simple, 0, {});
    EXPECT_NE(first.find("Domain description: "), std::string::npos);
    EXPECT_NE(first.find("Action name: pick-up\n"), std::string::npos);
    EXPECT_NE(first.find("- handempty: "), std::string::npos);
    EXPECT_EQ(first.find("defined so far"), std::string::npos);

    Vocabulary v;
    v.types.push_back({"block", "object", "a block"});
    v.predicates.push_back({{"clear", {{"?x", "block"}}}, "nothing on ?x"});
    std::string second = render_action_prompt(d, DescriptionClass::Detailed, 1, v);
    EXPECT_EQ(second.find("Domain description: "), std::string::npos);
    EXPECT_NE(second.find("Action name: put-down\n"), std::string::npos);
    EXPECT_NE(second.find("Types and predicates defined so far:"), std::string::npos);
    EXPECT_NE(second.find("(clear ?x - block) ; nothing on ?x"), std::string::npos);
    EXPECT_NE(second.find("block ; a block"), std::string::npos);
    EXPECT_NE(second.find(text_for(d.actions[1].second, DescriptionClass::Detailed)), std::string::npos);
}

TEST(Reply, ParseBlocks) {
    ActionReply r = parse_action_reply(blocks_script()[0]);
    EXPECT_EQ(r.action.name, "pick-up");
    EXPECT_EQ(r.declared.predicates.size(), 4u);
    ASSERT_EQ(r.declared.types.size(), 1u);
    EXPECT_EQ(r.declared.types[0].name, "block");
    EXPECT_EQ(r.declared.types[0].gloss, "a block");
    EXPECT_EQ(r.declared.predicate("holding")->gloss, "the hand holds ?x");
}

TEST(Reply, Malformed) {
    EXPECT_THROW(parse_action_reply("no blocks at all"), SourceError);
    EXPECT_THROW(parse_action_reply("```pddl\n(:action a :parameters () :effect (p))\n```\n```predicates\n(p ; x\n```"),
                 SourceError);
    EXPECT_THROW(parse_action_reply("```pddl\n(:action a :parameters () :effect (p))\n```\n```types\ntruck -\n```"),
                 SourceError);
    EXPECT_THROW(parse_action_reply("```pddl\n(:action a :parameters () :effect (p))\n```\n```types\n(truck)\n```"),
                 SourceError);
}

TEST(Merge, UndeclaredPredicateIsRepairable) {
    ActionReply r = parse_action_reply("```pddl\n(:action a :parameters () :effect (p))\n```\n");
    EXPECT_THROW(merge_reply({}, r), SourceError);
}

TEST(Merge, ArityConflict) {
    auto script = blocks_script();
    Vocabulary v = merge_reply(merge_reply({}, parse_action_reply(script[0])), parse_action_reply(script[2]));
    ActionReply bad = parse_action_reply(
        "```pddl\n(:action lift :parameters (?x ?y ?z) :precondition (on ?x ?y ?z) :effect (not (on ?x ?y ?z)))\n```\n"
        "```predicates\n(on ?x ?y ?z) ; three-way\n```\n");
    try {
        merge_reply(v, bad);
        FAIL();
    } catch (const SignatureConflict& e) {
        EXPECT_NE(std::string(e.what()).find("arity conflict"), std::string::npos);
    }
}

TEST(Build, ScriptedBlocksMatchesGroundTruth) {
    DomainDescription d = blocks_description();
    ScriptedBackend b(blocks_script());
    auto start = std::chrono::steady_clock::now();
    ConstructionResult r = build_initial_domain(d, DescriptionClass::Simple, b);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ASSERT_TRUE(r.ok) << r.failure;
    EXPECT_TRUE(structurally_equal(r.domain, blocks()));
    EXPECT_TRUE(structurally_equal(parse_domain(print_domain(r.domain)), blocks()));
    EXPECT_TRUE(action_name_contract(d, r));
    EXPECT_TRUE(check_domain_wellformed(r.domain).empty());
    EXPECT_EQ(r.llm_calls, 4u);
    for (const auto& n : d.action_names()) EXPECT_EQ(r.per_action_attempts.at(n), 1u);
    EXPECT_EQ(r.predicate_glossary.at("on"), "?x is directly on ?y");
    EXPECT_EQ(r.type_glossary.at("block"), "a block");
    EXPECT_TRUE(r.transcript.well_formed());
    EXPECT_EQ(r.transcript.count(Role::Assistant), 4u + PromptSet::builtin().examples.size());
    EXPECT_LT(seconds, 1.0);
}

TEST(Build, OneActionOneAttempt) {
    DomainDescription d = DomainDescription::parse(kOneAction);
    ScriptedBackend b({kSwitchReply});
    ConstructionResult r = build_initial_domain(d, DescriptionClass::Simple, b);
    ASSERT_TRUE(r.ok) << r.failure;
    EXPECT_EQ(r.domain.actions.size(), 1u);
    EXPECT_EQ(r.per_action_attempts.at("switch-on"), 1u);
    EXPECT_TRUE(check_domain_wellformed(r.domain).empty());
}

TEST(Build, RepairsThenSucceeds) {
    DomainDescription d = DomainDescription::parse(kOneAction);
    ScriptedBackend b({"I think it works like this.", kSwitchReply});
    ConstructionResult r = build_initial_domain(d, DescriptionClass::Simple, b);
    ASSERT_TRUE(r.ok) << r.failure;
    EXPECT_EQ(r.per_action_attempts.at("switch-on"), 2u);
    EXPECT_EQ(r.llm_calls, 2u);
}

TEST(Build, ExhaustedRetriesKeepTranscript) {
    DomainDescription d = DomainDescription::parse(kOneAction);
    ScriptedBackend b(std::vector<std::string>(5, "no"));
    ConstructionResult r = build_initial_domain(d, DescriptionClass::Simple, b);
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.failure.find("switch-on"), std::string::npos);
    EXPECT_EQ(r.llm_calls, 5u);
    EXPECT_EQ(r.transcript.count(Role::Assistant), 5u + PromptSet::builtin().examples.size());
}

TEST(Build, ArityConflictFails) {
    DomainDescription d = blocks_description();
    auto script = blocks_script();
    script[3] =
        "```pddl\n(:action unstack :parameters (?x - block ?y - block) :precondition (on ?x ?y ?x) "
        ":effect (holding ?x))\n```\n```predicates\n```\n```types\n```\n";
    ScriptedBackend b(script);
    ConstructionResult r = build_initial_domain(d, DescriptionClass::Simple, b);
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.failure.find("arity conflict"), std::string::npos);
}

TEST(Build, RenamesActionToDescriptionKey) {
    DomainDescription d = DomainDescription::parse(kOneAction);
    std::string reply = kSwitchReply;
    reply.replace(reply.find("switch-on"), 9, "turn-on");
    ScriptedBackend b({reply});
    ConstructionResult r = build_initial_domain(d, DescriptionClass::Simple, b);
    ASSERT_TRUE(r.ok);
    EXPECT_NE(r.domain.action("switch-on"), nullptr);
}

TEST(Contract, MissingOrExtraAction) {
    DomainDescription d = blocks_description();
    ConstructionResult r;
    r.ok = true;
    r.domain = blocks();
    EXPECT_TRUE(action_name_contract(d, r));
    ConstructionResult missing = r;
    std::erase_if(missing.domain.actions, [](const ActionSchema& a) { return a.name == "put-down"; });
    EXPECT_FALSE(action_name_contract(d, missing));
    ConstructionResult extra = r;
    extra.domain.actions.push_back(extra.domain.actions.front());
    extra.domain.actions.back().name = "juggle";
    EXPECT_FALSE(action_name_contract(d, extra));
}

TEST(Prompts, BuiltinAndLoaded) {
    PromptSet builtin = PromptSet::builtin();
    EXPECT_FALSE(builtin.system.empty());
    EXPECT_EQ(builtin.examples.size(), 2u);
    PromptSet loaded = PromptSet::load(test::source_path("assets/prompts"));
    EXPECT_EQ(loaded.system, builtin.system);
    EXPECT_EQ(loaded.examples, builtin.examples);
    History h = builtin.initial_history();
    EXPECT_EQ(h.size(), 5u);
    EXPECT_EQ(h.messages()[0].role, Role::System);
    // The context examples parse as replies.
    for (const auto& [user, assistant] : builtin.examples) EXPECT_NO_THROW(parse_action_reply(assistant));
}

}  // namespace
}  // namespace forge
