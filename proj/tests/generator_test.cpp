#include "forge/experiment.hpp"
#include "forge/feedback.hpp"
#include "forge/generator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

namespace forge {
namespace {

using test::blocks;

History prompt(const std::string& user) {
    History h;
    h.append(Role::System, "system");
    h.append(Role::User, user);
    return h;
}

TEST(HistoryTest, WellFormed) {
    History h = prompt("hello");
    EXPECT_TRUE(h.well_formed());
    h.append(Role::Assistant, "reply");
    EXPECT_TRUE(h.well_formed());
    h.append(Role::Assistant, "again");
    EXPECT_FALSE(h.well_formed());

    History no_system;
    no_system.append(Role::User, "x");
    EXPECT_FALSE(no_system.well_formed());

    History empty_content = prompt("");
    EXPECT_FALSE(empty_content.well_formed());
}

TEST(HistoryTest, LastAndCount) {
    History h = prompt("one");
    h.append(Role::Assistant, "a");
    h.append(Role::User, "two");
    EXPECT_EQ(h.last(Role::User)->content, "two");
    EXPECT_EQ(h.count(Role::User), 2u);
    EXPECT_EQ(h.last(Role::Assistant)->content, "a");
    EXPECT_EQ(parse_role(to_string(Role::Assistant)), Role::Assistant);
    EXPECT_NE(h.dump().find("### user\ntwo\n"), std::string::npos);
}

TEST(Scripted, InOrderThenExhausted) {
    auto responses = parse_script("one\n---\ntwo\n---\nthree\n");
    ASSERT_EQ(responses.size(), 3u);
    ScriptedBackend b(responses);
    History h = prompt("go");
    EXPECT_EQ(b.complete(h).content, "one\n");
    EXPECT_EQ(b.complete(h).content, "two\n");
    EXPECT_EQ(b.complete(h).content, "three\n");
    try {
        b.complete(h);
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("script exhausted"), std::string::npos);
    }
    EXPECT_EQ(b.calls(), 3u);
}

TEST(Scripted, NeedsUserTurn) {
    ScriptedBackend b({"x"});
    History h;
    h.append(Role::System, "s");
    EXPECT_THROW(b.complete(h), BackendError);
}

// ---------------------------------------------------------------------------
// Defects

TEST(Defects, ParseAndDescribe) {
    auto ds = parse_defects(
        "; comment\nremove-add stack (on ?x ?y)\n\nremove-precondition pick-up (clear ?x)\n"
        "add-precondition put-down (clear ?x)\nremove-del unstack (handempty)\n"
        "rename-predicate-in-action stack on on-top\n");
    ASSERT_EQ(ds.size(), 5u);
    EXPECT_EQ(ds[0].kind, DefectEdit::Kind::RemoveAdd);
    EXPECT_EQ(ds[0].atom, (Atom{"on", {"?x", "?y"}}));
    EXPECT_EQ(ds[4].kind, DefectEdit::Kind::RenamePredicateInAction);
    EXPECT_EQ(ds[4].from, "on");
    EXPECT_EQ(ds[4].to, "on-top");
    for (const auto& d : ds) EXPECT_EQ(parse_defects(d.str()), std::vector<DefectEdit>{d});
    try {
        parse_defects("remove-add stack (on ?x ?y)\nexplode stack\n");
        FAIL();
    } catch (const SourceError& e) {
        EXPECT_EQ(e.line, 2);
    }
}

TEST(Defects, ApplyPresentRevert) {
    for (const auto& d : parse_defects("remove-add stack (on ?x ?y)\nremove-precondition pick-up (clear ?x)\n"
                                       "add-precondition put-down (clear ?x)\nremove-del unstack (handempty)\n"
                                       "rename-predicate-in-action stack on on-top\n")) {
        Domain broken = apply_defect(blocks(), d);
        EXPECT_TRUE(check_domain_wellformed(broken).empty()) << d.str();
        EXPECT_TRUE(defect_present(broken, d)) << d.str();
        EXPECT_FALSE(defect_present(blocks(), d)) << d.str();
        Domain fixed = revert_defect(broken, d, blocks());
        EXPECT_TRUE(structurally_equal(fixed, blocks())) << d.str();
    }
    EXPECT_THROW(apply_defect(blocks(), parse_defects("remove-add fly (on ?x ?y)")[0]), ConfigError);
    EXPECT_THROW(apply_defect(blocks(), parse_defects("remove-add stack (holding ?x)")[0]), ConfigError);
}

TEST(Defects, FeedbackTouches) {
    DefectEdit d = parse_defects("remove-add stack (on ?x ?y)")[0];
    EXPECT_TRUE(feedback_touches("problem\n```\n(on a b)\n```\nplan uses (stack a b)", d));
    EXPECT_TRUE(feedback_touches("```\n(x)\n```\nGoal not satisfied: (on a b)", d));
    EXPECT_FALSE(feedback_touches("```\n(stack a b) (on a b)\n```\n(pick-up a) failed", d));
}

// ---------------------------------------------------------------------------
// Mutation backend

FeedbackAssets blocks_feedback() { return load_feedback_assets(test::source_path("dataset/blocks")); }

TEST(Mutation, ConstructionRepliesWithDefectiveAction) {
    auto defects = parse_defects("remove-add stack (on ?x ?y)");
    MutationBackend b(blocks(), defects, 1.0, 1);
    Message m = b.complete(prompt("Action name: stack\nAction description: put it on top"));
    std::string block = extract_pddl_block(m.content);
    ActionSchema a = parse_action(block);
    EXPECT_EQ(a.name, "stack");
    EXPECT_FALSE(a.add.contains(Atom{"on", {"?x", "?y"}}));
}

TEST(Mutation, RepairsDefectCitedByFeedback) {
    auto defects = parse_defects("remove-add stack (on ?x ?y)");
    MutationBackend b(blocks(), defects, 1.0, 1);
    auto pool = plan_feedback_pool(b.defective(), blocks_feedback());
    ASSERT_FALSE(pool.empty());
    const FeedbackMessage* goal_failure = nullptr;
    for (const auto& m : pool) {
        if (m.verdict->kind == VerdictKind::GoalFailure &&
            m.verdict->missing.contains(Atom{"on", {"a", "b"}})) {
            goal_failure = &m;
            break;
        }
    }
    ASSERT_NE(goal_failure, nullptr);
    History h = prompt("construct");
    h.append(Role::Assistant, "```pddl\n" + print_domain(b.defective()) + "```");
    h.append(Role::User, goal_failure->rendered);
    Domain revised = parse_domain(extract_pddl_block(b.complete(h).content));
    EXPECT_TRUE(revised.action("stack")->add.contains(Atom{"on", {"?x", "?y"}}));
    EXPECT_TRUE(structurally_equal(revised, blocks()));
}

TEST(Mutation, ZeroProbabilityEchoesPreviousDomain) {
    auto defects = parse_defects("remove-add stack (on ?x ?y)");
    MutationBackend b(blocks(), defects, 0.0, 1);
    auto pool = plan_feedback_pool(b.defective(), blocks_feedback());
    History h = prompt("construct");
    std::string previous = "```pddl\n" + print_domain(b.defective()) + "```\n";
    h.append(Role::Assistant, previous);
    h.append(Role::User, pool.front().rendered);
    EXPECT_EQ(b.complete(h).content, previous);
}

TEST(Mutation, UntouchedDefectStays) {
    auto defects = parse_defects("remove-add stack (on ?x ?y)");
    MutationBackend b(blocks(), defects, 1.0, 1);
    History h = prompt(std::string(kFeedbackOpening) + " the problem\n```\n(x)\n```\nplease look at (pick-up a)");
    Domain revised = parse_domain(extract_pddl_block(b.complete(h).content));
    EXPECT_TRUE(structurally_equal(revised, b.defective()));
}

TEST(Mutation, RepliesDependOnlyOnConversation) {
    auto defects = parse_defects("remove-add stack (on ?x ?y)\nremove-add put-down (ontable ?x)");
    MutationBackend a(blocks(), defects, 0.5, 9);
    MutationBackend b(blocks(), defects, 0.5, 9);
    auto pool = plan_feedback_pool(a.defective(), blocks_feedback());
    std::vector<History> hs;
    for (const auto& m : pool) {
        History h = prompt("construct");
        h.append(Role::Assistant, "```pddl\n" + print_domain(a.defective()) + "```");
        h.append(Role::User, m.rendered);
        hs.push_back(h);
    }
    std::vector<std::string> forward, backward;
    for (const auto& h : hs) forward.push_back(a.complete(h).content);
    for (auto it = hs.rbegin(); it != hs.rend(); ++it) backward.push_back(b.complete(*it).content);
    std::reverse(backward.begin(), backward.end());
    EXPECT_EQ(forward, backward);
}

TEST(Mutation, RejectsBadProbability) {
    EXPECT_THROW(MutationBackend(blocks(), {}, 1.5, 0), ConfigError);
}

// ---------------------------------------------------------------------------
// Syntax repair

Domain parse_reply(const std::string& text) { return parse_domain(extract_pddl_block(text)); }

TEST(Repair, GarbageThenValid) {
    std::string valid = "```pddl\n" + print_domain(blocks()) + "```";
    ScriptedBackend b({"no idea", valid});
    History h = prompt("go");
    auto out = syntax_repair_loop(b, h, parse_reply, 5);
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(out.calls, 2u);
    EXPECT_EQ(out.errors.size(), 1u);
    // prompt, garbage, repair request, valid reply
    ASSERT_EQ(h.size(), 5u);
    EXPECT_EQ(h.messages()[3].role, Role::User);
    EXPECT_EQ(h.messages()[3].content, render_syntax_repair(out.errors[0]));
    EXPECT_NE(h.messages()[3].content.find("no PDDL block in response"), std::string::npos);
}

TEST(Repair, GivesUpAfterLimit) {
    ScriptedBackend b(std::vector<std::string>(5, "garbage"));
    History h = prompt("go");
    auto out = syntax_repair_loop(b, h, parse_reply, 5);
    EXPECT_FALSE(out.ok());
    EXPECT_EQ(out.errors.size(), 5u);
    EXPECT_EQ(out.calls, 5u);
    EXPECT_EQ(h.count(Role::Assistant), 5u);
    EXPECT_EQ(h.count(Role::User), 5u);  // prompt plus four repair requests
}

TEST(Repair, FirstReplyValid) {
    ScriptedBackend b({"```pddl\n" + print_domain(blocks()) + "```"});
    History h = prompt("go");
    auto out = syntax_repair_loop(b, h, parse_reply, 5);
    EXPECT_TRUE(out.ok());
    EXPECT_EQ(h.size(), 3u);
    EXPECT_THROW(syntax_repair_loop(b, h, parse_reply, 0), std::invalid_argument);
}

TEST(Repair, MessageFromAsset) {
    SourceError e(3, 7, "unexpected ')'");
    EXPECT_EQ(render_syntax_repair(e),
              "The previous answer could not be parsed:\nline 3, column 7: unexpected ')'\n"
              "Please fix the problem and answer again with the complete output in the required format.");
}

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, RequiredFields) {
    BackendConfig c;
    c.kind = BackendConfig::Kind::Remote;
    EXPECT_THROW(c.check(), ConfigError);
    c.remote.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    c.remote.model_name = "m";
    EXPECT_NO_THROW(c.check());
    c.remote.api_key_env = "FORGE_TEST_SURELY_UNSET_KEY";
    ::unsetenv("FORGE_TEST_SURELY_UNSET_KEY");
    EXPECT_THROW(c.check(), ConfigError);

    c.kind = BackendConfig::Kind::Scripted;
    EXPECT_THROW(c.check(), ConfigError);
    c.script_path = "x";
    EXPECT_NO_THROW(c.check());

    c.kind = BackendConfig::Kind::Mutation;
    EXPECT_THROW(c.check(), ConfigError);
    EXPECT_THROW(parse_backend_kind("oracle"), ConfigError);
    EXPECT_EQ(parse_backend_kind("mutation"), BackendConfig::Kind::Mutation);
}

TEST(Config, MakeBackends) {
    BackendConfig c;
    c.kind = BackendConfig::Kind::Scripted;
    c.script_path = test::source_path("tests/fixtures/blocks_construction.script").string();
    auto scripted = make_backend(c, 0);
    EXPECT_NE(scripted->complete(prompt("x")).content.find("(:action pick-up"), std::string::npos);

    c.kind = BackendConfig::Kind::Mutation;
    c.defect_base_path = test::source_path("dataset/blocks/domain.pddl").string();
    c.defect_spec_path = test::source_path("tests/fixtures/single_defect.txt").string();
    auto mutation = make_backend(c, 0);
    auto* m = dynamic_cast<MutationBackend*>(mutation.get());
    ASSERT_NE(m, nullptr);
    EXPECT_EQ(m->defects().size(), 1u);
}

// ---------------------------------------------------------------------------
// Remote backend against a local server

class LocalServer {
public:
    LocalServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Server& server() { return server_; }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string completion(const std::string& content) {
    nlohmann::json j;
    j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}});
    return j.dump();
}

RemoteConfig local_config(const LocalServer& s) {
    RemoteConfig c;
    c.endpoint = s.endpoint();
    c.model_name = "test-model";
    c.temperature = 0.25;
    c.seed = 42;
    c.initial_backoff_seconds = 0.01;
    c.requests_per_second = 0;
    c.timeout_seconds = 5;
    return c;
}

TEST(Remote, SendsRequestAndParsesReply) {
    LocalServer s;
    std::string seen_body, seen_auth;
    s.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        res.set_content(completion("hello back"), "application/json");
    });
    ::setenv("FORGE_TEST_API_KEY", "sk-test-secret", 1);
    RemoteConfig c = local_config(s);
    c.api_key_env = "FORGE_TEST_API_KEY";
    RemoteBackend b(c);
    Message m = b.complete(prompt("hello"));
    EXPECT_EQ(m.role, Role::Assistant);
    EXPECT_EQ(m.content, "hello back");
    EXPECT_EQ(seen_auth, "Bearer sk-test-secret");
    auto body = nlohmann::json::parse(seen_body);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][1]["role"], "user");
    EXPECT_EQ(body["seed"], 42);
    EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.25);
    EXPECT_EQ(b.request_body(prompt("hello")).find("sk-test-secret"), std::string::npos);
    ::unsetenv("FORGE_TEST_API_KEY");
}

TEST(Remote, RetriesTransientFailures) {
    LocalServer s;
    std::atomic<int> calls{0};
    s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        int n = ++calls;
        if (n == 1) {
            res.status = 429;
        } else if (n == 2) {
            res.status = 503;
        } else {
            res.set_content(completion("finally"), "application/json");
        }
    });
    RemoteBackend b(local_config(s));
    EXPECT_EQ(b.complete(prompt("x")).content, "finally");
    EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, GivesUpAfterMaxRetries) {
    LocalServer s;
    std::atomic<int> calls{0};
    s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 500;
    });
    RemoteConfig c = local_config(s);
    c.max_retries = 2;
    RemoteBackend b(c);
    EXPECT_THROW(b.complete(prompt("x")), BackendError);
    EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, ClientErrorsAreNotRetriedAndHideTheKey) {
    LocalServer s;
    std::atomic<int> calls{0};
    s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 401;
        res.set_content("{\"error\":\"bad key\"}", "application/json");
    });
    ::setenv("FORGE_TEST_API_KEY", "sk-never-print-me", 1);
    RemoteConfig c = local_config(s);
    c.api_key_env = "FORGE_TEST_API_KEY";
    RemoteBackend b(c);
    testing::internal::CaptureStderr();
    testing::internal::CaptureStdout();
    try {
        b.complete(prompt("x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("401"), std::string::npos);
        EXPECT_EQ(std::string(e.what()).find("sk-never-print-me"), std::string::npos);
    }
    std::string err = testing::internal::GetCapturedStderr();
    std::string out = testing::internal::GetCapturedStdout();
    EXPECT_EQ(err.find("sk-never-print-me"), std::string::npos);
    EXPECT_EQ(out.find("sk-never-print-me"), std::string::npos);
    EXPECT_EQ(calls.load(), 1);
    ::unsetenv("FORGE_TEST_API_KEY");
}

TEST(Remote, MalformedReply) {
    LocalServer s;
    s.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    RemoteBackend b(local_config(s));
    EXPECT_THROW(b.complete(prompt("x")), BackendError);
}

TEST(Remote, UnreachableServer) {
    RemoteConfig c;
    c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    c.model_name = "m";
    c.max_retries = 1;
    c.initial_backoff_seconds = 0.01;
    c.timeout_seconds = 1;
    c.requests_per_second = 0;
    RemoteBackend b(c);
    EXPECT_THROW(b.complete(prompt("x")), BackendError);
}

TEST(Remote, MissingKeyVariable) {
    RemoteConfig c;
    c.endpoint = "http://127.0.0.1:1/x";
    c.model_name = "m";
    c.api_key_env = "FORGE_TEST_SURELY_UNSET_KEY";
    ::unsetenv("FORGE_TEST_SURELY_UNSET_KEY");
    EXPECT_THROW(RemoteBackend{c}, ConfigError);
    c.api_key_env.clear();
    c.endpoint = "ftp://host/x";
    EXPECT_THROW(RemoteBackend{c}, ConfigError);
}

}  // namespace
}  // namespace forge
