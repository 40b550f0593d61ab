#pragma once

// Fixture loading and brute-force oracles shared by the test binaries. The
// oracles deliberately avoid the library's grounding, state and search code.

#include "forge/io.hpp"
#include "forge/pddl.hpp"
#include "forge/pddl_text.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace forge::test {

namespace fs = std::filesystem;

inline fs::path source_path(const std::string& rel) { return fs::path(FORGE_SOURCE_DIR) / rel; }

inline Domain load_domain(const std::string& rel) { return parse_domain(read_text(source_path(rel))); }
inline Problem load_problem(const std::string& rel) { return parse_problem(read_text(source_path(rel))); }

inline const Domain& blocks() {
    static const Domain d = load_domain("dataset/blocks/domain.pddl");
    return d;
}

inline Problem two_block_problem() {
    return parse_problem(R"((define (problem two) (:domain blocks)
        (:objects a b - block)
        (:init (ontable a) (ontable b) (clear a) (clear b) (handempty))
        (:goal (and (on a b)))))");
}

inline const std::vector<std::string>& fixture_domains() {
    static const std::vector<std::string> names{"blocks", "ferry", "logistics-lite"};
    return names;
}

struct FixtureProblem {
    std::string domain_name;
    std::string id;
    Domain domain;
    Problem problem;
};

// Every pool problem of the dataset domains plus the hand-written small
// problems in tests/fixtures/small ("<domain>-<name>.pddl").
inline std::vector<FixtureProblem> fixture_pool() {
    std::vector<FixtureProblem> out;
    for (const auto& name : fixture_domains()) {
        Domain d = load_domain("dataset/" + name + "/domain.pddl");
        for (const auto& p : list_files(source_path("dataset/" + name + "/pool"), ".pddl")) {
            out.push_back({name, p.stem().string(), d, parse_problem(read_text(p))});
        }
    }
    for (const auto& p : list_files(source_path("tests/fixtures/small"), ".pddl")) {
        Problem problem = parse_problem(read_text(p));
        out.push_back({problem.domain_name, p.stem().string(),
                       load_domain("dataset/" + problem.domain_name + "/domain.pddl"), problem});
    }
    return out;
}

inline Domain mutate(const Domain& d, const std::string& action, const std::function<void(ActionSchema&)>& edit) {
    Domain m = d;
    edit(*m.action(action));
    return m;
}

// ---------------------------------------------------------------------------
// Naive semantics

inline bool naive_subtype(const Domain& d, std::string t, const std::string& want) {
    for (std::size_t guard = 0; guard < 64; ++guard) {
        if (t == want || want == kRootType) return true;
        if (t == kRootType) return false;
        t = d.types.parent(t);
    }
    return false;
}

inline Atom substitute(const Atom& lifted, const ActionSchema& s, const std::vector<std::string>& args) {
    Atom g{lifted.predicate, {}};
    for (const auto& a : lifted.args) {
        std::string v = a;
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            if (s.params[i].name == a) v = args[i];
        }
        g.args.push_back(v);
    }
    return g;
}

// Every type-consistent call, sorted.
inline std::vector<ActionCall> naive_calls(const Domain& d, const Problem& p) {
    std::vector<ActionCall> out;
    for (const auto& s : d.actions) {
        std::vector<std::vector<std::string>> choices;
        for (const auto& param : s.params) {
            std::vector<std::string> fit;
            for (const auto& [obj, type] : p.objects) {
                std::string t = d.types.contains(type) ? type : std::string(kRootType);
                if (naive_subtype(d, t, param.type)) fit.push_back(obj);
            }
            choices.push_back(fit);
        }
        std::function<void(std::size_t, std::vector<std::string>&)> rec = [&](std::size_t i, std::vector<std::string>& cur) {
            if (i == choices.size()) {
                out.push_back({s.name, cur});
                return;
            }
            for (const auto& o : choices[i]) {
                cur.push_back(o);
                rec(i + 1, cur);
                cur.pop_back();
            }
        };
        std::vector<std::string> cur;
        rec(0, cur);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct NaiveStep {
    AtomSet pre, add, del;
};

inline NaiveStep naive_step(const Domain& d, const ActionCall& c) {
    const ActionSchema& s = *d.action(c.name);
    NaiveStep out;
    for (const auto& a : s.pre) out.pre.insert(substitute(a, s, c.args));
    for (const auto& a : s.add) out.add.insert(substitute(a, s, c.args));
    for (const auto& a : s.del) out.del.insert(substitute(a, s, c.args));
    return out;
}

// (s \ del) u add
inline AtomSet naive_apply(const AtomSet& s, const NaiveStep& st) {
    AtomSet next;
    for (const auto& a : s) {
        if (!st.del.contains(a)) next.insert(a);
    }
    next.insert(st.add.begin(), st.add.end());
    return next;
}

struct NaiveVerdict {
    std::string kind;  // valid, precondition, goal, unknown, arguments
    std::optional<std::size_t> step;
    AtomSet missing;
};

inline NaiveVerdict naive_validate(const Domain& d, const Problem& p, const Plan& plan) {
    AtomSet s = p.init;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const ActionSchema* schema = d.action(plan[i].name);
        if (!schema) return {"unknown", i, {}};
        if (schema->params.size() != plan[i].args.size()) return {"arguments", i, {}};
        for (std::size_t j = 0; j < plan[i].args.size(); ++j) {
            auto it = p.objects.find(plan[i].args[j]);
            if (it == p.objects.end() || !naive_subtype(d, it->second, schema->params[j].type)) {
                return {"arguments", i, {}};
            }
        }
        NaiveStep st = naive_step(d, plan[i]);
        AtomSet missing;
        for (const auto& a : st.pre) {
            if (!s.contains(a)) missing.insert(a);
        }
        if (!missing.empty()) return {"precondition", i, missing};
        s = naive_apply(s, st);
    }
    AtomSet missing;
    for (const auto& g : p.goal) {
        if (!s.contains(g)) missing.insert(g);
    }
    if (!missing.empty()) return {"goal", std::nullopt, missing};
    return {"valid", std::nullopt, {}};
}

inline bool naive_goal(const AtomSet& s, const AtomSet& goal) {
    return std::includes(s.begin(), s.end(), goal.begin(), goal.end());
}

// Every valid sequence of at most `horizon` steps, depth-first; prefixes that
// hit an inapplicable step cannot be completed into valid plans.
inline std::vector<Plan> brute_force_plans(const Domain& d, const Problem& p, std::size_t horizon) {
    auto calls = naive_calls(d, p);
    std::vector<NaiveStep> steps;
    for (const auto& c : calls) steps.push_back(naive_step(d, c));
    std::vector<Plan> out;
    Plan cur;
    std::function<void(const AtomSet&)> rec = [&](const AtomSet& s) {
        if (naive_goal(s, p.goal)) out.push_back(cur);
        if (cur.size() == horizon) return;
        for (std::size_t i = 0; i < calls.size(); ++i) {
            if (!naive_goal(s, steps[i].pre)) continue;
            cur.push_back(calls[i]);
            rec(naive_apply(s, steps[i]));
            cur.pop_back();
        }
    };
    rec(p.init);
    std::sort(out.begin(), out.end(), [](const Plan& a, const Plan& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

// Shortest plan length by breadth-first search over explicit state sets,
// optionally forbidding some calls. nullopt when the goal is unreachable.
inline std::optional<std::size_t> naive_shortest(const Domain& d, const Problem& p,
                                                 const std::set<ActionCall>& forbidden = {}) {
    auto calls = naive_calls(d, p);
    std::vector<NaiveStep> steps;
    for (const auto& c : calls) steps.push_back(naive_step(d, c));
    std::set<AtomSet> seen{p.init};
    std::vector<AtomSet> layer{p.init};
    for (std::size_t depth = 0; !layer.empty(); ++depth) {
        std::vector<AtomSet> next;
        for (const auto& s : layer) {
            if (naive_goal(s, p.goal)) return depth;
            for (std::size_t i = 0; i < calls.size(); ++i) {
                if (forbidden.contains(calls[i]) || !naive_goal(s, steps[i].pre)) continue;
                AtomSet t = naive_apply(s, steps[i]);
                if (seen.insert(t).second) next.push_back(std::move(t));
            }
        }
        layer = std::move(next);
    }
    return std::nullopt;
}

// Number of action sequences of length at most `horizon`.
inline double sequence_count(std::size_t actions, std::size_t horizon) {
    double total = 0.0, pow = 1.0;
    for (std::size_t l = 0; l <= horizon; ++l) {
        total += pow;
        pow *= static_cast<double>(actions);
    }
    return total;
}

// Random call sequence mixing valid-looking steps with unknown names and
// wrong argument counts.
inline Plan random_plan(const std::vector<ActionCall>& calls, std::mt19937_64& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, calls.size() - 1);
    std::uniform_int_distribution<int> noise(0, 39);
    Plan plan;
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        ActionCall c = calls[pick(rng)];
        int r = noise(rng);
        if (r == 0) c.name = "teleport";
        if (r == 1 && !c.args.empty()) c.args.pop_back();
        if (r == 2) c.args.push_back("nowhere");
        plan.push_back(c);
    }
    return plan;
}

}  // namespace forge::test
