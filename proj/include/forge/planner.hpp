#pragma once

// Top-k plan enumeration in (length, lexicographic) order.

#include "forge/pddl.hpp"
#include "forge/semantics.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace forge {

struct PlannerConfig {
    std::size_t k = 100;
    // nullopt: twice the shortest plan length, or 12 when no plan is known.
    std::optional<std::size_t> max_plan_length;
    std::size_t node_limit = 1'000'000;
    bool distinct_args = false;
};

inline constexpr std::size_t kDefaultHorizonWithoutPlan = 12;

enum class PlanSearchStatus { Complete, Truncated, NoneFound, RebindFailure };

const char* to_string(PlanSearchStatus s);

struct PlanSet {
    std::vector<Plan> plans;
    PlanSearchStatus status = PlanSearchStatus::Complete;
    std::vector<Diagnostic> diagnostics;  // rebind failures
    std::size_t horizon = 0;
    std::size_t nodes = 0;
};

// Reachable states of a bound problem, explored breadth-first. Edges of a
// state are listed in ground-action order.
class StateSpace {
public:
    struct Edge {
        std::uint32_t action;
        std::uint32_t target;
    };

    StateSpace(const Domain& domain, const Problem& bound, GroundingOptions opts, std::size_t node_limit);

    // Expands every state whose depth is below `depth`. Returns false once
    // the node limit stops exploration.
    bool expand_to(std::size_t depth);
    // Expands until a goal state appears or nothing new is reachable.
    void expand_until_goal();

    const std::vector<GroundAction>& actions() const { return actions_; }
    std::size_t size() const { return states_.size(); }
    State state(std::size_t i) const;
    std::size_t depth(std::size_t i) const { return depth_[i]; }
    bool is_goal(std::size_t i) const { return goal_[i] != 0; }
    bool expanded(std::size_t i) const { return expanded_[i] != 0; }
    const std::vector<Edge>& edges(std::size_t i) const { return edges_[i]; }
    bool truncated() const { return truncated_; }
    bool exhausted() const { return frontier_begin_ >= states_.size(); }
    std::optional<std::size_t> shortest_goal_depth() const;

private:
    using Bits = std::vector<std::uint64_t>;
    struct BitsHash {
        std::size_t operator()(const Bits& b) const noexcept;
    };

    std::size_t intern(Bits bits, std::size_t depth);
    void expand(std::size_t i);

    std::vector<GroundAction> actions_;
    std::vector<Atom> atoms_;
    std::vector<std::vector<std::uint32_t>> pre_, add_, del_;
    std::vector<std::uint32_t> goal_atoms_;
    std::size_t words_ = 0;

    std::vector<Bits> states_;
    std::unordered_map<Bits, std::uint32_t, BitsHash> index_;
    std::vector<std::size_t> depth_;
    std::vector<char> goal_;
    std::vector<char> expanded_;
    std::vector<std::vector<Edge>> edges_;
    std::size_t frontier_begin_ = 0;
    std::size_t node_limit_;
    bool truncated_ = false;
};

// Up to cfg.k distinct valid plans, shortest first, ties broken by the
// lexicographic order of the action sequences.
PlanSet enumerate_plans(const Domain& domain, const Problem& problem, const PlannerConfig& cfg);

bool solvable(const Domain& domain, const Problem& problem, std::size_t horizon);

}  // namespace forge
