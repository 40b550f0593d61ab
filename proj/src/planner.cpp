#include "forge/planner.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace forge {

const char* to_string(PlanSearchStatus s) {
    switch (s) {
    case PlanSearchStatus::Complete: return "complete";
    case PlanSearchStatus::Truncated: return "truncated";
    case PlanSearchStatus::NoneFound: return "none found";
    case PlanSearchStatus::RebindFailure: return "rebind failure";
    }
    return "?";
}

std::size_t StateSpace::BitsHash::operator()(const Bits& b) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto w : b) {
        h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

StateSpace::StateSpace(const Domain& domain, const Problem& bound, GroundingOptions opts,
                       std::size_t node_limit)
    : actions_(ground_actions(domain, bound, opts)), node_limit_(node_limit) {
    std::map<Atom, std::uint32_t> ids;
    auto id = [&](const Atom& a) {
        auto [it, fresh] = ids.emplace(a, static_cast<std::uint32_t>(atoms_.size()));
        if (fresh) atoms_.push_back(a);
        return it->second;
    };
    auto ids_of = [&](const AtomSet& set) {
        std::vector<std::uint32_t> out;
        for (const auto& a : set) out.push_back(id(a));
        return out;
    };
    Bits init_ids;
    std::vector<std::uint32_t> init_list = ids_of(bound.init);
    goal_atoms_ = ids_of(bound.goal);
    for (const auto& a : actions_) {
        pre_.push_back(ids_of(a.pre));
        add_.push_back(ids_of(a.add));
        del_.push_back(ids_of(a.del));
    }
    words_ = (atoms_.size() + 63) / 64;
    Bits init(words_, 0);
    for (auto i : init_list) init[i / 64] |= 1ull << (i % 64);
    intern(std::move(init), 0);
}

std::size_t StateSpace::intern(Bits bits, std::size_t depth) {
    auto it = index_.find(bits);
    if (it != index_.end()) {
        return it->second;
    }
    if (states_.size() >= node_limit_) {
        truncated_ = true;
        return static_cast<std::size_t>(-1);
    }
    bool goal = std::all_of(goal_atoms_.begin(), goal_atoms_.end(),
                            [&](std::uint32_t g) { return (bits[g / 64] >> (g % 64)) & 1u; });
    auto idx = static_cast<std::uint32_t>(states_.size());
    index_.emplace(bits, idx);
    states_.push_back(std::move(bits));
    depth_.push_back(depth);
    goal_.push_back(goal ? 1 : 0);
    expanded_.push_back(0);
    edges_.emplace_back();
    return idx;
}

void StateSpace::expand(std::size_t i) {
    for (std::size_t a = 0; a < actions_.size(); ++a) {
        const Bits& s = states_[i];
        bool ok = std::all_of(pre_[a].begin(), pre_[a].end(),
                              [&](std::uint32_t p) { return (s[p / 64] >> (p % 64)) & 1u; });
        if (!ok) continue;
        Bits next = s;
        for (auto d : del_[a]) next[d / 64] &= ~(1ull << (d % 64));
        for (auto d : add_[a]) next[d / 64] |= 1ull << (d % 64);
        std::size_t t = intern(std::move(next), depth_[i] + 1);
        if (t != static_cast<std::size_t>(-1)) {
            edges_[i].push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(t)});
        }
    }
    expanded_[i] = 1;
}

bool StateSpace::expand_to(std::size_t depth) {
    while (frontier_begin_ < states_.size() && depth_[frontier_begin_] < depth) {
        expand(frontier_begin_++);
    }
    return !truncated_;
}

void StateSpace::expand_until_goal() {
    while (!shortest_goal_depth() && !exhausted() && !truncated_) {
        expand_to(depth_[frontier_begin_] + 1);
    }
}

std::optional<std::size_t> StateSpace::shortest_goal_depth() const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (goal_[i]) return depth_[i];
    }
    return std::nullopt;
}

State StateSpace::state(std::size_t i) const {
    State out;
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
        if ((states_[i][a / 64] >> (a % 64)) & 1u) out.atoms.insert(atoms_[a]);
    }
    return out;
}

PlanSet enumerate_plans(const Domain& domain, const Problem& problem, const PlannerConfig& cfg) {
    PlanSet result;
    auto bound = rebind_problem(problem, domain);
    if (!bound.ok()) {
        result.status = PlanSearchStatus::RebindFailure;
        result.diagnostics = std::move(bound.diagnostics);
        return result;
    }
    StateSpace space(domain, *bound.problem, {cfg.distinct_args}, cfg.node_limit);

    std::size_t horizon = 0;
    if (cfg.max_plan_length) {
        horizon = *cfg.max_plan_length;
    } else {
        space.expand_until_goal();
        if (auto d = space.shortest_goal_depth()) {
            horizon = std::max<std::size_t>(2 * *d, 1);
        } else if (space.truncated()) {
            horizon = kDefaultHorizonWithoutPlan;
        } else {
            result.status = PlanSearchStatus::NoneFound;
            result.nodes = space.size();
            return result;
        }
    }
    space.expand_to(horizon);
    result.horizon = horizon;

    // reach[r][s]: a goal state is reachable from s in exactly r steps.
    const std::size_t n = space.size();
    std::vector<std::vector<char>> reach(horizon + 1, std::vector<char>(n, 0));
    for (std::size_t s = 0; s < n; ++s) reach[0][s] = space.is_goal(s) ? 1 : 0;
    for (std::size_t r = 1; r <= horizon; ++r) {
        for (std::size_t s = 0; s < n; ++s) {
            for (const auto& e : space.edges(s)) {
                if (reach[r - 1][e.target]) {
                    reach[r][s] = 1;
                    break;
                }
            }
        }
    }

    std::size_t nodes = n;
    bool out_of_nodes = false;
    std::vector<std::uint32_t> prefix;
    std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t s, std::size_t rem) {
        if (result.plans.size() >= cfg.k || out_of_nodes) return;
        if (++nodes > cfg.node_limit) {
            out_of_nodes = true;
            return;
        }
        if (rem == 0) {
            Plan plan;
            for (auto a : prefix) plan.push_back(space.actions()[a].call());
            result.plans.push_back(std::move(plan));
            return;
        }
        for (const auto& e : space.edges(s)) {
            if (!reach[rem - 1][e.target]) continue;
            prefix.push_back(e.action);
            dfs(e.target, rem - 1);
            prefix.pop_back();
            if (result.plans.size() >= cfg.k || out_of_nodes) return;
        }
    };
    for (std::size_t len = 0; len <= horizon && result.plans.size() < cfg.k && !out_of_nodes; ++len) {
        if (reach[len][0]) dfs(0, len);
    }

    result.nodes = nodes;
    const bool truncated = space.truncated() || out_of_nodes;
    if (truncated) {
        result.status = PlanSearchStatus::Truncated;
    } else if (result.plans.empty()) {
        result.status = PlanSearchStatus::NoneFound;
    } else {
        result.status = PlanSearchStatus::Complete;
    }
    return result;
}

bool solvable(const Domain& domain, const Problem& problem, std::size_t horizon) {
    PlannerConfig cfg;
    cfg.k = 1;
    cfg.max_plan_length = horizon;
    return !enumerate_plans(domain, problem, cfg).plans.empty();
}

}  // namespace forge
