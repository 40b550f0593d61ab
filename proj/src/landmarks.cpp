#include "forge/landmarks.hpp"

#include "forge/pddl_text.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace forge {

std::string DisjunctiveActionLandmark::joined(const char* sep) const {
    std::string out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (i) out += sep;
        out += actions[i].str();
    }
    return out;
}

namespace {

// Decides which adders of a fact can be the step that first makes it true.
class AchieverFilter {
public:
    AchieverFilter(const Domain& domain, const Problem& bound, std::size_t node_limit)
        : space_(domain, bound, {}, node_limit) {
        space_.expand_to(std::numeric_limits<std::size_t>::max());
        exact_ = !space_.truncated();
        if (exact_) {
            solvable_ = space_.shortest_goal_depth().has_value();
            applicable_in_.resize(space_.actions().size());
            for (std::size_t s = 0; s < space_.size(); ++s) {
                for (const auto& e : space_.edges(s)) {
                    applicable_in_[e.action].push_back(s);
                }
            }
            for (std::size_t s = 0; s < space_.size(); ++s) {
                states_.push_back(space_.state(s));
            }
        } else {
            // Delete-relaxed reachability from the initial state.
            relaxed_ = bound.init;
            bool changed = true;
            while (changed) {
                changed = false;
                for (const auto& a : space_.actions()) {
                    if (!std::includes(relaxed_.begin(), relaxed_.end(), a.pre.begin(), a.pre.end())) continue;
                    for (const auto& f : a.add) changed |= relaxed_.insert(f).second;
                }
            }
            PlannerConfig cfg;
            cfg.k = 1;
            solvable_ = !enumerate_plans(domain, bound, cfg).plans.empty();
        }
    }

    bool solvable() const { return solvable_; }

    std::vector<const GroundAction*> achievers(const Atom& fact) const {
        std::vector<const GroundAction*> out;
        const auto& acts = space_.actions();
        for (std::size_t a = 0; a < acts.size(); ++a) {
            if (!acts[a].add.contains(fact)) continue;
            bool usable = false;
            if (exact_) {
                usable = std::any_of(applicable_in_[a].begin(), applicable_in_[a].end(),
                                     [&](std::size_t s) { return !states_[s].contains(fact); });
            } else {
                usable = std::includes(relaxed_.begin(), relaxed_.end(), acts[a].pre.begin(), acts[a].pre.end());
            }
            if (usable) out.push_back(&acts[a]);
        }
        return out;
    }

private:
    StateSpace space_;
    bool exact_ = false;
    bool solvable_ = false;
    std::vector<std::vector<std::size_t>> applicable_in_;
    std::vector<State> states_;
    AtomSet relaxed_;
};

}  // namespace

AtomSet extract_fact_landmarks(const Domain& domain, const Problem& problem, LandmarkConfig cfg) {
    const Problem bound = bind_or_throw(problem, domain);
    AchieverFilter filter(domain, bound, cfg.node_limit);
    if (!filter.solvable()) {
        throw LandmarkError("no landmarks for unsolvable problem " + problem.name);
    }
    AtomSet landmarks = bound.goal;
    std::deque<Atom> queue;
    for (const auto& g : bound.goal) {
        if (!bound.init.contains(g)) queue.push_back(g);
    }
    while (!queue.empty()) {
        Atom f = std::move(queue.front());
        queue.pop_front();
        auto achievers = filter.achievers(f);
        if (achievers.empty()) {
            throw LandmarkError("landmark " + f.str() + " has no achiever");
        }
        AtomSet shared = achievers.front()->pre;
        for (std::size_t i = 1; i < achievers.size(); ++i) {
            AtomSet next;
            std::set_intersection(shared.begin(), shared.end(), achievers[i]->pre.begin(),
                                  achievers[i]->pre.end(), std::inserter(next, next.end()));
            shared = std::move(next);
        }
        for (const auto& p : shared) {
            if (landmarks.insert(p).second && !bound.init.contains(p)) {
                queue.push_back(p);
            }
        }
    }
    return landmarks;
}

std::vector<DisjunctiveActionLandmark> achiever_landmarks(const Domain& domain, const Problem& problem,
                                                          const AtomSet& facts, LandmarkConfig cfg) {
    const Problem bound = bind_or_throw(problem, domain);
    AchieverFilter filter(domain, bound, cfg.node_limit);
    std::vector<DisjunctiveActionLandmark> out;
    for (const auto& f : facts) {
        if (bound.init.contains(f)) continue;
        DisjunctiveActionLandmark lm;
        for (const auto* a : filter.achievers(f)) {
            lm.actions.push_back(a->call());
        }
        if (lm.actions.empty()) {
            throw LandmarkError("fact " + f.str() + " has no achiever");
        }
        std::sort(lm.actions.begin(), lm.actions.end());
        lm.origin = f;
        out.push_back(std::move(lm));
    }
    return out;
}

std::vector<DisjunctiveActionLandmark> extract_action_landmarks(const Domain& domain, const Problem& problem,
                                                                LandmarkConfig cfg) {
    return achiever_landmarks(domain, problem, extract_fact_landmarks(domain, problem, cfg), cfg);
}

bool landmark_hit(const DisjunctiveActionLandmark& lm, const std::vector<Plan>& plans) {
    for (const auto& plan : plans) {
        for (const auto& step : plan) {
            if (std::find(lm.actions.begin(), lm.actions.end(), step) != lm.actions.end()) {
                return true;
            }
        }
    }
    return false;
}

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<DisjunctiveActionLandmark> read_landmarks(std::string_view text) {
    std::vector<DisjunctiveActionLandmark> out;
    int line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (trim(line).empty()) continue;

        auto fail = [&](const std::string& why) -> SourceError {
            return SourceError(line_no, 1, why, std::string(trim(line)));
        };
        DisjunctiveActionLandmark lm;
        std::string_view actions = line;
        auto semi = line.find(';');
        if (semi != std::string_view::npos) {
            actions = line.substr(0, semi);
            std::string_view rest = trim(line.substr(semi + 1));
            if (!rest.starts_with("origin:")) {
                throw fail("expected '; origin: (fact)'");
            }
            try {
                lm.origin = parse_atom_text(trim(rest.substr(7)));
            } catch (const SourceError& e) {
                throw fail("bad origin fact: " + e.message);
            }
        }
        std::size_t pos = 0;
        while (pos <= actions.size()) {
            auto bar = actions.find('|', pos);
            if (bar == std::string_view::npos) bar = actions.size();
            std::string_view part = trim(actions.substr(pos, bar - pos));
            if (part.empty()) {
                throw fail("empty action in landmark");
            }
            try {
                lm.actions.push_back(parse_call_text(part));
            } catch (const SourceError& e) {
                throw fail("bad action " + std::string(part) + ": " + e.message);
            }
            pos = bar + 1;
        }
        out.push_back(std::move(lm));
    }
    return out;
}

std::string write_landmarks(const std::vector<DisjunctiveActionLandmark>& landmarks) {
    std::string out;
    for (const auto& lm : landmarks) {
        out += lm.joined(" | ");
        if (lm.origin) {
            out += " ; origin: " + lm.origin->str();
        }
        out += '\n';
    }
    return out;
}

}  // namespace forge
