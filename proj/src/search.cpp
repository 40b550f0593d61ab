#include "forge/search.hpp"

#include "forge/io.hpp"
#include "forge/pddl_text.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

namespace forge {

namespace {

const std::vector<std::pair<std::string, PipelineKind>> kPipelines = {
    {"N", PipelineKind::N},   {"LR", PipelineKind::LR},   {"LS", PipelineKind::LS},  {"VR", PipelineKind::VR},
    {"VS", PipelineKind::VS}, {"LVR", PipelineKind::LVR}, {"LVS", PipelineKind::LVS},
};

}  // namespace

const char* to_string(PipelineKind kind) {
    for (const auto& [name, k] : kPipelines) {
        if (k == kind) return name.c_str();
    }
    return "?";
}

PipelineKind parse_pipeline(const std::string& s) {
    for (const auto& [name, k] : kPipelines) {
        if (name == s) return k;
    }
    throw std::invalid_argument("unknown pipeline " + s + " (expected N, LR, LS, VR, VS, LVR or LVS)");
}

bool uses_plan_feedback(PipelineKind kind) {
    return kind == PipelineKind::VR || kind == PipelineKind::VS || kind == PipelineKind::LVR ||
           kind == PipelineKind::LVS;
}

bool uses_landmark_feedback(PipelineKind kind) {
    return kind == PipelineKind::LR || kind == PipelineKind::LS || kind == PipelineKind::LVR ||
           kind == PipelineKind::LVS;
}

bool is_search(PipelineKind kind) {
    return kind == PipelineKind::LS || kind == PipelineKind::VS || kind == PipelineKind::LVS;
}

const char* to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::Open: return "open";
        case NodeStatus::Expanded: return "expanded";
        case NodeStatus::Goal: return "goal";
        case NodeStatus::Discarded: return "discarded";
    }
    return "?";
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::Goal: return "goal";
        case Termination::Budget: return "budget";
        case Termination::NoFeedback: return "no_feedback";
        case Termination::Failure: return "failure";
    }
    return "?";
}

Termination parse_termination(const std::string& s) {
    for (auto t : {Termination::Goal, Termination::Budget, Termination::NoFeedback, Termination::Failure}) {
        if (s == to_string(t)) return t;
    }
    throw std::invalid_argument("unknown termination " + s);
}

std::size_t score_H(const Domain& gen, const FeedbackAssets& assets) {
    std::size_t invalid = 0;
    for (const auto& np : assets.problems) {
        auto it = assets.plans.find(np.id);
        if (it == assets.plans.end()) continue;
        for (const auto& plan : it->second) {
            if (!validate_plan(gen, np.problem, plan).valid()) ++invalid;
        }
    }
    return invalid;
}

std::vector<FeedbackMessage> feedback_pool(PipelineKind kind, const Domain& gen, const FeedbackAssets& assets,
                                           const PlannerConfig& landmark_planner,
                                           const FeedbackTemplates& templates) {
    std::vector<FeedbackMessage> plan_pool, landmark_pool;
    if (uses_plan_feedback(kind)) plan_pool = plan_feedback_pool(gen, assets, templates);
    if (uses_landmark_feedback(kind)) landmark_pool = landmark_feedback_pool(gen, assets, landmark_planner, templates);
    return combined_pool(std::move(plan_pool), std::move(landmark_pool));
}

Domain parse_domain_reply(const std::string& reply) {
    return parse_domain(extract_pddl_block(reply));
}

namespace {

SearchNode make_root(const ConstructionResult& root, const FeedbackAssets& assets, double weight) {
    SearchNode n;
    n.domain = root.domain;
    n.history = root.transcript;
    n.H = score_H(n.domain, assets);
    n.f = weight * static_cast<double>(n.H);
    return n;
}

// Minimizes (H, G, id) over the nodes that hold a parsed domain.
std::size_t best_node(const std::vector<SearchNode>& tree) {
    std::size_t best = 0;
    for (const auto& n : tree) {
        if (n.status == NodeStatus::Discarded) continue;
        const auto& b = tree[best];
        if (std::tie(n.H, n.G, n.id) < std::tie(b.H, b.G, b.id)) best = n.id;
    }
    return best;
}

void finish(RunResult& r, const PipelineConfig& cfg, const FeedbackAssets& assets) {
    r.final_domain = r.tree[r.chosen_node].domain;
    if (uses_landmark_feedback(cfg.kind)) {
        r.remaining_landmark_feedback =
            landmark_feedback_pool(r.final_domain, assets, cfg.landmark_planner).size();
    }
}

struct Refinement {
    std::optional<Domain> domain;
    std::size_t calls = 0;
    std::string error;
};

// Appends `feedback` and queries until a domain parses or `attempts` run out.
Refinement refine(Backend& backend, History& history, const FeedbackMessage& feedback, std::size_t attempts) {
    history.append(Role::User, feedback.rendered);
    Refinement out;
    auto outcome = syntax_repair_loop(backend, history, parse_domain_reply, attempts);
    out.calls = outcome.calls;
    if (outcome.ok()) {
        out.domain = std::move(*outcome.value);
    } else {
        out.error = "no parseable domain after " + std::to_string(outcome.calls) +
                    " attempts: " + outcome.errors.back().render();
    }
    return out;
}

}  // namespace

RunResult run_no_feedback(const ConstructionResult& root, const FeedbackAssets& assets) {
    RunResult r;
    r.tree.push_back(make_root(root, assets, 1.0));
    r.tree.front().status = NodeStatus::Expanded;
    r.termination = Termination::NoFeedback;
    r.final_domain = r.tree.front().domain;
    return r;
}

RunResult run_random_walk(const ConstructionResult& root, const PipelineConfig& cfg, const FeedbackAssets& assets,
                          Backend& backend, const FeedbackTemplates& templates) {
    if (is_search(cfg.kind) || cfg.kind == PipelineKind::N) {
        throw std::invalid_argument(std::string("run_random_walk: pipeline ") + to_string(cfg.kind) +
                                    " is not a random walk");
    }
    RunResult r;
    r.tree.push_back(make_root(root, assets, cfg.weight));
    std::mt19937_64 rng(cfg.seed);
    History history = root.transcript;  // one continuing conversation
    std::size_t current = 0;
    std::size_t remaining = cfg.budget;
    r.termination = Termination::Budget;

    while (true) {
        auto pool = feedback_pool(cfg.kind, r.tree[current].domain, assets, cfg.landmark_planner, templates);
        if (pool.empty()) {
            r.termination = Termination::NoFeedback;
            r.tree[current].status = NodeStatus::Goal;
            break;
        }
        if (remaining == 0) break;
        r.tree[current].status = NodeStatus::Expanded;
        ++r.expansions;
        const FeedbackMessage msg = select_feedback(pool, cfg.walk_selection, 1, rng).front();

        SearchNode child;
        child.id = r.tree.size();
        child.parent = current;
        child.G = r.tree[current].G + 1;
        child.feedback_used = msg;
        try {
            auto attempt = refine(backend, history, msg, std::min(remaining, 1 + cfg.syntax_retry_in_refinement));
            child.llm_calls = attempt.calls;
            remaining -= attempt.calls;
            r.llm_calls += attempt.calls;
            if (attempt.domain) {
                child.domain = std::move(*attempt.domain);
            } else {
                child.note = attempt.error;
            }
        } catch (const BackendError& e) {
            child.note = std::string("backend error: ") + e.what();
            r.termination = Termination::Failure;
            r.failure = child.note;
        }
        child.history = history;
        if (!child.note.empty()) {
            // Keep the previous domain and go on from the longer conversation.
            child.domain = r.tree[current].domain;
            child.H = r.tree[current].H;
            child.status = NodeStatus::Discarded;
        } else {
            child.H = score_H(child.domain, assets);
        }
        child.f = static_cast<double>(child.G) + cfg.weight * static_cast<double>(child.H);
        const bool parsed = child.status != NodeStatus::Discarded;
        r.tree.push_back(std::move(child));
        if (r.termination == Termination::Failure) break;
        if (parsed) current = r.tree.size() - 1;
    }
    r.chosen_node = current;
    finish(r, cfg, assets);
    return r;
}

RunResult run_search(const ConstructionResult& root, const PipelineConfig& cfg, const FeedbackAssets& assets,
                     Backend& backend, const FeedbackTemplates& templates) {
    if (!is_search(cfg.kind)) {
        throw std::invalid_argument(std::string("run_search: pipeline ") + to_string(cfg.kind) + " is not a search");
    }
    RunResult r;
    r.tree.push_back(make_root(root, assets, cfg.weight));

    auto finish_goal = [&](std::size_t id) {
        r.tree[id].status = NodeStatus::Goal;
        r.termination = Termination::Goal;
        r.chosen_node = id;
        finish(r, cfg, assets);
        return r;
    };
    if (r.tree.front().H == 0) return finish_goal(0);
    if (cfg.child_cap == 0) {
        r.termination = Termination::NoFeedback;
        finish(r, cfg, assets);
        return r;
    }

    // (f, H, insertion order); node ids grow with insertion.
    std::set<std::tuple<double, std::size_t, std::size_t>> open;
    open.insert({r.tree.front().f, r.tree.front().H, 0});

    while (!open.empty() && r.expansions < cfg.budget) {
        const std::size_t id = std::get<2>(*open.begin());
        open.erase(open.begin());
        ++r.expansions;
        r.tree[id].status = NodeStatus::Expanded;

        auto pool = feedback_pool(cfg.kind, r.tree[id].domain, assets, cfg.landmark_planner, templates);
        std::mt19937_64 unused;
        for (const auto& msg : select_feedback(pool, Selection::FirstN, cfg.child_cap, unused)) {
            SearchNode child;
            child.id = r.tree.size();
            child.parent = id;
            child.G = r.tree[id].G + 1;
            child.history = r.tree[id].history;
            child.feedback_used = msg;
            try {
                auto attempt = refine(backend, child.history, msg, 1 + cfg.syntax_retry_in_refinement);
                child.llm_calls = attempt.calls;
                r.llm_calls += attempt.calls;
                if (attempt.domain) {
                    child.domain = std::move(*attempt.domain);
                } else {
                    child.note = attempt.error;
                }
            } catch (const BackendError& e) {
                child.note = std::string("backend error: ") + e.what();
            }
            if (!child.note.empty()) {
                child.domain = r.tree[id].domain;
                child.status = NodeStatus::Discarded;
                r.tree.push_back(std::move(child));
                continue;
            }
            child.H = score_H(child.domain, assets);
            child.f = static_cast<double>(child.G) + cfg.weight * static_cast<double>(child.H);
            r.tree.push_back(std::move(child));
            const auto& added = r.tree.back();
            if (added.H == 0) return finish_goal(added.id);
            open.insert({added.f, added.H, added.id});
        }
    }
    r.termination = open.empty() ? Termination::NoFeedback : Termination::Budget;
    r.chosen_node = best_node(r.tree);
    finish(r, cfg, assets);
    return r;
}

RunResult run_pipeline(const ConstructionResult& root, const PipelineConfig& cfg, const FeedbackAssets& assets,
                       Backend& backend, const FeedbackTemplates& templates) {
    if (cfg.kind == PipelineKind::N) return run_no_feedback(root, assets);
    if (is_search(cfg.kind)) return run_search(root, cfg, assets, backend, templates);
    return run_random_walk(root, cfg, assets, backend, templates);
}

std::string tree_dump(const RunResult& result) {
    std::ostringstream out;
    out << "id\tparent\tG\tH\tf\tstatus\tfeedback\n";
    for (const auto& n : result.tree) {
        out << n.id << '\t';
        if (n.parent) {
            out << *n.parent;
        } else {
            out << '-';
        }
        out << '\t' << n.G << '\t' << n.H << '\t' << std::setprecision(6) << n.f << '\t' << to_string(n.status)
            << '\t';
        if (n.feedback_used) {
            out << to_string(n.feedback_used->kind) << ':' << n.feedback_used->problem_id << '#'
                << n.feedback_used->source_index;
        } else {
            out << '-';
        }
        out << '\n';
    }
    out << "# termination " << to_string(result.termination) << ", chosen node " << result.chosen_node << ", "
        << result.expansions << " expansions, " << result.llm_calls << " backend calls\n";
    return out.str();
}

void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir) {
    write_text(dir / "tree.tsv", tree_dump(result));
    write_text(dir / "final_domain.pddl", print_domain(result.final_domain));
    for (const auto& n : result.tree) {
        std::string text = n.history.dump();
        if (!n.note.empty()) text += "### note\n" + n.note + "\n";
        write_text(dir / "transcripts" / ("node-" + std::to_string(n.id) + ".txt"), text);
    }
}

}  // namespace forge
