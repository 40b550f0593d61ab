#pragma once

// Refinement pipelines: no feedback, random walks over feedback and
// best-first search in feedback space.

#include "forge/construction.hpp"
#include "forge/feedback.hpp"
#include "forge/generator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace forge {

enum class PipelineKind { N, LR, LS, VR, VS, LVR, LVS };

const char* to_string(PipelineKind kind);
PipelineKind parse_pipeline(const std::string& s);

bool uses_plan_feedback(PipelineKind kind);
bool uses_landmark_feedback(PipelineKind kind);
bool is_search(PipelineKind kind);

enum class NodeStatus { Open, Expanded, Goal, Discarded };
enum class Termination { Goal, Budget, NoFeedback, Failure };

const char* to_string(NodeStatus s);
const char* to_string(Termination t);
Termination parse_termination(const std::string& s);

struct SearchNode {
    std::size_t id = 0;
    std::optional<std::size_t> parent;
    Domain domain;  // the parent's domain for discarded nodes
    History history;
    std::size_t G = 0;
    std::size_t H = 0;
    double f = 0.0;
    std::optional<FeedbackMessage> feedback_used;
    NodeStatus status = NodeStatus::Open;
    std::size_t llm_calls = 0;  // backend calls spent creating this node
    std::string note;           // why a node was discarded
};

struct PipelineConfig {
    PipelineKind kind = PipelineKind::N;
    std::size_t budget = 15;
    std::size_t child_cap = 10;
    double weight = 1.0;
    // Planner used to look for landmark violations (k = 2 by default).
    PlannerConfig landmark_planner = [] {
        PlannerConfig c;
        c.k = 2;
        return c;
    }();
    std::uint64_t seed = 0;
    std::size_t syntax_retry_in_refinement = 3;
    // Random walks draw uniformly; FirstN always takes the lowest stable index.
    Selection walk_selection = Selection::RandomSingle;
};

struct RunResult {
    Domain final_domain;
    std::vector<SearchNode> tree;
    Termination termination = Termination::NoFeedback;
    std::size_t llm_calls = 0;  // refinement calls, syntax retries included
    std::size_t expansions = 0;
    std::size_t chosen_node = 0;
    std::string failure;
    // Landmark messages left for the final domain (landmark pipelines only).
    std::optional<std::size_t> remaining_landmark_feedback;
};

// Feedback plans that are not valid on `gen`; a problem that does not bind
// counts all of its plans.
std::size_t score_H(const Domain& gen, const FeedbackAssets& assets);

// Feedback of the pipeline's kinds for a domain.
std::vector<FeedbackMessage> feedback_pool(PipelineKind kind, const Domain& gen, const FeedbackAssets& assets,
                                           const PlannerConfig& landmark_planner,
                                           const FeedbackTemplates& templates);

// Parses a revised domain out of a reply.
Domain parse_domain_reply(const std::string& reply);

RunResult run_no_feedback(const ConstructionResult& root, const FeedbackAssets& assets);

RunResult run_random_walk(const ConstructionResult& root, const PipelineConfig& cfg, const FeedbackAssets& assets,
                          Backend& backend, const FeedbackTemplates& templates = FeedbackTemplates::builtin());

RunResult run_search(const ConstructionResult& root, const PipelineConfig& cfg, const FeedbackAssets& assets,
                     Backend& backend, const FeedbackTemplates& templates = FeedbackTemplates::builtin());

// Dispatches on cfg.kind.
RunResult run_pipeline(const ConstructionResult& root, const PipelineConfig& cfg, const FeedbackAssets& assets,
                       Backend& backend, const FeedbackTemplates& templates = FeedbackTemplates::builtin());

// One tab-separated line per node: id, parent, G, H, f, status, feedback kind.
std::string tree_dump(const RunResult& result);

// tree.tsv, final_domain.pddl and transcripts/node-<id>.txt under `dir`.
void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir);

}  // namespace forge
