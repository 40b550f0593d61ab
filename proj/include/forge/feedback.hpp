#pragma once

// Feedback messages for a candidate domain: invalid ground-truth plans and
// unmet disjunctive action landmarks, rendered as revision prompts.

#include "forge/landmarks.hpp"
#include "forge/planner.hpp"
#include "forge/semantics.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace forge {

enum class FeedbackKind { Plan, Landmark };

const char* to_string(FeedbackKind kind);

inline constexpr std::string_view kNoPlanMarker = "; no plan could be found for this problem";

struct FeedbackTemplates {
    std::string plan;      // placeholders {problem} {plan} {val_output}
    std::string landmark;  // placeholders {problem} {landmark} {plan}

    static FeedbackTemplates builtin();
    // Reads plan_feedback.txt and landmark_feedback.txt.
    static FeedbackTemplates load(const std::filesystem::path& dir);
};

// Replaces each "{key}" of the template in a single left-to-right pass, so
// braces inside substituted text are left alone.
std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& fields);

// Ground-truth material the feedback is computed from.
struct FeedbackAssets {
    std::vector<NamedProblem> problems;
    std::map<std::string, std::vector<Plan>> plans;
    std::map<std::string, std::vector<DisjunctiveActionLandmark>> landmarks;
};

struct FeedbackMessage {
    FeedbackKind kind = FeedbackKind::Plan;
    std::string problem_id;
    std::size_t source_index = 0;  // plan or landmark index within the problem
    std::string rendered;
    std::string plan_text;                             // feedback plan, or the plan shown for a landmark
    std::optional<Verdict> verdict;                    // plan feedback
    std::optional<DisjunctiveActionLandmark> landmark;  // landmark feedback
    bool no_plan = false;                               // landmark feedback without a generated plan
    std::size_t stable_index = 0;
};

// One message per feedback plan that is invalid on `gen`, rebind failures
// included, ordered by (problem id, plan index).
std::vector<FeedbackMessage> plan_feedback_pool(const Domain& gen, const FeedbackAssets& assets,
                                                const FeedbackTemplates& templates = FeedbackTemplates::builtin());

// One message per landmark hit by none of the (at most cfg.k) plans the
// planner finds on `gen`, ordered by (problem id, landmark index).
std::vector<FeedbackMessage> landmark_feedback_pool(const Domain& gen, const FeedbackAssets& assets,
                                                    const PlannerConfig& cfg,
                                                    const FeedbackTemplates& templates = FeedbackTemplates::builtin());

// Plan messages first, then landmark messages, re-indexed.
std::vector<FeedbackMessage> combined_pool(std::vector<FeedbackMessage> plan_pool,
                                           std::vector<FeedbackMessage> landmark_pool);

enum class Selection { RandomSingle, FirstN };

class NoFeedback : public std::runtime_error {
public:
    NoFeedback() : std::runtime_error("no feedback available") {}
};

std::vector<FeedbackMessage> select_feedback(const std::vector<FeedbackMessage>& pool, Selection strategy,
                                             std::size_t n, std::mt19937_64& rng);

}  // namespace forge
