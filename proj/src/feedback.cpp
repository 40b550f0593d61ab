#include "forge/feedback.hpp"

#include "forge/assets.hpp"
#include "forge/io.hpp"
#include "forge/pddl_text.hpp"

#include <algorithm>

namespace forge {

const char* to_string(FeedbackKind kind) {
    return kind == FeedbackKind::Plan ? "plan" : "landmark";
}

namespace {

std::string without_final_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

void index_pool(std::vector<FeedbackMessage>& pool) {
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i].stable_index = i;
}

}  // namespace

FeedbackTemplates FeedbackTemplates::builtin() {
    return {std::string(assets::plan_feedback), std::string(assets::landmark_feedback)};
}

FeedbackTemplates FeedbackTemplates::load(const std::filesystem::path& dir) {
    return {without_final_newline(read_text(dir / "plan_feedback.txt")),
            without_final_newline(read_text(dir / "landmark_feedback.txt"))};
}

std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& fields) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        auto open = tpl.find('{', pos);
        if (open == std::string::npos) break;
        auto close = tpl.find('}', open);
        if (close == std::string::npos) break;
        auto it = fields.find(tpl.substr(open + 1, close - open - 1));
        out.append(tpl, pos, open - pos);
        if (it == fields.end()) {
            out += '{';
            pos = open + 1;
            continue;
        }
        out += it->second;
        pos = close + 1;
    }
    out.append(tpl, pos);
    return out;
}

std::vector<FeedbackMessage> plan_feedback_pool(const Domain& gen, const FeedbackAssets& assets,
                                                const FeedbackTemplates& templates) {
    std::vector<const NamedProblem*> order;
    for (const auto& p : assets.problems) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<FeedbackMessage> pool;
    for (const auto* np : order) {
        auto it = assets.plans.find(np->id);
        if (it == assets.plans.end()) continue;
        const std::string problem_text = without_final_newline(print_problem(np->problem));
        for (std::size_t i = 0; i < it->second.size(); ++i) {
            const Plan& plan = it->second[i];
            Verdict v = validate_plan(gen, np->problem, plan);
            if (v.valid()) continue;
            FeedbackMessage m;
            m.kind = FeedbackKind::Plan;
            m.problem_id = np->id;
            m.source_index = i;
            m.plan_text = without_final_newline(print_plan(plan));
            m.rendered = fill_template(templates.plan, {{"problem", problem_text},
                                                        {"plan", m.plan_text},
                                                        {"val_output", without_final_newline(v.rendered)}});
            m.verdict = std::move(v);
            pool.push_back(std::move(m));
        }
    }
    index_pool(pool);
    return pool;
}

std::vector<FeedbackMessage> landmark_feedback_pool(const Domain& gen, const FeedbackAssets& assets,
                                                    const PlannerConfig& cfg, const FeedbackTemplates& templates) {
    std::vector<const NamedProblem*> order;
    for (const auto& p : assets.problems) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<FeedbackMessage> pool;
    for (const auto* np : order) {
        auto it = assets.landmarks.find(np->id);
        if (it == assets.landmarks.end() || it->second.empty()) continue;
        PlanSet generated = enumerate_plans(gen, np->problem, cfg);
        const bool no_plan = generated.plans.empty();
        const std::string shown =
            no_plan ? std::string(kNoPlanMarker) : without_final_newline(print_plan(generated.plans.front()));
        const std::string problem_text = without_final_newline(print_problem(np->problem));
        for (std::size_t i = 0; i < it->second.size(); ++i) {
            const auto& lm = it->second[i];
            if (landmark_hit(lm, generated.plans)) continue;
            FeedbackMessage m;
            m.kind = FeedbackKind::Landmark;
            m.problem_id = np->id;
            m.source_index = i;
            m.plan_text = shown;
            m.no_plan = no_plan;
            m.rendered = fill_template(templates.landmark,
                                       {{"problem", problem_text}, {"landmark", lm.joined(", ")}, {"plan", shown}});
            m.landmark = lm;
            pool.push_back(std::move(m));
        }
    }
    index_pool(pool);
    return pool;
}

std::vector<FeedbackMessage> combined_pool(std::vector<FeedbackMessage> plan_pool,
                                           std::vector<FeedbackMessage> landmark_pool) {
    for (auto& m : landmark_pool) plan_pool.push_back(std::move(m));
    index_pool(plan_pool);
    return plan_pool;
}

std::vector<FeedbackMessage> select_feedback(const std::vector<FeedbackMessage>& pool, Selection strategy,
                                             std::size_t n, std::mt19937_64& rng) {
    if (strategy == Selection::RandomSingle) {
        if (pool.empty()) throw NoFeedback();
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        return {pool[pick(rng)]};
    }
    std::vector<FeedbackMessage> sorted = pool;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.stable_index < b.stable_index; });
    sorted.resize(std::min(n, sorted.size()));
    return sorted;
}

}  // namespace forge
