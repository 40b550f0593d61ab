#pragma once

// Dataset assets, experiment grids and report tables.

#include "forge/construction.hpp"
#include "forge/feedback.hpp"
#include "forge/hde.hpp"
#include "forge/search.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge {

namespace fs = std::filesystem;

// dataset/<domain>/{domain.pddl, description.json, pool/*.pddl,
// feedback/{problems,plans,landmarks}/, eval/{problems,plans}/}
struct DatasetLayout {
    fs::path dir;

    fs::path domain() const { return dir / "domain.pddl"; }
    fs::path description() const { return dir / "description.json"; }
    fs::path pool() const { return dir / "pool"; }
    fs::path feedback_problems() const { return dir / "feedback" / "problems"; }
    fs::path feedback_plans() const { return dir / "feedback" / "plans"; }
    fs::path feedback_landmarks() const { return dir / "feedback" / "landmarks"; }
    fs::path eval_problems() const { return dir / "eval" / "problems"; }
    fs::path eval_plans() const { return dir / "eval" / "plans"; }
};

struct AssetOptions {
    std::size_t feedback_problems = 5;
    std::size_t eval_problems = 5;
    std::size_t feedback_plans = 2;
    std::size_t eval_plans = 100;
    PlannerConfig planner;  // k is overridden per set
};

struct AssetSummary {
    std::vector<std::string> feedback;
    std::vector<std::string> eval;
    std::vector<std::string> skipped;  // unsolvable pool problems
};

// Picks the first solvable pool problems for feedback, the next ones for
// evaluation, and writes their plans and (feedback only) landmark files.
// Reads only the ground-truth domain and the pool.
AssetSummary gen_assets(const fs::path& domain_dir, const AssetOptions& opts = {});

// Plan files are named "<problem>-<index>.soln".
std::string plan_file_name(const std::string& problem_id, std::size_t index);
void write_plans(const fs::path& dir, const std::string& problem_id, const std::vector<Plan>& plans);
std::vector<Plan> read_plans(const fs::path& dir, const std::string& problem_id);

std::vector<NamedProblem> read_problems(const fs::path& dir);
FeedbackAssets load_feedback_assets(const fs::path& domain_dir);

struct EvalAssets {
    std::vector<NamedProblem> problems;
    std::map<std::string, std::vector<Plan>> plans;
};

EvalAssets load_eval_assets(const fs::path& domain_dir);
EvalAssets load_eval_dir(const fs::path& eval_dir);  // problems/ and plans/ below eval_dir

// Predicates of feedback-problem initial states and goals that the
// description does not describe.
std::vector<std::string> undescribed_problem_predicates(const DomainDescription& desc, const FeedbackAssets& assets);

// ---------------------------------------------------------------------------
// Configuration

// "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::string_view text);

struct ExperimentConfig {
    fs::path dataset_root = "dataset";
    fs::path output_dir = "runs";
    std::vector<std::string> domains;
    std::vector<PipelineKind> pipelines;
    std::vector<DescriptionClass> classes{DescriptionClass::Simple, DescriptionClass::Detailed};
    std::size_t trials = 20;  // per (domain, pipeline), split evenly over classes
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    BackendConfig backend;  // relative script/defect paths resolve against the domain directory
    std::size_t construction_retries = 5;
    std::size_t budget = 15;
    std::size_t child_cap = 10;
    double weight = 1.0;
    std::size_t syntax_retries = 3;
    std::size_t landmark_plans = 2;
    std::size_t eval_plans = 100;  // planner k for the backward HDE direction
    std::optional<fs::path> prompts_dir;
    std::optional<fs::path> templates_dir;

    // Applies one key; ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    static ExperimentConfig from_text(std::string_view text);
    // ConfigError when the grid cannot run.
    void check() const;

    PipelineConfig pipeline_config(PipelineKind kind, std::uint64_t trial_seed) const;
    std::size_t trials_per_class() const;
};

// ---------------------------------------------------------------------------
// Trials

struct TrialKey {
    std::string domain;
    PipelineKind pipeline = PipelineKind::N;
    DescriptionClass cls = DescriptionClass::Simple;
    std::size_t trial = 0;

    std::string str() const;  // "domain/pipeline/class/trial"
    auto operator<=>(const TrialKey&) const = default;
};

// Stable 64-bit seed of the trial coordinates.
std::uint64_t trial_seed(std::uint64_t base, const TrialKey& key);

struct TrialRecord {
    TrialKey key;
    std::uint64_t seed = 0;
    std::optional<HdeBreakdown> hde;  // present iff construction succeeded
    Termination termination = Termination::Failure;
    std::size_t construction_calls = 0;
    std::size_t llm_calls = 0;  // refinement calls
    std::size_t expansions = 0;
    double wall_time = 0.0;
    std::string failure;

    Rational score() const;  // 0 without an HDE breakdown
    std::string to_json() const;
    static TrialRecord from_json(const std::string& line);
};

struct TrialOutput {
    TrialRecord record;
    std::optional<ConstructionResult> construction;
    std::optional<RunResult> run;
    std::vector<fs::path> construction_reads;  // files read while constructing
};

// Construction, refinement and evaluation of one trial; artifacts go below
// `artifact_dir` when it is nonempty. Errors are recorded, not thrown.
TrialOutput run_trial(const ExperimentConfig& cfg, const TrialKey& key, const fs::path& artifact_dir = {});

std::vector<TrialKey> grid_keys(const ExperimentConfig& cfg);

// Runs every missing trial, appending to <output_dir>/records.jsonl, then
// writes report.csv and report.txt. Returns all records.
std::vector<TrialRecord> run_grid(const ExperimentConfig& cfg);

std::vector<TrialRecord> read_records(const fs::path& path);

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
    std::string domain;  // "aggregate" for the summary rows
    std::string pipeline;
    std::size_t trials = 0;
    double mean_pct = 0.0;
    double sem_pct = 0.0;
    std::size_t perfect = 0;
};

std::vector<ReportRow> report_rows(const std::vector<TrialRecord>& records);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_text(const std::vector<ReportRow>& rows);

}  // namespace forge
