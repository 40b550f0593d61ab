// forge: dataset assets, single runs, experiment grids and reports.

#include "forge/construction.hpp"
#include "forge/experiment.hpp"
#include "forge/hde.hpp"
#include "forge/io.hpp"
#include "forge/landmarks.hpp"
#include "forge/pddl_text.hpp"
#include "forge/planner.hpp"
#include "forge/search.hpp"
#include "forge/semantics.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace forge;

namespace {

struct BackendFlags {
    std::string kind = "mutation";
    std::string script;
    std::string defect_base;
    std::string defect_spec;
    double repair_probability = 1.0;
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    double temperature = 0.0;

    void add_to(CLI::App* app) {
        app->add_option("--backend", kind, "remote, scripted or mutation")->capture_default_str();
        app->add_option("--script", script, "script file for the scripted backend");
        app->add_option("--defect-base", defect_base, "domain the mutation backend starts from");
        app->add_option("--defect-spec", defect_spec, "defect edits for the mutation backend");
        app->add_option("--repair-probability", repair_probability)->capture_default_str();
        app->add_option("--endpoint", endpoint, "chat-completions URL");
        app->add_option("--model", model);
        app->add_option("--api-key-env", api_key_env, "environment variable holding the API key");
        app->add_option("--temperature", temperature)->capture_default_str();
    }

    // Only flags given on the command line override `cfg`.
    void apply(CLI::App* app, BackendConfig& cfg) const {
        if (app->count("--backend")) cfg.kind = parse_backend_kind(kind);
        // Paths from the command line are relative to the working directory.
        auto absolute = [](const std::string& p) { return std::filesystem::absolute(p).string(); };
        if (app->count("--script")) cfg.script_path = absolute(script);
        if (app->count("--defect-base")) cfg.defect_base_path = absolute(defect_base);
        if (app->count("--defect-spec")) cfg.defect_spec_path = absolute(defect_spec);
        if (app->count("--repair-probability")) cfg.repair_probability = repair_probability;
        if (app->count("--endpoint")) cfg.remote.endpoint = endpoint;
        if (app->count("--model")) cfg.remote.model_name = model;
        if (app->count("--api-key-env")) cfg.remote.api_key_env = api_key_env;
        if (app->count("--temperature")) cfg.remote.temperature = temperature;
    }
};

Domain load_domain(const std::string& path) {
    try {
        return parse_domain(read_text(path));
    } catch (const SourceError& e) {
        throw std::runtime_error(path + ": " + e.render());
    }
}

Problem load_problem(const std::string& path) {
    try {
        return parse_problem(read_text(path));
    } catch (const SourceError& e) {
        throw std::runtime_error(path + ": " + e.render());
    }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : ExperimentConfig::from_text(read_text(path));
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain generation with plan and landmark feedback"};
    app.require_subcommand(1);

    // gen-assets
    auto* gen = app.add_subcommand("gen-assets", "select feedback/eval problems and write plans and landmarks");
    std::string gen_dir;
    AssetOptions asset_opts;
    gen->add_option("dir", gen_dir, "dataset domain directory")->required();
    gen->add_option("--feedback-problems", asset_opts.feedback_problems)->capture_default_str();
    gen->add_option("--eval-problems", asset_opts.eval_problems)->capture_default_str();
    gen->add_option("--feedback-plans", asset_opts.feedback_plans)->capture_default_str();
    gen->add_option("--eval-plans", asset_opts.eval_plans)->capture_default_str();

    // construct
    auto* construct = app.add_subcommand("construct", "build an initial domain from a description");
    std::string desc_path, cls_name = "simple", construct_out, transcript_out, prompts_dir, domain_name = "generated";
    std::uint64_t construct_seed = 0;
    std::size_t construct_retries = 5;
    BackendFlags construct_backend;
    construct->add_option("--description", desc_path)->required();
    construct->add_option("--class", cls_name)->capture_default_str();
    construct->add_option("--domain-name", domain_name)->capture_default_str();
    construct->add_option("--seed", construct_seed)->capture_default_str();
    construct->add_option("--retries", construct_retries)->capture_default_str();
    construct->add_option("--prompts-dir", prompts_dir);
    construct->add_option("--out", construct_out, "domain file (stdout when absent)");
    construct->add_option("--transcript", transcript_out);
    construct_backend.add_to(construct);

    // run
    auto* run = app.add_subcommand("run", "construct, refine and evaluate one trial");
    std::string run_domain_dir, run_pipeline_name = "N", run_class = "simple", run_out, run_config;
    std::uint64_t run_seed = 0;
    std::vector<std::string> run_sets;
    BackendFlags run_backend;
    run->add_option("--domain-dir", run_domain_dir)->required();
    run->add_option("--pipeline", run_pipeline_name, "N, LR, LS, VR, VS, LVR or LVS")->capture_default_str();
    run->add_option("--class", run_class)->capture_default_str();
    run->add_option("--seed", run_seed, "base seed")->capture_default_str();
    run->add_option("--out", run_out, "artifact directory");
    run->add_option("--config", run_config, "key = value file");
    run->add_option("--set", run_sets, "key=value overrides");
    run_backend.add_to(run);

    // eval
    auto* eval = app.add_subcommand("eval", "score a generated domain against the ground truth");
    std::string eval_gt, eval_gen, eval_dir, eval_csv;
    std::size_t eval_k = 100;
    eval->add_option("--gt", eval_gt)->required();
    eval->add_option("--gen", eval_gen)->required();
    eval->add_option("--eval-dir", eval_dir, "directory with problems/ and plans/")->required();
    eval->add_option("-k", eval_k, "plans drawn from the generated domain")->capture_default_str();
    eval->add_option("--csv", eval_csv);

    // plan
    auto* plan = app.add_subcommand("plan", "enumerate the k shortest plans");
    std::string plan_domain, plan_problem, plan_out;
    PlannerConfig plan_cfg;
    std::size_t plan_max_len = 0;
    plan->add_option("--domain", plan_domain)->required();
    plan->add_option("--problem", plan_problem)->required();
    plan->add_option("-k", plan_cfg.k)->capture_default_str();
    plan->add_option("--max-length", plan_max_len, "0: automatic");
    plan->add_option("--node-limit", plan_cfg.node_limit)->capture_default_str();
    plan->add_flag("--distinct-args", plan_cfg.distinct_args);
    plan->add_option("--out-dir", plan_out, "write <problem>-NNN.soln files here");

    // landmarks
    auto* lm = app.add_subcommand("landmarks", "disjunctive action landmarks of a problem");
    std::string lm_domain, lm_problem, lm_out;
    lm->add_option("--domain", lm_domain)->required();
    lm->add_option("--problem", lm_problem)->required();
    lm->add_option("--out", lm_out);

    // validate
    auto* val = app.add_subcommand("validate", "check a plan; exit status 1 when invalid");
    std::string val_domain, val_problem, val_plan;
    val->add_option("--domain", val_domain)->required();
    val->add_option("--problem", val_problem)->required();
    val->add_option("--plan", val_plan)->required();

    // report
    auto* rep = app.add_subcommand("report", "summary tables from trial records");
    std::string rep_records, rep_csv;
    rep->add_option("records", rep_records, "records.jsonl")->required();
    rep->add_option("--csv", rep_csv);

    // grid
    auto* grid = app.add_subcommand("grid", "run (or resume) an experiment grid");
    std::string grid_config;
    std::vector<std::string> grid_sets;
    grid->add_option("--config", grid_config)->required();
    grid->add_option("--set", grid_sets, "key=value overrides");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto summary = gen_assets(gen_dir, asset_opts);
            std::cout << "feedback:";
            for (const auto& id : summary.feedback) std::cout << ' ' << id;
            std::cout << "\neval:";
            for (const auto& id : summary.eval) std::cout << ' ' << id;
            std::cout << "\nskipped:";
            for (const auto& id : summary.skipped) std::cout << ' ' << id;
            std::cout << '\n';
            return 0;
        }
        if (*construct) {
            BackendConfig bc;
            construct_backend.apply(construct, bc);
            auto backend = make_backend(bc, construct_seed);
            ConstructionOptions opts;
            opts.domain_name = domain_name;
            opts.retry_limit = construct_retries;
            if (!prompts_dir.empty()) opts.prompts = PromptSet::load(prompts_dir);
            auto desc = DomainDescription::parse(read_text(desc_path));
            auto result = build_initial_domain(desc, parse_description_class(cls_name), *backend, opts);
            if (!transcript_out.empty()) write_text(transcript_out, result.transcript.dump());
            if (!result.ok) {
                std::cerr << "construction failed: " << result.failure << '\n';
                return 1;
            }
            const std::string text = print_domain(result.domain);
            if (construct_out.empty()) {
                std::cout << text;
            } else {
                write_text(construct_out, text);
            }
            std::cerr << result.llm_calls << " backend calls\n";
            return 0;
        }
        if (*run) {
            ExperimentConfig cfg = load_config(run_config, run_sets);
            run_backend.apply(run, cfg.backend);
            if (run->count("--seed")) cfg.seed = run_seed;
            const fs::path dir = fs::absolute(run_domain_dir).lexically_normal();
            cfg.dataset_root = dir.has_filename() ? dir.parent_path() : dir.parent_path().parent_path();
            TrialKey key{dir.has_filename() ? dir.filename().string() : dir.parent_path().filename().string(),
                         parse_pipeline(run_pipeline_name), parse_description_class(run_class), 0};
            auto out = run_trial(cfg, key, run_out);
            const auto& rec = out.record;
            std::cout << "termination " << to_string(rec.termination) << ", " << rec.construction_calls
                      << " construction calls, " << rec.llm_calls << " refinement calls, " << rec.expansions
                      << " expansions\n";
            if (!rec.failure.empty()) std::cout << "failure: " << rec.failure << '\n';
            if (rec.hde) std::cout << rec.hde->to_table();
            return rec.hde ? 0 : 1;
        }
        if (*eval) {
            Domain gt = load_domain(eval_gt);
            Domain g = load_domain(eval_gen);
            EvalAssets assets = load_eval_dir(eval_dir);
            PlannerConfig pc;
            pc.k = eval_k;
            auto breakdown = hde_domain(gt, g, assets.problems, assets.plans, pc);
            std::cout << breakdown.to_table();
            if (!eval_csv.empty()) write_text(eval_csv, breakdown.to_csv());
            return 0;
        }
        if (*plan) {
            Domain d = load_domain(plan_domain);
            Problem p = load_problem(plan_problem);
            if (plan_max_len > 0) plan_cfg.max_plan_length = plan_max_len;
            auto set = enumerate_plans(d, p, plan_cfg);
            std::cerr << to_string(set.status) << ", horizon " << set.horizon << ", " << set.plans.size()
                      << " plans\n";
            if (!set.diagnostics.empty()) std::cerr << render(set.diagnostics);
            if (!plan_out.empty()) {
                write_plans(plan_out, fs::path(plan_problem).stem().string(), set.plans);
            } else {
                for (std::size_t i = 0; i < set.plans.size(); ++i) {
                    std::cout << "; plan " << i << '\n' << print_plan(set.plans[i]);
                }
            }
            return set.plans.empty() ? 1 : 0;
        }
        if (*lm) {
            auto text = write_landmarks(extract_action_landmarks(load_domain(lm_domain), load_problem(lm_problem)));
            if (lm_out.empty()) {
                std::cout << text;
            } else {
                write_text(lm_out, text);
            }
            return 0;
        }
        if (*val) {
            Plan p;
            try {
                p = parse_plan(read_text(val_plan));
            } catch (const SourceError& e) {
                throw std::runtime_error(val_plan + ": " + e.render());
            }
            auto verdict = validate_plan(load_domain(val_domain), load_problem(val_problem), p);
            std::cout << verdict.rendered;
            return verdict.valid() ? 0 : 1;
        }
        if (*rep) {
            auto rows = report_rows(read_records(rep_records));
            std::cout << report_text(rows);
            if (!rep_csv.empty()) write_text(rep_csv, report_csv(rows));
            return 0;
        }
        if (*grid) {
            auto records = run_grid(load_config(grid_config, grid_sets));
            std::cout << report_text(report_rows(records));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
