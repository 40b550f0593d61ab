#include "forge/experiment.hpp"

#include "forge/io.hpp"
#include "forge/pddl_text.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

namespace forge {

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        if (comma == std::string_view::npos) comma = s.size();
        auto item = trim(s.substr(pos, comma - pos));
        if (!item.empty()) out.emplace_back(item);
        pos = comma + 1;
    }
    return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Assets

std::string plan_file_name(const std::string& problem_id, std::size_t index) {
    std::ostringstream out;
    out << problem_id << '-' << std::setw(3) << std::setfill('0') << index << ".soln";
    return out.str();
}

void write_plans(const fs::path& dir, const std::string& problem_id, const std::vector<Plan>& plans) {
    for (std::size_t i = 0; i < plans.size(); ++i) {
        write_text(dir / plan_file_name(problem_id, i), print_plan(plans[i]));
    }
}

std::vector<Plan> read_plans(const fs::path& dir, const std::string& problem_id) {
    const std::regex name("^" + std::regex_replace(problem_id, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") +
                          R"(-(\d+)\.soln$)");
    std::vector<Plan> out;
    for (const auto& path : list_files(dir, ".soln")) {
        if (!std::regex_match(path.filename().string(), name)) continue;
        try {
            out.push_back(parse_plan(read_text(path)));
        } catch (const SourceError& e) {
            throw std::runtime_error(path.string() + ": " + e.render());
        }
    }
    return out;
}

std::vector<NamedProblem> read_problems(const fs::path& dir) {
    std::vector<NamedProblem> out;
    for (const auto& path : list_files(dir, ".pddl")) {
        try {
            out.push_back({path.stem().string(), parse_problem(read_text(path))});
        } catch (const SourceError& e) {
            throw std::runtime_error(path.string() + ": " + e.render());
        }
    }
    return out;
}

AssetSummary gen_assets(const fs::path& domain_dir, const AssetOptions& opts) {
    const DatasetLayout layout{domain_dir};
    Domain gt;
    try {
        gt = parse_domain(read_text(layout.domain()));
    } catch (const SourceError& e) {
        throw std::runtime_error(layout.domain().string() + ": " + e.render());
    }
    const auto pool = list_files(layout.pool(), ".pddl");

    fs::remove_all(domain_dir / "feedback");
    fs::remove_all(domain_dir / "eval");
    fs::create_directories(layout.feedback_problems());
    fs::create_directories(layout.feedback_plans());
    fs::create_directories(layout.feedback_landmarks());
    fs::create_directories(layout.eval_problems());
    fs::create_directories(layout.eval_plans());

    AssetSummary summary;
    for (const auto& path : pool) {
        if (summary.feedback.size() >= opts.feedback_problems && summary.eval.size() >= opts.eval_problems) break;
        const std::string id = path.stem().string();
        const std::string text = read_text(path);
        Problem problem;
        try {
            problem = parse_problem(text);
        } catch (const SourceError& e) {
            throw std::runtime_error(path.string() + ": " + e.render());
        }
        const bool for_feedback = summary.feedback.size() < opts.feedback_problems;
        PlannerConfig cfg = opts.planner;
        cfg.k = for_feedback ? opts.feedback_plans : opts.eval_plans;
        PlanSet plans = enumerate_plans(gt, problem, cfg);
        if (plans.status == PlanSearchStatus::RebindFailure) {
            throw std::runtime_error(path.string() + " does not bind to the domain:\n" + render(plans.diagnostics));
        }
        if (plans.plans.empty()) {
            summary.skipped.push_back(id);
            continue;
        }
        if (for_feedback) {
            write_text(layout.feedback_problems() / (id + ".pddl"), text);
            write_plans(layout.feedback_plans(), id, plans.plans);
            write_text(layout.feedback_landmarks() / (id + ".lmk"),
                       write_landmarks(extract_action_landmarks(gt, problem)));
            summary.feedback.push_back(id);
        } else {
            write_text(layout.eval_problems() / (id + ".pddl"), text);
            write_plans(layout.eval_plans(), id, plans.plans);
            summary.eval.push_back(id);
        }
    }
    const std::size_t need = opts.feedback_problems + opts.eval_problems;
    const std::size_t have = summary.feedback.size() + summary.eval.size();
    if (have < need) {
        throw std::runtime_error("pool of " + domain_dir.string() + " has " + std::to_string(have) +
                                 " solvable problems, " + std::to_string(need) + " needed (short by " +
                                 std::to_string(need - have) + ")");
    }
    return summary;
}

FeedbackAssets load_feedback_assets(const fs::path& domain_dir) {
    const DatasetLayout layout{domain_dir};
    FeedbackAssets a;
    a.problems = read_problems(layout.feedback_problems());
    for (const auto& p : a.problems) {
        a.plans[p.id] = read_plans(layout.feedback_plans(), p.id);
        const auto lmk = layout.feedback_landmarks() / (p.id + ".lmk");
        if (fs::exists(lmk)) {
            try {
                a.landmarks[p.id] = read_landmarks(read_text(lmk));
            } catch (const SourceError& e) {
                throw std::runtime_error(lmk.string() + ": " + e.render());
            }
        }
    }
    return a;
}

EvalAssets load_eval_dir(const fs::path& eval_dir) {
    EvalAssets a;
    a.problems = read_problems(eval_dir / "problems");
    for (const auto& p : a.problems) {
        a.plans[p.id] = read_plans(eval_dir / "plans", p.id);
    }
    return a;
}

EvalAssets load_eval_assets(const fs::path& domain_dir) {
    return load_eval_dir(domain_dir / "eval");
}

std::vector<std::string> undescribed_problem_predicates(const DomainDescription& desc, const FeedbackAssets& assets) {
    std::set<std::string> missing;
    for (const auto& np : assets.problems) {
        for (const auto* set : {&np.problem.init, &np.problem.goal}) {
            for (const auto& atom : *set) {
                if (!desc.has_predicate(atom.predicate)) missing.insert(atom.predicate);
            }
        }
    }
    return {missing.begin(), missing.end()};
}

// ---------------------------------------------------------------------------
// Configuration

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    int line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out[key] = value;
    }
    return out;
}

namespace {

std::size_t to_count(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long long n = std::stoll(v, &used);
        if (used != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
    }
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    try {
        if (key == "dataset_root") dataset_root = value;
        else if (key == "output_dir") output_dir = value;
        else if (key == "domains") domains = split_list(value);
        else if (key == "pipelines") {
            pipelines.clear();
            for (const auto& p : split_list(value)) pipelines.push_back(parse_pipeline(p));
        } else if (key == "description_classes") {
            classes.clear();
            for (const auto& c : split_list(value)) classes.push_back(parse_description_class(c));
        } else if (key == "trials") trials = to_count(key, value);
        else if (key == "seed") seed = std::stoull(value);
        else if (key == "workers") workers = to_count(key, value);
        else if (key == "construction_retries") construction_retries = to_count(key, value);
        else if (key == "budget") budget = to_count(key, value);
        else if (key == "child_cap") child_cap = to_count(key, value);
        else if (key == "weight") weight = to_real(key, value);
        else if (key == "syntax_retries") syntax_retries = to_count(key, value);
        else if (key == "landmark_plans") landmark_plans = to_count(key, value);
        else if (key == "eval_plans") eval_plans = to_count(key, value);
        else if (key == "prompts_dir") prompts_dir = fs::path(value);
        else if (key == "templates_dir") templates_dir = fs::path(value);
        else if (key == "backend") backend.kind = parse_backend_kind(value);
        else if (key == "backend.endpoint") backend.remote.endpoint = value;
        else if (key == "backend.model") backend.remote.model_name = value;
        else if (key == "backend.temperature") backend.remote.temperature = to_real(key, value);
        else if (key == "backend.api_key_env") backend.remote.api_key_env = value;
        else if (key == "backend.timeout") backend.remote.timeout_seconds = to_real(key, value);
        else if (key == "backend.max_retries") backend.remote.max_retries = static_cast<int>(to_count(key, value));
        else if (key == "backend.requests_per_second") backend.remote.requests_per_second = to_real(key, value);
        else if (key == "backend.script") backend.script_path = value;
        else if (key == "backend.defect_base") backend.defect_base_path = value;
        else if (key == "backend.defect_spec") backend.defect_spec_path = value;
        else if (key == "backend.repair_probability") backend.repair_probability = to_real(key, value);
        else throw ConfigError("unknown config key " + key);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_text(std::string_view text) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : parse_key_values(text)) cfg.set(k, v);
    return cfg;
}

std::size_t ExperimentConfig::trials_per_class() const {
    return classes.empty() ? 0 : trials / classes.size();
}

void ExperimentConfig::check() const {
    if (domains.empty()) throw ConfigError("no domains configured");
    if (pipelines.empty()) throw ConfigError("no pipelines configured");
    if (classes.empty()) throw ConfigError("no description classes configured");
    if (trials == 0 || trials % classes.size() != 0) {
        throw ConfigError("trials must be a positive multiple of the number of description classes");
    }
    if (workers == 0) throw ConfigError("workers must be positive");
    if (budget == 0) throw ConfigError("budget must be positive");
    if (construction_retries == 0) throw ConfigError("construction_retries must be positive");
    if (landmark_plans == 0 || eval_plans == 0) throw ConfigError("planner k must be positive");
    if (backend.kind == BackendConfig::Kind::Remote) {
        backend.check();
    } else if (backend.kind == BackendConfig::Kind::Scripted && backend.script_path.empty()) {
        throw ConfigError("scripted backend needs backend.script");
    } else if (backend.kind == BackendConfig::Kind::Mutation) {
        if (backend.defect_spec_path.empty()) throw ConfigError("mutation backend needs backend.defect_spec");
        if (backend.repair_probability < 0 || backend.repair_probability > 1) {
            throw ConfigError("backend.repair_probability must lie in [0, 1]");
        }
    }
}

PipelineConfig ExperimentConfig::pipeline_config(PipelineKind kind, std::uint64_t trial_seed) const {
    PipelineConfig p;
    p.kind = kind;
    p.budget = budget;
    p.child_cap = child_cap;
    p.weight = weight;
    p.landmark_planner.k = landmark_plans;
    p.seed = trial_seed;
    p.syntax_retry_in_refinement = syntax_retries;
    return p;
}

// ---------------------------------------------------------------------------
// Trials

std::string TrialKey::str() const {
    return domain + "/" + to_string(pipeline) + "/" + to_string(cls) + "/" + std::to_string(trial);
}

std::uint64_t trial_seed(std::uint64_t base, const TrialKey& key) {
    std::string coords = key.domain;
    coords += '\0';
    coords += to_string(key.pipeline);
    coords += '\0';
    coords += to_string(key.cls);
    coords += '\0';
    coords += std::to_string(key.trial);
    return base ^ fnv1a(coords);
}

Rational TrialRecord::score() const {
    return hde ? hde->aggregate : Rational(0);
}

std::string TrialRecord::to_json() const {
    nlohmann::ordered_json j;
    j["domain"] = key.domain;
    j["pipeline"] = to_string(key.pipeline);
    j["class"] = to_string(key.cls);
    j["trial"] = key.trial;
    j["seed"] = seed;
    j["termination"] = to_string(termination);
    j["construction_calls"] = construction_calls;
    j["llm_calls"] = llm_calls;
    j["expansions"] = expansions;
    j["wall_time"] = wall_time;
    j["failure"] = failure;
    if (hde) {
        nlohmann::ordered_json h;
        h["aggregate"] = to_string(hde->aggregate);
        h["per_problem"] = nlohmann::ordered_json::array();
        for (const auto& e : hde->per_problem) {
            h["per_problem"].push_back({{"problem", e.problem_id},
                                        {"forward_num", e.forward_num},
                                        {"forward_den", e.forward_den},
                                        {"backward_num", e.backward_num},
                                        {"backward_den", e.backward_den},
                                        {"score", to_string(e.score)},
                                        {"flags", e.flags}});
        }
        j["hde"] = std::move(h);
    } else {
        j["hde"] = nullptr;
    }
    return j.dump();
}

TrialRecord TrialRecord::from_json(const std::string& line) {
    auto j = nlohmann::json::parse(line);
    TrialRecord r;
    r.key.domain = j.at("domain").get<std::string>();
    r.key.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
    r.key.cls = parse_description_class(j.at("class").get<std::string>());
    r.key.trial = j.at("trial").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.termination = parse_termination(j.at("termination").get<std::string>());
    r.construction_calls = j.value("construction_calls", std::size_t{0});
    r.llm_calls = j.value("llm_calls", std::size_t{0});
    r.expansions = j.value("expansions", std::size_t{0});
    r.wall_time = j.value("wall_time", 0.0);
    r.failure = j.value("failure", std::string());
    if (j.contains("hde") && !j["hde"].is_null()) {
        HdeBreakdown h;
        h.aggregate = parse_rational(j["hde"].at("aggregate").get<std::string>());
        for (const auto& p : j["hde"].at("per_problem")) {
            HdeEntry e;
            e.problem_id = p.at("problem").get<std::string>();
            e.forward_num = p.at("forward_num").get<std::size_t>();
            e.forward_den = p.at("forward_den").get<std::size_t>();
            e.backward_num = p.at("backward_num").get<std::size_t>();
            e.backward_den = p.at("backward_den").get<std::size_t>();
            if (e.forward_den) e.forward = Rational(e.forward_num, e.forward_den);
            if (e.backward_den) e.backward = Rational(e.backward_num, e.backward_den);
            e.score = parse_rational(p.at("score").get<std::string>());
            e.flags = p.at("flags").get<std::vector<std::string>>();
            h.per_problem.push_back(std::move(e));
        }
        r.hde = std::move(h);
    }
    return r;
}

namespace {

BackendConfig resolve_backend(const BackendConfig& in, const DatasetLayout& layout) {
    BackendConfig out = in;
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (layout.dir / p).string();
    };
    resolve(out.script_path);
    resolve(out.defect_spec_path);
    if (out.defect_base_path.empty()) {
        out.defect_base_path = layout.domain().string();
    } else {
        resolve(out.defect_base_path);
    }
    return out;
}

}  // namespace

TrialOutput run_trial(const ExperimentConfig& cfg, const TrialKey& key, const fs::path& artifact_dir) {
    const auto start = std::chrono::steady_clock::now();
    const DatasetLayout layout{cfg.dataset_root / key.domain};
    TrialOutput out;
    TrialRecord& rec = out.record;
    rec.key = key;
    rec.seed = trial_seed(cfg.seed, key);
    try {
        auto backend = make_backend(resolve_backend(cfg.backend, layout), rec.seed);
        ConstructionOptions copts;
        copts.domain_name = key.domain;
        copts.retry_limit = cfg.construction_retries;
        if (cfg.prompts_dir) copts.prompts = PromptSet::load(*cfg.prompts_dir);
        const FeedbackTemplates templates =
            cfg.templates_dir ? FeedbackTemplates::load(*cfg.templates_dir) : FeedbackTemplates::builtin();

        {
            ReadTrace trace;
            const DomainDescription desc = DomainDescription::parse(read_text(layout.description()));
            out.construction = build_initial_domain(desc, key.cls, *backend, copts);
            out.construction_reads = trace.paths();
        }
        const ConstructionResult& cr = *out.construction;
        rec.construction_calls = cr.llm_calls;
        if (!artifact_dir.empty()) {
            write_text(artifact_dir / "construction.txt", cr.transcript.dump());
        }
        if (!cr.ok) {
            rec.termination = Termination::Failure;
            rec.failure = cr.failure;
        } else {
            const FeedbackAssets feedback = load_feedback_assets(layout.dir);
            out.run = run_pipeline(cr, cfg.pipeline_config(key.pipeline, rec.seed), feedback, *backend, templates);
            const RunResult& rr = *out.run;
            rec.termination = rr.termination;
            rec.llm_calls = rr.llm_calls;
            rec.expansions = rr.expansions;
            rec.failure = rr.failure;

            const Domain gt = parse_domain(read_text(layout.domain()));
            const EvalAssets eval = load_eval_assets(layout.dir);
            PlannerConfig pc;
            pc.k = cfg.eval_plans;
            rec.hde = hde_domain(gt, rr.final_domain, eval.problems, eval.plans, pc);
            if (!artifact_dir.empty()) {
                write_run_artifacts(rr, artifact_dir);
                write_text(artifact_dir / "hde.csv", rec.hde->to_csv());
            }
        }
    } catch (const std::exception& e) {
        rec.termination = Termination::Failure;
        rec.failure = e.what();
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<TrialKey> grid_keys(const ExperimentConfig& cfg) {
    std::vector<TrialKey> keys;
    for (const auto& d : cfg.domains) {
        for (auto p : cfg.pipelines) {
            for (auto c : cfg.classes) {
                for (std::size_t t = 0; t < cfg.trials_per_class(); ++t) keys.push_back({d, p, c, t});
            }
        }
    }
    return keys;
}

std::vector<TrialRecord> read_records(const fs::path& path) {
    std::vector<TrialRecord> out;
    if (!fs::exists(path)) return out;
    std::istringstream in(read_text(path));
    for (std::string line; std::getline(in, line);) {
        if (trim(line).empty()) continue;
        try {
            out.push_back(TrialRecord::from_json(line));
        } catch (const std::exception&) {
            // A torn final line from an interrupted run; that trial reruns.
        }
    }
    return out;
}

std::vector<TrialRecord> run_grid(const ExperimentConfig& cfg) {
    cfg.check();
    for (const auto& d : cfg.domains) {
        const DatasetLayout layout{cfg.dataset_root / d};
        if (!fs::exists(layout.description())) throw ConfigError("missing " + layout.description().string());
        if (!fs::is_directory(layout.feedback_problems()) || !fs::is_directory(layout.eval_problems())) {
            throw ConfigError("assets missing for " + d + "; run gen-assets first");
        }
        const bool needs_coverage = std::any_of(cfg.pipelines.begin(), cfg.pipelines.end(), uses_plan_feedback);
        if (needs_coverage) {
            auto missing = undescribed_problem_predicates(DomainDescription::parse(read_text(layout.description())),
                                                          load_feedback_assets(layout.dir));
            if (!missing.empty()) {
                std::string names;
                for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
                throw ConfigError("description of " + d + " lacks predicates used by feedback problems: " + names);
            }
        }
    }

    fs::create_directories(cfg.output_dir);
    const fs::path records_path = cfg.output_dir / "records.jsonl";
    std::set<TrialKey> done;
    for (const auto& r : read_records(records_path)) done.insert(r.key);
    if (fs::exists(records_path)) {
        const std::string existing = read_text(records_path);
        if (!existing.empty() && existing.back() != '\n') {
            std::ofstream(records_path, std::ios::app | std::ios::binary) << '\n';
        }
    }

    std::vector<TrialKey> todo;
    for (const auto& k : grid_keys(cfg)) {
        if (!done.contains(k)) todo.push_back(k);
    }

    std::mutex write_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            TrialOutput t = run_trial(cfg, todo[i], cfg.output_dir / "trials" / todo[i].str());
            std::lock_guard lock(write_mutex);
            std::ofstream out(records_path, std::ios::app | std::ios::binary);
            out << t.record.to_json() << '\n';
            out.flush();
        }
    };
    const std::size_t width = std::min(cfg.workers, std::max<std::size_t>(todo.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < width; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    auto records = read_records(records_path);
    const auto rows = report_rows(records);
    write_text(cfg.output_dir / "report.csv", report_csv(rows));
    write_text(cfg.output_dir / "report.txt", report_text(rows));
    return records;
}

// ---------------------------------------------------------------------------
// Reports

std::vector<ReportRow> report_rows(const std::vector<TrialRecord>& records) {
    std::map<std::pair<std::string, int>, std::vector<Rational>> groups;
    for (const auto& r : records) {
        groups[{r.key.domain, static_cast<int>(r.key.pipeline)}].push_back(r.score());
    }
    std::vector<ReportRow> rows;
    std::map<int, std::vector<const ReportRow*>> by_pipeline;
    for (const auto& [k, scores] : groups) {
        ReportRow row;
        row.domain = k.first;
        row.pipeline = to_string(static_cast<PipelineKind>(k.second));
        row.trials = scores.size();
        double sum = 0;
        for (const auto& s : scores) sum += to_double(s);
        const double mean = sum / static_cast<double>(scores.size());
        double ss = 0;
        for (const auto& s : scores) ss += (to_double(s) - mean) * (to_double(s) - mean);
        const double n = static_cast<double>(scores.size());
        row.mean_pct = 100.0 * mean;
        row.sem_pct = scores.size() > 1 ? 100.0 * std::sqrt(ss / (n - 1)) / std::sqrt(n) : 0.0;
        row.perfect = perfect_count(scores);
        rows.push_back(row);
    }
    std::map<int, ReportRow> aggregate;
    std::map<int, std::size_t> domains;
    for (const auto& [k, scores] : groups) {
        (void)scores;
        auto& a = aggregate[k.second];
        const auto& row = *std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) {
            return r.domain == k.first && r.pipeline == to_string(static_cast<PipelineKind>(k.second));
        });
        a.domain = "aggregate";
        a.pipeline = row.pipeline;
        a.trials += row.trials;
        a.mean_pct += row.mean_pct;
        a.perfect += row.perfect;
        ++domains[k.second];
    }
    for (auto& [p, a] : aggregate) {
        a.mean_pct /= static_cast<double>(domains[p]);
        a.sem_pct = std::nan("");
        rows.push_back(a);
    }
    return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "domain,pipeline,trials,mean_hde_pct,sem_pct,perfect\n" << std::fixed << std::setprecision(4);
    for (const auto& r : rows) {
        out << r.domain << ',' << r.pipeline << ',' << r.trials << ',' << r.mean_pct << ',';
        if (!std::isnan(r.sem_pct)) out << r.sem_pct;
        out << ',' << r.perfect << '\n';
    }
    return out.str();
}

std::string report_text(const std::vector<ReportRow>& rows) {
    std::vector<std::array<std::string, 5>> cells;
    cells.push_back({"domain", "pipeline", "trials", "HDE %", "# perfect"});
    for (const auto& r : rows) {
        std::ostringstream hde;
        hde << std::fixed << std::setprecision(1) << r.mean_pct;
        if (!std::isnan(r.sem_pct)) hde << "±" << r.sem_pct;
        cells.push_back({r.domain, r.pipeline, std::to_string(r.trials), hde.str(), std::to_string(r.perfect)});
    }
    // Width in code points so "±" counts once.
    auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    std::array<std::size_t, 5> w{};
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < 5; ++i) w[i] = std::max(w[i], width(row[i]));
    }
    std::string out;
    for (const auto& row : cells) {
        std::string line;
        for (std::size_t i = 0; i < 5; ++i) {
            const bool right = i >= 2;
            std::string pad(w[i] - width(row[i]), ' ');
            line += right ? pad + row[i] : row[i] + pad;
            if (i + 1 < 5) line += "  ";
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

}  // namespace forge
