#include "forge/generator.hpp"

#include "forge/assets.hpp"
#include "forge/io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

namespace forge {

const char* to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "?";
}

Role parse_role(const std::string& s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    throw std::invalid_argument("unknown role " + s);
}

const Message* History::last(Role role) const {
    for (auto it = messages_.rbegin(); it != messages_.rend(); ++it) {
        if (it->role == role) return &*it;
    }
    return nullptr;
}

std::size_t History::count(Role role) const {
    return std::count_if(messages_.begin(), messages_.end(), [&](const Message& m) { return m.role == role; });
}

bool History::well_formed() const {
    if (messages_.empty() || messages_.front().role != Role::System) return false;
    for (std::size_t i = 1; i < messages_.size(); ++i) {
        const auto& m = messages_[i];
        if (m.role == Role::System || m.content.empty()) return false;
        Role expected = (i % 2 == 1) ? Role::User : Role::Assistant;
        if (m.role != expected) return false;
    }
    return true;
}

std::string History::dump() const {
    std::string out;
    for (const auto& m : messages_) {
        out += "### ";
        out += to_string(m.role);
        out += "\n";
        out += m.content;
        if (m.content.empty() || m.content.back() != '\n') out += '\n';
        out += '\n';
    }
    return out;
}

namespace {

void require_prompt(const History& history) {
    if (!history.well_formed() || history.back().role != Role::User) {
        throw BackendError("history must start with a system prompt and end with a user message");
    }
}

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scripted

std::vector<std::string> parse_script(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    bool any = false;
    for (auto line : split_lines(text)) {
        std::string_view bare = line;
        if (!bare.empty() && bare.back() == '\r') bare.remove_suffix(1);
        if (bare == "---") {
            out.push_back(current);
            current.clear();
            any = false;
            continue;
        }
        current.append(line);
        current += '\n';
        any = true;
    }
    if (any) out.push_back(current);
    return out;
}

Message ScriptedBackend::complete(const History& history) {
    require_prompt(history);
    std::lock_guard lock(mutex_);
    if (next_ >= responses_.size()) {
        throw BackendError("script exhausted after " + std::to_string(responses_.size()) + " responses");
    }
    return {Role::Assistant, responses_[next_++]};
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return next_;
}

// ---------------------------------------------------------------------------
// Defect edits

namespace {

const std::vector<std::pair<std::string, DefectEdit::Kind>> kEditNames = {
    {"remove-precondition", DefectEdit::Kind::RemovePrecondition},
    {"remove-add", DefectEdit::Kind::RemoveAdd},
    {"remove-del", DefectEdit::Kind::RemoveDel},
    {"add-precondition", DefectEdit::Kind::AddPrecondition},
    {"rename-predicate-in-action", DefectEdit::Kind::RenamePredicateInAction},
};

const char* edit_name(DefectEdit::Kind kind) {
    for (const auto& [name, k] : kEditNames) {
        if (k == kind) return name.c_str();
    }
    return "?";
}

AtomSet* edit_target(ActionSchema& a, DefectEdit::Kind kind) {
    switch (kind) {
        case DefectEdit::Kind::RemovePrecondition:
        case DefectEdit::Kind::AddPrecondition: return &a.pre;
        case DefectEdit::Kind::RemoveAdd: return &a.add;
        case DefectEdit::Kind::RemoveDel: return &a.del;
        default: return nullptr;
    }
}

const AtomSet* edit_target(const ActionSchema& a, DefectEdit::Kind kind) {
    return edit_target(const_cast<ActionSchema&>(a), kind);
}

bool mentions_predicate(const ActionSchema& a, const std::string& pred) {
    for (const auto* set : {&a.pre, &a.add, &a.del}) {
        for (const auto& atom : *set) {
            if (atom.predicate == pred) return true;
        }
    }
    return false;
}

void rename_in_action(ActionSchema& a, const std::string& from, const std::string& to) {
    for (auto* set : {&a.pre, &a.add, &a.del}) {
        AtomSet next;
        for (auto atom : *set) {
            if (atom.predicate == from) atom.predicate = to;
            next.insert(std::move(atom));
        }
        *set = std::move(next);
    }
}

}  // namespace

std::vector<std::string> DefectEdit::predicates() const {
    if (kind == Kind::RenamePredicateInAction) return {from, to};
    return {atom.predicate};
}

std::string DefectEdit::str() const {
    std::string out = edit_name(kind);
    out += ' ';
    out += action;
    out += ' ';
    if (kind == Kind::RenamePredicateInAction) {
        out += from + ' ' + to;
    } else {
        out += atom.str();
    }
    return out;
}

std::vector<DefectEdit> parse_defects(std::string_view text) {
    std::vector<DefectEdit> out;
    int line_no = 0;
    for (auto raw : split_lines(text)) {
        ++line_no;
        std::string_view line = raw;
        if (auto semi = line.find(';'); semi != std::string_view::npos) line = line.substr(0, semi);
        line = trim(line);
        if (line.empty()) continue;

        auto fail = [&](const std::string& why) { return SourceError(line_no, 1, why, std::string(line)); };
        std::istringstream words{std::string(line)};
        std::string op, action;
        words >> op >> action;
        auto it = std::find_if(kEditNames.begin(), kEditNames.end(), [&](const auto& p) { return p.first == op; });
        if (it == kEditNames.end()) throw fail("unknown edit " + op);
        if (action.empty()) throw fail("missing action name");

        DefectEdit e;
        e.kind = it->second;
        e.action = to_lower(action);
        std::string rest;
        std::getline(words, rest);
        rest = std::string(trim(rest));
        if (e.kind == DefectEdit::Kind::RenamePredicateInAction) {
            std::istringstream names(rest);
            std::string extra;
            names >> e.from >> e.to >> extra;
            if (e.to.empty() || !extra.empty()) throw fail("expected: rename-predicate-in-action ACTION FROM TO");
            e.from = to_lower(e.from);
            e.to = to_lower(e.to);
        } else {
            try {
                e.atom = parse_atom_text(rest);
            } catch (const SourceError& err) {
                throw fail("bad atom: " + err.message);
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

Domain apply_defect(const Domain& domain, const DefectEdit& edit) {
    Domain out = domain;
    ActionSchema* a = out.action(edit.action);
    if (!a) throw ConfigError("defect " + edit.str() + ": no action " + edit.action);
    switch (edit.kind) {
        case DefectEdit::Kind::RemovePrecondition:
        case DefectEdit::Kind::RemoveAdd:
        case DefectEdit::Kind::RemoveDel:
            if (edit_target(*a, edit.kind)->erase(edit.atom) == 0) {
                throw ConfigError("defect " + edit.str() + ": atom not present");
            }
            break;
        case DefectEdit::Kind::AddPrecondition:
            if (!a->pre.insert(edit.atom).second) {
                throw ConfigError("defect " + edit.str() + ": precondition already present");
            }
            break;
        case DefectEdit::Kind::RenamePredicateInAction: {
            const PredicateDecl* from = out.predicate(edit.from);
            if (!from || !mentions_predicate(*a, edit.from)) {
                throw ConfigError("defect " + edit.str() + ": action does not use " + edit.from);
            }
            if (!out.predicate(edit.to)) {
                PredicateDecl copy = *from;
                copy.name = edit.to;
                out.predicates.push_back(std::move(copy));
                a = out.action(edit.action);
            }
            rename_in_action(*a, edit.from, edit.to);
            break;
        }
    }
    auto diags = check_domain_wellformed(out);
    if (!diags.empty()) {
        throw ConfigError("defect " + edit.str() + " breaks the domain:\n" + render(diags));
    }
    return out;
}

bool defect_present(const Domain& domain, const DefectEdit& edit) {
    const ActionSchema* a = domain.action(edit.action);
    if (!a) return false;
    switch (edit.kind) {
        case DefectEdit::Kind::RemovePrecondition:
        case DefectEdit::Kind::RemoveAdd:
        case DefectEdit::Kind::RemoveDel:
            return !edit_target(*a, edit.kind)->contains(edit.atom);
        case DefectEdit::Kind::AddPrecondition:
            return a->pre.contains(edit.atom);
        case DefectEdit::Kind::RenamePredicateInAction:
            return mentions_predicate(*a, edit.to);
    }
    return false;
}

Domain revert_defect(const Domain& domain, const DefectEdit& edit, const Domain& base) {
    Domain out = domain;
    ActionSchema* a = out.action(edit.action);
    if (!a) return out;
    switch (edit.kind) {
        case DefectEdit::Kind::RemovePrecondition:
        case DefectEdit::Kind::RemoveAdd:
        case DefectEdit::Kind::RemoveDel:
            edit_target(*a, edit.kind)->insert(edit.atom);
            break;
        case DefectEdit::Kind::AddPrecondition:
            a->pre.erase(edit.atom);
            break;
        case DefectEdit::Kind::RenamePredicateInAction:
            rename_in_action(*a, edit.to, edit.from);
            if (!out.predicate(edit.from)) {
                if (const auto* decl = base.predicate(edit.from)) out.predicates.push_back(*decl);
            }
            break;
    }
    // Drop predicates the edit introduced once nothing uses them.
    std::erase_if(out.predicates, [&](const PredicateDecl& p) {
        if (base.predicate(p.name)) return false;
        return std::none_of(out.actions.begin(), out.actions.end(),
                            [&](const ActionSchema& s) { return mentions_predicate(s, p.name); });
    });
    return out;
}

namespace {

// The feedback text without its first fenced block.
std::string evidence_of(const std::string& feedback) {
    auto open = feedback.find("```");
    if (open == std::string::npos) return feedback;
    auto close = feedback.find("```", open + 3);
    if (close == std::string::npos) return feedback.substr(0, open);
    return feedback.substr(0, open) + feedback.substr(close + 3);
}

bool mentions_head(const std::string& text, const std::string& name) {
    const std::string head = "(" + name;
    for (auto pos = text.find(head); pos != std::string::npos; pos = text.find(head, pos + 1)) {
        auto next = pos + head.size();
        if (next < text.size() && (text[next] == ' ' || text[next] == ')')) return true;
    }
    return false;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Latest user message that is a construction or feedback prompt.
const Message* last_task(const History& history) {
    const auto& msgs = history.messages();
    for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
        if (it->role != Role::User) continue;
        if (it->content.starts_with(kFeedbackOpening) || it->content.find(kActionNameLabel) != std::string::npos) {
            return &*it;
        }
    }
    return nullptr;
}

std::string action_name_in(const std::string& prompt) {
    for (auto line : split_lines(prompt)) {
        if (line.starts_with(kActionNameLabel)) {
            return to_lower(trim(line.substr(kActionNameLabel.size())));
        }
    }
    return {};
}

void collect_types(const TypeHierarchy& types, const std::string& t, std::vector<std::string>& out) {
    for (std::string cur = t; cur != kRootType && types.contains(cur); cur = types.parent(cur)) {
        if (std::find(out.begin(), out.end(), cur) != out.end()) break;
        out.push_back(cur);
    }
}

}  // namespace

bool feedback_touches(const std::string& feedback, const DefectEdit& defect) {
    const std::string evidence = evidence_of(feedback);
    if (mentions_head(evidence, defect.action)) return true;
    for (const auto& p : defect.predicates()) {
        if (mentions_head(evidence, p)) return true;
    }
    return false;
}

std::string action_reply(const Domain& domain, const std::string& action) {
    const ActionSchema* a = domain.action(action);
    if (!a) throw BackendError("no action " + action + " to generate");
    std::vector<std::string> preds;
    for (const auto* set : {&a->pre, &a->add, &a->del}) {
        for (const auto& atom : *set) {
            if (std::find(preds.begin(), preds.end(), atom.predicate) == preds.end()) preds.push_back(atom.predicate);
        }
    }
    std::vector<std::string> types;
    for (const auto& p : a->params) collect_types(domain.types, p.type, types);

    std::string out = "```pddl\n" + print_action(*a) + "\n```\n```predicates\n";
    for (const auto& name : preds) {
        const PredicateDecl* decl = domain.predicate(name);
        if (!decl) continue;
        for (const auto& v : decl->params) collect_types(domain.types, v.type, types);
        out += print_predicate_decl(*decl) + " ; " + name + " holds\n";
    }
    out += "```\n```types\n";
    for (const auto& t : domain.types.names()) {
        if (std::find(types.begin(), types.end(), t) == types.end()) continue;
        const std::string& parent = domain.types.parent(t);
        out += t;
        if (parent != kRootType) out += " - " + parent;
        out += " ; a " + t + "\n";
    }
    out += "```\n";
    return out;
}

MutationBackend::MutationBackend(Domain base, std::vector<DefectEdit> defects, double repair_probability,
                                 std::uint64_t seed)
    : base_(std::move(base)), defects_(std::move(defects)), repair_probability_(repair_probability), seed_(seed) {
    if (repair_probability_ < 0.0 || repair_probability_ > 1.0) {
        throw ConfigError("repair probability must lie in [0, 1]");
    }
    defective_ = base_;
    for (const auto& d : defects_) defective_ = apply_defect(defective_, d);
}

Domain MutationBackend::domain_for(const History& history) const {
    const auto& msgs = history.messages();
    for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
        if (it->role != Role::Assistant || it->content.find("(define") == std::string::npos) continue;
        try {
            return parse_domain(extract_pddl_block(it->content));
        } catch (const SourceError&) {
        }
    }
    return defective_;
}

Message MutationBackend::complete(const History& history) {
    require_prompt(history);
    const Message* task = last_task(history);
    if (task && !task->content.starts_with(kFeedbackOpening)) {
        return {Role::Assistant, action_reply(defective_, action_name_in(task->content))};
    }
    Domain domain = domain_for(history);
    if (task) {
        std::uint64_t h = seed_;
        for (const auto& m : history.messages()) {
            h = fnv1a(to_string(m.role), h);
            h = fnv1a(m.content, h);
        }
        std::mt19937_64 rng(h);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        for (const auto& d : defects_) {
            if (!defect_present(domain, d) || !feedback_touches(task->content, d)) continue;
            if (coin(rng) < repair_probability_) domain = revert_defect(domain, d, base_);
        }
    }
    return {Role::Assistant, "```pddl\n" + print_domain(domain) + "```\n"};
}

// ---------------------------------------------------------------------------
// Remote

TokenBucket::TokenBucket(double rate_per_second, double capacity)
    : rate_(rate_per_second), capacity_(capacity), tokens_(capacity), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        lock.unlock();
        std::this_thread::sleep_for(wait);
        lock.lock();
    }
}

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty() || cfg_.model_name.empty()) {
        throw ConfigError("remote backend needs an endpoint and a model name");
    }
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) {
        throw ConfigError("remote endpoint must be an http(s) URL: " + cfg_.endpoint);
    }
    scheme_host_port_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : std::string("/");
    if (!cfg_.api_key_env.empty()) {
        const char* key = std::getenv(cfg_.api_key_env.c_str());
        if (!key || !*key) {
            throw ConfigError("environment variable " + cfg_.api_key_env + " is not set");
        }
        api_key_ = key;
    }
    if (cfg_.requests_per_second > 0) {
        bucket_ = std::make_unique<TokenBucket>(cfg_.requests_per_second, 1.0);
    }
}

std::string RemoteBackend::request_body(const History& history) const {
    nlohmann::ordered_json body;
    body["model"] = cfg_.model_name;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : history.messages()) {
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["temperature"] = cfg_.temperature;
    if (cfg_.seed) body["seed"] = *cfg_.seed;
    return body.dump();
}

Message RemoteBackend::complete(const History& history) {
    require_prompt(history);
    const std::string body = request_body(history);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            double delay = cfg_.initial_backoff_seconds * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        if (bucket_) bucket_->acquire();

        httplib::Client client(scheme_host_port_);
        auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::duration<double>(cfg_.timeout_seconds));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "remote returned status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("remote returned status " + std::to_string(res->status) + ": " +
                               res->body.substr(0, 200));
        }
        auto parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) throw BackendError("malformed remote response: not JSON");
        try {
            const auto& content = parsed.at("choices").at(0).at("message").at("content");
            if (!content.is_string() || content.get<std::string>().empty()) {
                throw BackendError("malformed remote response: empty content");
            }
            return {Role::Assistant, content.get<std::string>()};
        } catch (const nlohmann::json::exception&) {
            throw BackendError("malformed remote response: no choices[0].message.content");
        }
    }
    throw BackendError(last_error + " (after " + std::to_string(cfg_.max_retries + 1) + " attempts)");
}

// ---------------------------------------------------------------------------
// Configuration

BackendConfig::Kind parse_backend_kind(const std::string& s) {
    if (s == "remote") return BackendConfig::Kind::Remote;
    if (s == "scripted") return BackendConfig::Kind::Scripted;
    if (s == "mutation") return BackendConfig::Kind::Mutation;
    throw ConfigError("unknown backend " + s + " (expected remote, scripted or mutation)");
}

const char* to_string(BackendConfig::Kind kind) {
    switch (kind) {
        case BackendConfig::Kind::Remote: return "remote";
        case BackendConfig::Kind::Scripted: return "scripted";
        case BackendConfig::Kind::Mutation: return "mutation";
    }
    return "?";
}

void BackendConfig::check() const {
    switch (kind) {
        case Kind::Remote:
            if (remote.endpoint.empty() || remote.model_name.empty()) {
                throw ConfigError("remote backend needs endpoint and model_name");
            }
            if (!remote.api_key_env.empty()) {
                const char* key = std::getenv(remote.api_key_env.c_str());
                if (!key || !*key) throw ConfigError("environment variable " + remote.api_key_env + " is not set");
            }
            break;
        case Kind::Scripted:
            if (script_path.empty()) throw ConfigError("scripted backend needs script_path");
            break;
        case Kind::Mutation:
            if (defect_base_path.empty()) throw ConfigError("mutation backend needs defect_base");
            if (defect_spec_path.empty()) throw ConfigError("mutation backend needs defect_spec");
            break;
    }
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg, std::uint64_t seed) {
    cfg.check();
    switch (cfg.kind) {
        case BackendConfig::Kind::Remote: {
            RemoteConfig rc = cfg.remote;
            rc.seed = static_cast<std::int64_t>(seed & 0x7fffffffffffffffull);
            return std::make_unique<RemoteBackend>(rc);
        }
        case BackendConfig::Kind::Scripted:
            return std::make_unique<ScriptedBackend>(parse_script(read_text(cfg.script_path)));
        case BackendConfig::Kind::Mutation:
            return std::make_unique<MutationBackend>(parse_domain(read_text(cfg.defect_base_path)),
                                                     parse_defects(read_text(cfg.defect_spec_path)),
                                                     cfg.repair_probability, seed);
    }
    throw ConfigError("unknown backend kind");
}

std::string render_syntax_repair(const SourceError& error) {
    std::string text(assets::syntax_repair);
    const std::string key = "{error}";
    text.replace(text.find(key), key.size(), error.render());
    return text;
}

}  // namespace forge
