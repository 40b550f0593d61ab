#include "forge/construction.hpp"

#include "forge/assets.hpp"
#include "forge/io.hpp"
#include "forge/pddl_text.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace forge {

const char* to_string(DescriptionClass c) {
    return c == DescriptionClass::Simple ? "simple" : "detailed";
}

DescriptionClass parse_description_class(const std::string& s) {
    if (s == "simple") return DescriptionClass::Simple;
    if (s == "detailed") return DescriptionClass::Detailed;
    throw std::invalid_argument("unknown description class " + s + " (expected simple or detailed)");
}

namespace {

using ojson = nlohmann::ordered_json;

DomainDescription::Texts read_texts(const ojson& j, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object of class texts");
    DomainDescription::Texts out;
    for (const auto& [cls, text] : j.items()) {
        if (cls != "simple" && cls != "detailed") {
            throw std::invalid_argument(where + ": unknown description class " + cls);
        }
        if (!text.is_string()) throw std::invalid_argument(where + "." + cls + ": expected a string");
        out[cls] = text.get<std::string>();
    }
    if (out.empty()) throw std::invalid_argument(where + ": no description text");
    return out;
}

std::vector<std::pair<std::string, DomainDescription::Texts>> read_entries(const ojson& j, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    std::vector<std::pair<std::string, DomainDescription::Texts>> out;
    for (const auto& [name, texts] : j.items()) {
        out.emplace_back(to_lower(name), read_texts(texts, where + "." + name));
    }
    return out;
}

std::string strip_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::pair<std::string_view, std::string> split_gloss(std::string_view line) {
    auto semi = line.find(';');
    if (semi == std::string_view::npos) return {trim(line), {}};
    return {trim(line.substr(0, semi)), std::string(trim(line.substr(semi + 1)))};
}

std::string type_line(const TypeDecl& t) {
    std::string out = t.name;
    if (t.parent != kRootType) out += " - " + t.parent;
    if (!t.gloss.empty()) out += " ; " + t.gloss;
    return out;
}

std::string predicate_line(const GlossedPredicate& p) {
    std::string out = print_predicate_decl(p.decl);
    if (!p.gloss.empty()) out += " ; " + p.gloss;
    return out;
}

std::vector<std::string> signature(const PredicateDecl& d) {
    std::vector<std::string> out;
    for (const auto& v : d.params) out.push_back(v.type);
    return out;
}

}  // namespace

DomainDescription DomainDescription::parse(const std::string& json_text) {
    ojson j = ojson::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw std::invalid_argument("description is not a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "overall" && key != "predicates" && key != "actions") {
            throw std::invalid_argument("description: unknown key " + key);
        }
    }
    DomainDescription d;
    if (!j.contains("overall")) throw std::invalid_argument("description: missing overall");
    d.overall = read_texts(j["overall"], "overall");
    if (j.contains("predicates")) d.predicates = read_entries(j["predicates"], "predicates");
    if (!j.contains("actions")) throw std::invalid_argument("description: missing actions");
    d.actions = read_entries(j["actions"], "actions");
    if (d.actions.empty()) throw std::invalid_argument("description: no actions");
    return d;
}

std::vector<std::string> DomainDescription::action_names() const {
    std::vector<std::string> out;
    for (const auto& [name, texts] : actions) out.push_back(name);
    return out;
}

bool DomainDescription::has_predicate(const std::string& name) const {
    return std::any_of(predicates.begin(), predicates.end(), [&](const auto& p) { return p.first == name; });
}

std::string text_for(const DomainDescription::Texts& texts, DescriptionClass c) {
    if (auto it = texts.find(to_string(c)); it != texts.end()) return it->second;
    return texts.begin()->second;
}

PromptSet PromptSet::builtin() {
    PromptSet p;
    p.system = std::string(assets::system_prompt);
    p.examples.emplace_back(std::string(assets::example1_user), std::string(assets::example1_assistant));
    p.examples.emplace_back(std::string(assets::example2_user), std::string(assets::example2_assistant));
    return p;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
    PromptSet p;
    p.system = strip_newline(read_text(dir / "system_prompt.txt"));
    for (int i = 1;; ++i) {
        auto user = dir / ("example" + std::to_string(i) + "_user.txt");
        auto assistant = dir / ("example" + std::to_string(i) + "_assistant.txt");
        if (!std::filesystem::exists(user)) break;
        p.examples.emplace_back(strip_newline(read_text(user)), strip_newline(read_text(assistant)));
    }
    return p;
}

History PromptSet::initial_history() const {
    History h;
    h.append(Role::System, system);
    for (const auto& [user, assistant] : examples) {
        h.append(Role::User, user);
        h.append(Role::Assistant, assistant);
    }
    return h;
}

const TypeDecl* Vocabulary::type(const std::string& name) const {
    auto it = std::find_if(types.begin(), types.end(), [&](const TypeDecl& t) { return t.name == name; });
    return it == types.end() ? nullptr : &*it;
}

const GlossedPredicate* Vocabulary::predicate(const std::string& name) const {
    auto it = std::find_if(predicates.begin(), predicates.end(),
                           [&](const GlossedPredicate& p) { return p.decl.name == name; });
    return it == predicates.end() ? nullptr : &*it;
}

std::string render_action_prompt(const DomainDescription& desc, DescriptionClass c, std::size_t index,
                                 const Vocabulary& known) {
    const auto& [name, texts] = desc.actions.at(index);
    std::string out;
    if (index == 0) {
        out += "Domain description: " + text_for(desc.overall, c) + "\n\n";
    }
    out += std::string(kActionNameLabel) + name + "\n";
    out += "Action description: " + text_for(texts, c) + "\n";
    if (!desc.predicates.empty()) {
        out += "\nKnown predicate descriptions:\n";
        for (const auto& [pred, ptexts] : desc.predicates) {
            out += "- " + pred + ": " + text_for(ptexts, c) + "\n";
        }
    }
    if (index > 0) {
        out += "\nTypes and predicates defined so far:\n```types\n";
        for (const auto& t : known.types) out += type_line(t) + "\n";
        out += "```\n```predicates\n";
        for (const auto& p : known.predicates) out += predicate_line(p) + "\n";
        out += "```\nPrefer these and only create new predicates when necessary.\n";
    }
    out += "\nRespond with the action in a ```pddl block, then a ```predicates block and a ```types block.";
    return out;
}

ActionReply parse_action_reply(std::string_view response) {
    ActionReply reply;
    reply.action = parse_action(extract_pddl_block(response));

    for (const auto& block : fenced_blocks(response, "predicates")) {
        int line_no = 0;
        for (auto line : lines_of(block)) {
            ++line_no;
            auto [decl_text, gloss] = split_gloss(line);
            if (decl_text.empty()) continue;
            try {
                auto forms = parse_sexprs(decl_text);
                if (forms.size() != 1) {
                    throw SourceError(1, 1, "expected one declaration per line");
                }
                GlossedPredicate p{parse_predicate_decl(forms.front()), gloss};
                reply.declared.predicates.push_back(std::move(p));
            } catch (const SourceError& e) {
                throw SourceError(line_no, e.column, "predicates block: " + e.message, std::string(decl_text));
            }
        }
    }
    for (const auto& block : fenced_blocks(response, "types")) {
        int line_no = 0;
        for (auto line : lines_of(block)) {
            ++line_no;
            auto [decl_text, gloss] = split_gloss(line);
            if (decl_text.empty()) continue;
            std::istringstream words{to_lower(decl_text)};
            std::vector<std::string> names;
            std::string parent = kRootType;
            for (std::string w; words >> w;) {
                if (w == "-") {
                    if (!(words >> parent) || names.empty() || (words >> w)) {
                        throw SourceError(line_no, 1, "types block: expected 'name [- parent]'",
                                          std::string(decl_text));
                    }
                    break;
                }
                names.push_back(w);
            }
            for (const auto& n : names) {
                if (n.front() == '(' || n.front() == '?') {
                    throw SourceError(line_no, 1, "types block: bad type name " + n, std::string(decl_text));
                }
                reply.declared.types.push_back({n, parent, gloss});
            }
        }
    }
    return reply;
}

Vocabulary merge_reply(const Vocabulary& known, const ActionReply& reply) {
    Vocabulary out = known;
    auto fail = [](const std::string& why) { return SourceError(1, 1, why); };

    for (const auto& t : reply.declared.types) {
        if (t.name == kRootType) continue;
        if (const TypeDecl* prev = out.type(t.name)) {
            if (prev->parent != t.parent) {
                throw fail("type " + t.name + " declared with parent " + t.parent + " but earlier with " +
                           prev->parent);
            }
            continue;
        }
        out.types.push_back(t);
    }
    for (const auto& p : reply.declared.predicates) {
        if (const GlossedPredicate* prev = out.predicate(p.decl.name)) {
            if (prev->decl.arity() != p.decl.arity()) {
                throw SignatureConflict("arity conflict: predicate " + p.decl.name + " declared with " +
                                        std::to_string(prev->decl.arity()) + " and " +
                                        std::to_string(p.decl.arity()) + " arguments");
            }
            if (signature(prev->decl) != signature(p.decl)) {
                throw SignatureConflict("signature conflict: predicate " + p.decl.name + " declared as " +
                                        print_predicate_decl(prev->decl) + " and " + print_predicate_decl(p.decl));
            }
            continue;
        }
        out.predicates.push_back(p);
    }
    // An earlier action fixed the arity; using another one is a conflict too.
    for (const auto* set : {&reply.action.pre, &reply.action.add, &reply.action.del}) {
        for (const auto& atom : *set) {
            const GlossedPredicate* prev = known.predicate(atom.predicate);
            if (prev && prev->decl.arity() != atom.args.size()) {
                throw SignatureConflict("arity conflict: predicate " + atom.predicate + " has " +
                                        std::to_string(prev->decl.arity()) + " arguments but " +
                                        reply.action.name + " uses " + std::to_string(atom.args.size()));
            }
        }
    }

    Domain probe;
    for (const auto& t : out.types) probe.types.add(t.name, t.parent);
    for (const auto& p : out.predicates) probe.predicates.push_back(p.decl);
    probe.actions.push_back(reply.action);
    auto diags = check_domain_wellformed(probe);
    if (!diags.empty()) {
        std::string msg;
        for (const auto& d : diags) {
            if (!msg.empty()) msg += "; ";
            msg += d.message;
        }
        throw fail(msg + " (declare every predicate and type the action uses in the predicates and types blocks)");
    }
    return out;
}

ConstructionResult build_initial_domain(const DomainDescription& desc, DescriptionClass c, Backend& backend,
                                        const ConstructionOptions& opts) {
    ConstructionResult result;
    result.transcript = opts.prompts.initial_history();
    Vocabulary vocab;
    std::vector<ActionSchema> actions;

    for (std::size_t i = 0; i < desc.actions.size(); ++i) {
        const std::string& name = desc.actions[i].first;
        result.transcript.append(Role::User, render_action_prompt(desc, c, i, vocab));
        std::size_t calls = 0;
        auto parse = [&](const std::string& text) {
            ++calls;
            ActionReply reply = parse_action_reply(text);
            reply.action.name = name;
            Vocabulary merged = merge_reply(vocab, reply);
            return std::make_pair(reply.action, merged);
        };
        try {
            auto outcome = syntax_repair_loop(backend, result.transcript, parse, opts.retry_limit);
            result.per_action_attempts[name] = calls;
            result.llm_calls += calls;
            if (!outcome.ok()) {
                result.failure = "action " + name + ": no usable action after " + std::to_string(outcome.calls) +
                                 " attempts; last error: " + outcome.errors.back().render();
                return result;
            }
            actions.push_back(outcome.value->first);
            vocab = std::move(outcome.value->second);
        } catch (const SignatureConflict& e) {
            result.per_action_attempts[name] = calls;
            result.llm_calls += calls;
            result.failure = "action " + name + ": " + e.what();
            return result;
        } catch (const BackendError& e) {
            result.per_action_attempts[name] = calls;
            result.llm_calls += calls;
            result.failure = "action " + name + ": backend error: " + e.what();
            return result;
        }
    }

    Domain d;
    d.name = opts.domain_name;
    for (const auto& t : vocab.types) d.types.add(t.name, t.parent);
    for (const auto& p : vocab.predicates) d.predicates.push_back(p.decl);
    d.actions = std::move(actions);
    auto diags = check_domain_wellformed(d);
    if (!diags.empty()) {
        result.failure = "assembled domain is ill-formed:\n" + render(diags);
        return result;
    }
    result.domain = parse_domain(print_domain(d));
    for (const auto& t : vocab.types) result.type_glossary[t.name] = t.gloss;
    for (const auto& p : vocab.predicates) result.predicate_glossary[p.decl.name] = p.gloss;
    result.ok = true;
    return result;
}

bool action_name_contract(const DomainDescription& desc, const ConstructionResult& result) {
    std::set<std::string> expected, got;
    for (const auto& n : desc.action_names()) expected.insert(n);
    for (const auto& a : result.domain.actions) got.insert(a.name);
    return expected == got && result.domain.actions.size() == desc.actions.size();
}

}  // namespace forge
