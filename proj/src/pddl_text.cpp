#include "forge/pddl_text.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace forge {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

SourceError::SourceError(int l, int c, std::string msg, std::string snip)
    : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + msg),
      line(l), column(c), message(std::move(msg)), snippet(std::move(snip)) {}

std::string SourceError::render() const {
    std::string out = what();
    if (!snippet.empty()) {
        out += "\n  near: " + snippet;
    }
    return out;
}

namespace {

std::string line_of(std::string_view text, int line) {
    int cur = 1;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size() && cur < line; ++i) {
        if (text[i] == '\n') {
            ++cur;
            start = i + 1;
        }
    }
    std::size_t end = text.find('\n', start);
    std::string out(text.substr(start, end == std::string_view::npos ? text.size() - start : end - start));
    while (!out.empty() && (out.back() == '\r' || out.back() == ' ' || out.back() == '\t')) {
        out.pop_back();
    }
    auto first = out.find_first_not_of(" \t");
    return first == std::string::npos ? std::string{} : out.substr(first);
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<SExpr> parse_all() {
        std::vector<SExpr> out;
        skip_space();
        while (pos_ < text_.size()) {
            out.push_back(parse_one());
            skip_space();
        }
        return out;
    }

private:
    [[noreturn]] void fail(int line, int col, const std::string& message) const {
        throw SourceError(line, col, message, line_of(text_, line));
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    advance();
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    // Position of the last character of the input.
    std::pair<int, int> end_position() const {
        if (text_.empty()) {
            return {1, 1};
        }
        int line = 1;
        int col = 1;
        for (std::size_t i = 0; i + 1 < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return {line, col};
    }

    SExpr parse_one() {
        SExpr node;
        node.line = line_;
        node.column = col_;
        char c = text_[pos_];
        if (c == ')') {
            fail(line_, col_, "unexpected ')'");
        }
        if (c == '(') {
            node.is_list = true;
            advance();
            while (true) {
                skip_space();
                if (pos_ >= text_.size()) {
                    auto [l, col] = end_position();
                    throw SourceError(l, col,
                                      "unbalanced parentheses: '(' opened at line " +
                                          std::to_string(node.line) + ", column " +
                                          std::to_string(node.column) + " is never closed",
                                      line_of(text_, node.line));
                }
                if (text_[pos_] == ')') {
                    advance();
                    return node;
                }
                node.items.push_back(parse_one());
            }
        }
        std::string sym;
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (d == '(' || d == ')' || d == ';' || std::isspace(static_cast<unsigned char>(d))) {
                break;
            }
            sym += d;
            advance();
        }
        node.symbol = to_lower(sym);
        return node;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

std::string show(const SExpr& e) {
    if (!e.is_list) {
        return e.symbol;
    }
    std::string out = "(";
    for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        out += show(e.items[i]);
    }
    return out + ")";
}

[[noreturn]] void fail_at(const SExpr& e, const std::string& message) {
    std::string snippet = show(e);
    if (snippet.size() > 80) {
        snippet = snippet.substr(0, 77) + "...";
    }
    throw SourceError(e.line, e.column, message, snippet);
}

bool is_symbol(const SExpr& e, std::string_view s) {
    return !e.is_list && e.symbol == s;
}

bool head_is(const SExpr& e, std::string_view s) {
    return e.is_list && !e.items.empty() && is_symbol(e.items.front(), s);
}

const std::string& expect_symbol(const SExpr& e, const std::string& what) {
    if (e.is_list) {
        fail_at(e, "expected " + what + ", found a list");
    }
    return e.symbol;
}

// "a b - t c" -> [(a,t),(b,t),(c,object)]
std::vector<TypedVar> parse_typed_list(const std::vector<SExpr>& items, std::size_t from) {
    std::vector<TypedVar> out;
    std::vector<std::string> pending;
    for (std::size_t i = from; i < items.size(); ++i) {
        const SExpr& e = items[i];
        if (is_symbol(e, "-")) {
            if (i + 1 >= items.size()) {
                fail_at(e, "missing type after '-'");
            }
            const SExpr& t = items[i + 1];
            if (head_is(t, "either")) {
                fail_at(t, "unsupported construct either");
            }
            const std::string& type = expect_symbol(t, "type name");
            if (pending.empty()) {
                fail_at(e, "'-' without preceding names");
            }
            for (auto& n : pending) {
                out.push_back({std::move(n), type});
            }
            pending.clear();
            ++i;
            continue;
        }
        pending.push_back(expect_symbol(e, "name"));
    }
    for (auto& n : pending) {
        out.push_back({std::move(n), kRootType});
    }
    return out;
}

Atom parse_flat_atom(const SExpr& e, const std::string& context) {
    if (!e.is_list || e.items.empty()) {
        fail_at(e, "expected an atom in " + context);
    }
    Atom atom;
    atom.predicate = expect_symbol(e.items.front(), "predicate name");
    if (atom.predicate == "=") {
        fail_at(e, "equality is not supported");
    }
    for (std::size_t i = 1; i < e.items.size(); ++i) {
        if (e.items[i].is_list) {
            fail_at(e.items[i], "nested expression inside atom " + atom.predicate);
        }
        atom.args.push_back(e.items[i].symbol);
    }
    return atom;
}

const std::set<std::string> kUnsupportedConnectives = {
    "or", "imply", "forall", "exists", "when", "increase", "decrease", "assign",
    "scale-up", "scale-down", "either", "preference",
};

void check_connective(const SExpr& e) {
    if (e.is_list && !e.items.empty() && !e.items.front().is_list) {
        const auto& head = e.items.front().symbol;
        if (kUnsupportedConnectives.contains(head)) {
            fail_at(e, "unsupported construct " + head);
        }
    }
}

AtomSet parse_precondition(const SExpr& e) {
    AtomSet out;
    if (e.is_list && e.items.empty()) {
        return out;
    }
    check_connective(e);
    if (head_is(e, "not")) {
        fail_at(e, "negative preconditions are not supported");
    }
    if (head_is(e, "and")) {
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            const SExpr& c = e.items[i];
            check_connective(c);
            if (head_is(c, "not")) {
                fail_at(c, "negative preconditions are not supported");
            }
            if (head_is(c, "and")) {
                auto nested = parse_precondition(c);
                out.insert(nested.begin(), nested.end());
                continue;
            }
            out.insert(parse_flat_atom(c, "precondition"));
        }
        return out;
    }
    out.insert(parse_flat_atom(e, "precondition"));
    return out;
}

void parse_effect(const SExpr& e, AtomSet& add, AtomSet& del) {
    if (e.is_list && e.items.empty()) {
        return;
    }
    check_connective(e);
    if (head_is(e, "and")) {
        for (std::size_t i = 1; i < e.items.size(); ++i) {
            parse_effect(e.items[i], add, del);
        }
        return;
    }
    if (head_is(e, "not")) {
        if (e.items.size() != 2) {
            fail_at(e, "malformed negated effect");
        }
        check_connective(e.items[1]);
        del.insert(parse_flat_atom(e.items[1], "effect"));
        return;
    }
    add.insert(parse_flat_atom(e, "effect"));
}

ActionSchema parse_action_form(const SExpr& e) {
    if (e.items.size() < 2) {
        fail_at(e, "action without a name");
    }
    ActionSchema a;
    a.name = expect_symbol(e.items[1], "action name");
    bool have_params = false;
    bool have_pre = false;
    bool have_eff = false;
    for (std::size_t i = 2; i < e.items.size(); i += 2) {
        const SExpr& key = e.items[i];
        const std::string& k = expect_symbol(key, "action keyword");
        if (i + 1 >= e.items.size()) {
            fail_at(key, "missing value for " + k);
        }
        const SExpr& val = e.items[i + 1];
        if (k == ":parameters") {
            if (!val.is_list) {
                fail_at(val, ":parameters expects a list");
            }
            a.params = parse_typed_list(val.items, 0);
            have_params = true;
        } else if (k == ":precondition") {
            a.pre = parse_precondition(val);
            have_pre = true;
        } else if (k == ":effect") {
            parse_effect(val, a.add, a.del);
            have_eff = true;
        } else {
            fail_at(key, "unknown action keyword " + k);
        }
    }
    (void)have_params;
    (void)have_pre;
    if (!have_eff) {
        fail_at(e, "action " + a.name + " has no :effect");
    }
    return a;
}

void check_requirements(const SExpr& section) {
    for (std::size_t i = 1; i < section.items.size(); ++i) {
        const std::string& r = expect_symbol(section.items[i], "requirement");
        if (r != ":strips" && r != ":typing") {
            fail_at(section.items[i], "unsupported requirement " + r);
        }
    }
}

const SExpr& single_form(const std::vector<SExpr>& forms, std::string_view text, const char* what) {
    if (forms.empty()) {
        throw SourceError(1, 1, std::string("no ") + what + " definition found", line_of(text, 1));
    }
    if (forms.size() > 1) {
        fail_at(forms[1], std::string("unexpected content after ") + what + " definition");
    }
    return forms.front();
}

std::string indent(int n) {
    return std::string(static_cast<std::size_t>(n), ' ');
}

std::string print_params(const std::vector<TypedVar>& params) {
    std::string out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) out += ' ';
        out += params[i].name + " - " + params[i].type;
    }
    return out;
}

}  // namespace

std::vector<SExpr> parse_sexprs(std::string_view text) {
    return Lexer(text).parse_all();
}

PredicateDecl parse_predicate_decl(const SExpr& form) {
    if (!form.is_list || form.items.empty()) {
        fail_at(form, "expected a predicate declaration");
    }
    PredicateDecl decl;
    decl.name = expect_symbol(form.items.front(), "predicate name");
    decl.params = parse_typed_list(form.items, 1);
    for (const auto& p : decl.params) {
        if (!is_variable(p.name)) {
            fail_at(form, "predicate parameter " + p.name + " must start with '?'");
        }
    }
    return decl;
}

Domain parse_domain(std::string_view text) {
    const auto forms = parse_sexprs(text);
    const SExpr& root = single_form(forms, text, "domain");
    if (!head_is(root, "define") || root.items.size() < 2 || !head_is(root.items[1], "domain") ||
        root.items[1].items.size() != 2) {
        fail_at(root, "expected (define (domain <name>) ...)");
    }
    Domain d;
    d.name = expect_symbol(root.items[1].items[1], "domain name");
    std::map<std::string, std::pair<int, int>> positions;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const SExpr& section = root.items[i];
        if (!section.is_list || section.items.empty() || section.items.front().is_list) {
            fail_at(section, "expected a domain section");
        }
        const std::string& head = section.items.front().symbol;
        if (head == ":requirements") {
            check_requirements(section);
        } else if (head == ":types") {
            for (const auto& tv : parse_typed_list(section.items, 1)) {
                d.types.add(tv.name, tv.type);
                positions["type " + tv.name] = {section.line, section.column};
            }
        } else if (head == ":predicates") {
            for (std::size_t j = 1; j < section.items.size(); ++j) {
                d.predicates.push_back(parse_predicate_decl(section.items[j]));
                positions["predicate " + d.predicates.back().name] = {section.items[j].line,
                                                                       section.items[j].column};
            }
        } else if (head == ":action") {
            d.actions.push_back(parse_action_form(section));
            positions["action " + d.actions.back().name] = {section.line, section.column};
        } else if (head == ":constants" || head == ":functions" || head == ":derived" ||
                   head == ":durative-action" || head == ":constraints") {
            fail_at(section, "unsupported section " + head);
        } else {
            fail_at(section, "unknown section " + head);
        }
    }
    auto diags = check_domain_wellformed(d);
    if (!diags.empty()) {
        auto it = positions.find(diags.front().element);
        auto [line, col] = it == positions.end() ? std::pair{root.line, root.column} : it->second;
        std::string message;
        for (const auto& diag : diags) {
            std::ostringstream os;
            os << diag;
            message += (message.empty() ? "" : "; ") + os.str();
        }
        throw SourceError(line, col, message, line_of(text, line));
    }
    return d;
}

std::string print_predicate_decl(const PredicateDecl& decl) {
    std::string out = "(" + decl.name;
    if (!decl.params.empty()) {
        out += ' ' + print_params(decl.params);
    }
    return out + ")";
}

std::string print_action(const ActionSchema& a) {
    std::ostringstream out;
    out << "(:action " << a.name << '\n';
    out << indent(2) << ":parameters (" << print_params(a.params) << ")\n";
    out << indent(2) << ":precondition (and";
    for (const auto& atom : a.pre) {
        out << ' ' << atom;
    }
    out << ")\n";
    out << indent(2) << ":effect (and";
    for (const auto& atom : a.add) {
        out << ' ' << atom;
    }
    for (const auto& atom : a.del) {
        out << " (not " << atom << ')';
    }
    out << ")\n)";
    return out.str();
}

std::string print_domain(const Domain& d) {
    std::ostringstream out;
    out << "(define (domain " << d.name << ")\n";
    out << indent(2) << "(:requirements :strips :typing)\n";
    if (!d.types.names().empty()) {
        // Subtypes grouped by parent, root children last.
        std::vector<std::string> parents;
        std::map<std::string, std::vector<std::string>> children;
        for (const auto& t : d.types.names()) {
            const auto& p = d.types.parent(t);
            if (!children.contains(p)) {
                parents.push_back(p);
            }
            children[p].push_back(t);
        }
        out << indent(2) << "(:types";
        for (const auto& p : parents) {
            if (p == kRootType) continue;
            for (const auto& t : children[p]) out << ' ' << t;
            out << " - " << p;
        }
        if (children.contains(kRootType)) {
            for (const auto& t : children[kRootType]) out << ' ' << t;
        }
        out << ")\n";
    }
    out << indent(2) << "(:predicates\n";
    for (const auto& p : d.predicates) {
        out << indent(4) << print_predicate_decl(p) << '\n';
    }
    out << indent(2) << ")\n";
    for (const auto& a : d.actions) {
        std::istringstream lines(print_action(a));
        std::string line;
        while (std::getline(lines, line)) {
            out << indent(2) << line << '\n';
        }
    }
    out << ")\n";
    return out.str();
}

Problem parse_problem(std::string_view text) {
    const auto forms = parse_sexprs(text);
    const SExpr& root = single_form(forms, text, "problem");
    if (!head_is(root, "define") || root.items.size() < 2 || !head_is(root.items[1], "problem") ||
        root.items[1].items.size() != 2) {
        fail_at(root, "expected (define (problem <name>) ...)");
    }
    Problem p;
    p.name = expect_symbol(root.items[1].items[1], "problem name");
    bool have_goal = false;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const SExpr& section = root.items[i];
        if (!section.is_list || section.items.empty() || section.items.front().is_list) {
            fail_at(section, "expected a problem section");
        }
        const std::string& head = section.items.front().symbol;
        if (head == ":domain") {
            if (section.items.size() != 2) {
                fail_at(section, "malformed :domain");
            }
            p.domain_name = expect_symbol(section.items[1], "domain name");
        } else if (head == ":requirements") {
            check_requirements(section);
        } else if (head == ":objects") {
            for (auto& tv : parse_typed_list(section.items, 1)) {
                p.objects[tv.name] = tv.type;
            }
        } else if (head == ":init") {
            for (std::size_t j = 1; j < section.items.size(); ++j) {
                check_connective(section.items[j]);
                if (head_is(section.items[j], "not")) {
                    fail_at(section.items[j], "negative literals are not allowed in :init");
                }
                p.init.insert(parse_flat_atom(section.items[j], "init"));
            }
        } else if (head == ":goal") {
            if (section.items.size() != 2) {
                fail_at(section, "empty goal");
            }
            const SExpr& g = section.items[1];
            check_connective(g);
            if (head_is(g, "not")) {
                fail_at(g, "negative goals are not supported");
            }
            p.goal = parse_precondition(g);
            if (p.goal.empty()) {
                fail_at(section, "empty goal");
            }
            have_goal = true;
        } else if (head == ":metric") {
            fail_at(section, "unsupported section :metric");
        } else {
            fail_at(section, "unknown section " + head);
        }
    }
    if (!have_goal) {
        fail_at(root, "empty goal");
    }
    return p;
}

std::string print_problem(const Problem& p) {
    std::ostringstream out;
    out << "(define (problem " << p.name << ")\n";
    out << indent(2) << "(:domain " << p.domain_name << ")\n";
    std::map<std::string, std::vector<std::string>> by_type;
    for (const auto& [obj, type] : p.objects) {
        by_type[type].push_back(obj);
    }
    out << indent(2) << "(:objects";
    for (const auto& [type, objs] : by_type) {
        out << "\n" << indent(4);
        for (const auto& o : objs) out << o << ' ';
        out << "- " << type;
    }
    out << (by_type.empty() ? ")\n" : "\n" + indent(2) + ")\n");
    out << indent(2) << "(:init";
    for (const auto& a : p.init) {
        out << "\n" << indent(4) << a;
    }
    out << (p.init.empty() ? ")\n" : "\n" + indent(2) + ")\n");
    out << indent(2) << "(:goal (and";
    for (const auto& a : p.goal) {
        out << "\n" << indent(4) << a;
    }
    out << "\n" << indent(2) << "))\n";
    out << ")\n";
    return out.str();
}

Plan parse_plan(std::string_view text) {
    Plan plan;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        std::string_view content = line.substr(0, line.find(';'));
        auto first = content.find_first_not_of(" \t\r");
        if (first != std::string_view::npos) {
            std::vector<SExpr> forms;
            try {
                forms = parse_sexprs(content);
            } catch (const SourceError& e) {
                throw SourceError(line_no, e.column, e.message, std::string(line));
            }
            if (forms.size() != 1 || !forms[0].is_list || forms[0].items.empty()) {
                throw SourceError(line_no, static_cast<int>(first) + 1,
                                  "expected one action per line as (name arg ...)", std::string(line));
            }
            ActionCall call;
            for (std::size_t i = 0; i < forms[0].items.size(); ++i) {
                const SExpr& item = forms[0].items[i];
                if (item.is_list) {
                    throw SourceError(line_no, item.column, "nested expression in plan step", std::string(line));
                }
                if (i == 0) {
                    call.name = item.symbol;
                } else {
                    call.args.push_back(item.symbol);
                }
            }
            plan.push_back(std::move(call));
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    return plan;
}

std::string print_plan(const Plan& plan) {
    std::string out;
    for (const auto& step : plan) {
        out += step.str();
        out += '\n';
    }
    return out;
}

ActionSchema parse_action(std::string_view text) {
    const auto forms = parse_sexprs(text);
    const SExpr& root = single_form(forms, text, "action");
    if (!head_is(root, ":action")) {
        fail_at(root, "expected (:action <name> ...)");
    }
    return parse_action_form(root);
}

Atom parse_atom_text(std::string_view text) {
    const auto forms = parse_sexprs(text);
    const SExpr& root = single_form(forms, text, "atom");
    return parse_flat_atom(root, "atom");
}

ActionCall parse_call_text(std::string_view text) {
    Atom a = parse_atom_text(text);
    return {std::move(a.predicate), std::move(a.args)};
}

namespace {

struct Fence {
    std::string label;
    std::string body;
};

std::vector<Fence> scan_fences(std::string_view text) {
    std::vector<Fence> out;
    std::size_t pos = 0;
    bool open = false;
    Fence cur;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        auto first = line.find_first_not_of(" \t");
        bool is_fence = first != std::string_view::npos && line.substr(first).starts_with("```");
        if (is_fence) {
            if (!open) {
                std::string_view label = line.substr(first + 3);
                auto b = label.find_first_not_of(" \t");
                auto e = label.find_last_not_of(" \t\r");
                cur = Fence{b == std::string_view::npos ? std::string{} : to_lower(label.substr(b, e - b + 1)), {}};
                open = true;
            } else {
                out.push_back(std::move(cur));
                cur = Fence{};
                open = false;
            }
        } else if (open) {
            cur.body.append(line);
            cur.body += '\n';
        }
        pos = end + 1;
    }
    return out;
}

// Offset of the first "(define" / "(:action" head, optionally only at depth 0.
std::size_t find_pddl_head(std::string_view text, bool top_level_only) {
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == ';') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '(') {
            if (!top_level_only || depth == 0) {
                std::size_t j = i + 1;
                while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
                std::string head = to_lower(text.substr(j, 8));
                if (head.starts_with("define") || head.starts_with(":action")) {
                    return i;
                }
            }
            ++depth;
        } else if (c == ')') {
            --depth;
        }
    }
    return std::string_view::npos;
}

std::string balanced_from(std::string_view text, std::size_t start) {
    int depth = 0;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (c == ';') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '(') ++depth;
        if (c == ')' && --depth == 0) {
            return std::string(text.substr(start, i - start + 1));
        }
    }
    // Unbalanced: hand back the remainder so the parser can locate the problem.
    return std::string(text.substr(start));
}

}  // namespace

std::string extract_pddl_block(std::string_view response) {
    for (const auto& f : scan_fences(response)) {
        if (find_pddl_head(f.body, true) != std::string_view::npos) {
            return f.body;
        }
    }
    std::size_t at = find_pddl_head(response, false);
    if (at == std::string_view::npos) {
        throw SourceError(1, 1, "no PDDL block in response");
    }
    return balanced_from(response, at);
}

std::vector<std::string> fenced_blocks(std::string_view response, std::string_view label) {
    std::vector<std::string> out;
    const std::string want = to_lower(label);
    for (auto& f : scan_fences(response)) {
        if (f.label == want) {
            out.push_back(std::move(f.body));
        }
    }
    return out;
}

}  // namespace forge
