#include "forge/pddl.hpp"

#include <algorithm>
#include <sstream>

namespace forge {

std::string Atom::str() const {
    std::string out = "(" + predicate;
    for (const auto& a : args) {
        out += ' ';
        out += a;
    }
    out += ')';
    return out;
}

std::ostream& operator<<(std::ostream& os, const Atom& atom) {
    return os << atom.str();
}

std::string ActionCall::str() const {
    std::string out = "(" + name;
    for (const auto& a : args) {
        out += ' ';
        out += a;
    }
    out += ')';
    return out;
}

std::ostream& operator<<(std::ostream& os, const ActionCall& call) {
    return os << call.str();
}

void TypeHierarchy::add(const std::string& name, const std::string& parent) {
    if (name == kRootType) {
        return;
    }
    if (!parent_.contains(name)) {
        order_.push_back(name);
    }
    parent_[name] = parent;
}

bool TypeHierarchy::contains(const std::string& name) const {
    return name == kRootType || parent_.contains(name);
}

const std::string& TypeHierarchy::parent(const std::string& name) const {
    static const std::string root = kRootType;
    auto it = parent_.find(name);
    if (it == parent_.end()) {
        if (name == kRootType) {
            return root;
        }
        throw UndeclaredType(name);
    }
    return it->second;
}

bool TypeHierarchy::leq(const std::string& t1, const std::string& t2) const {
    if (!contains(t1)) {
        throw UndeclaredType(t1);
    }
    if (!contains(t2)) {
        throw UndeclaredType(t2);
    }
    if (t2 == kRootType || t1 == t2) {
        return true;
    }
    // Bounded walk so a malformed (cyclic) hierarchy cannot loop forever.
    std::string cur = t1;
    for (std::size_t steps = 0; steps <= parent_.size() && cur != kRootType; ++steps) {
        auto it = parent_.find(cur);
        if (it == parent_.end()) {
            return false;
        }
        cur = it->second;
        if (cur == t2) {
            return true;
        }
    }
    return false;
}

std::vector<std::string> TypeHierarchy::cyclic_types() const {
    std::vector<std::string> out;
    for (const auto& name : order_) {
        std::string cur = name;
        bool cyclic = false;
        for (std::size_t steps = 0; steps <= parent_.size(); ++steps) {
            auto it = parent_.find(cur);
            if (it == parent_.end()) {
                break;
            }
            cur = it->second;
            if (cur == name) {
                cyclic = true;
                break;
            }
        }
        if (cyclic) {
            out.push_back(name);
        }
    }
    return out;
}

bool type_leq(const TypeHierarchy& h, const std::string& t1, const std::string& t2) {
    return h.leq(t1, t2);
}

const TypedVar* ActionSchema::param(const std::string& var) const {
    auto it = std::find_if(params.begin(), params.end(),
                           [&](const TypedVar& p) { return p.name == var; });
    return it == params.end() ? nullptr : &*it;
}

const PredicateDecl* Domain::predicate(const std::string& n) const {
    auto it = std::find_if(predicates.begin(), predicates.end(),
                           [&](const PredicateDecl& p) { return p.name == n; });
    return it == predicates.end() ? nullptr : &*it;
}

const ActionSchema* Domain::action(const std::string& n) const {
    auto it = std::find_if(actions.begin(), actions.end(),
                           [&](const ActionSchema& a) { return a.name == n; });
    return it == actions.end() ? nullptr : &*it;
}

ActionSchema* Domain::action(const std::string& n) {
    auto it = std::find_if(actions.begin(), actions.end(),
                           [&](const ActionSchema& a) { return a.name == n; });
    return it == actions.end() ? nullptr : &*it;
}

const char* to_string(DiagnosticKind kind) {
    switch (kind) {
    case DiagnosticKind::UndeclaredType: return "undeclared type";
    case DiagnosticKind::CyclicTypes: return "cyclic types";
    case DiagnosticKind::DuplicatePredicate: return "duplicate predicate";
    case DiagnosticKind::DuplicateAction: return "duplicate action";
    case DiagnosticKind::DuplicateVariable: return "duplicate variable";
    case DiagnosticKind::UndeclaredPredicate: return "undeclared predicate";
    case DiagnosticKind::UndeclaredVariable: return "undeclared variable";
    case DiagnosticKind::ArityMismatch: return "arity mismatch";
    case DiagnosticKind::TypeMismatch: return "type mismatch";
    case DiagnosticKind::AddDeleteConflict: return "add/delete conflict";
    case DiagnosticKind::MissingPredicate: return "missing predicate";
    }
    return "unknown";
}

std::ostream& operator<<(std::ostream& os, const Diagnostic& d) {
    return os << to_string(d.kind) << " in " << d.element << ": " << d.message;
}

std::string render(const std::vector<Diagnostic>& diagnostics) {
    std::ostringstream out;
    for (const auto& d : diagnostics) {
        out << d << '\n';
    }
    return out.str();
}

namespace {

class Checker {
public:
    explicit Checker(const Domain& d) : domain_(d) {}

    std::vector<Diagnostic> run() {
        check_types();
        check_predicates();
        check_actions();
        return std::move(out_);
    }

private:
    void emit(DiagnosticKind kind, std::string element, std::string message) {
        out_.push_back({kind, std::move(element), std::move(message)});
    }

    void check_types() {
        const auto& h = domain_.types;
        for (const auto& t : h.names()) {
            const auto& p = h.parent(t);
            if (!h.contains(p)) {
                emit(DiagnosticKind::UndeclaredType, "type " + t, "parent type " + p + " is not declared");
            }
        }
        for (const auto& t : h.cyclic_types()) {
            emit(DiagnosticKind::CyclicTypes, "type " + t, "type is its own ancestor");
        }
    }

    void check_params(const std::string& element, const std::vector<TypedVar>& params) {
        std::set<std::string> seen;
        for (const auto& p : params) {
            if (!seen.insert(p.name).second) {
                emit(DiagnosticKind::DuplicateVariable, element, "variable " + p.name + " declared twice");
            }
            if (!domain_.types.contains(p.type)) {
                emit(DiagnosticKind::UndeclaredType, element,
                     "type " + p.type + " of " + p.name + " is not declared");
            }
        }
    }

    void check_predicates() {
        std::set<std::string> seen;
        for (const auto& p : domain_.predicates) {
            if (!seen.insert(p.name).second) {
                emit(DiagnosticKind::DuplicatePredicate, "predicate " + p.name, "predicate declared twice");
            }
            check_params("predicate " + p.name, p.params);
        }
    }

    void check_atom(const ActionSchema& a, const Atom& atom) {
        const std::string element = "action " + a.name;
        const PredicateDecl* decl = domain_.predicate(atom.predicate);
        if (decl == nullptr) {
            emit(DiagnosticKind::UndeclaredPredicate, element,
                 "predicate " + atom.predicate + " in " + atom.str() + " is not declared");
            return;
        }
        if (decl->arity() != atom.args.size()) {
            emit(DiagnosticKind::ArityMismatch, element,
                 atom.str() + " uses " + atom.predicate + " with " + std::to_string(atom.args.size()) +
                     " arguments, declared with " + std::to_string(decl->arity()));
            return;
        }
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            const auto& arg = atom.args[i];
            const TypedVar* param = a.param(arg);
            if (param == nullptr) {
                emit(DiagnosticKind::UndeclaredVariable, element,
                     arg + " in " + atom.str() + " is not a parameter of the action");
                continue;
            }
            const auto& want = decl->params[i].type;
            if (domain_.types.contains(param->type) && domain_.types.contains(want) &&
                !domain_.types.leq(param->type, want)) {
                emit(DiagnosticKind::TypeMismatch, element,
                     arg + " of type " + param->type + " used where " + atom.predicate + " expects " + want);
            }
        }
    }

    void check_actions() {
        std::set<std::string> seen;
        for (const auto& a : domain_.actions) {
            if (!seen.insert(a.name).second) {
                emit(DiagnosticKind::DuplicateAction, "action " + a.name, "action declared twice");
            }
            check_params("action " + a.name, a.params);
            for (const auto* set : {&a.pre, &a.add, &a.del}) {
                for (const auto& atom : *set) {
                    check_atom(a, atom);
                }
            }
            for (const auto& atom : a.add) {
                if (a.del.contains(atom)) {
                    emit(DiagnosticKind::AddDeleteConflict, "action " + a.name,
                         atom.str() + " is both added and deleted");
                }
            }
        }
    }

    const Domain& domain_;
    std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> check_domain_wellformed(const Domain& domain) {
    return Checker(domain).run();
}

RebindResult rebind_problem(const Problem& problem, const Domain& new_domain) {
    RebindResult result;
    Problem bound = problem;
    bound.domain_name = new_domain.name;
    for (auto& [obj, type] : bound.objects) {
        if (!new_domain.types.contains(type)) {
            type = kRootType;
        }
    }

    std::set<std::pair<std::string, std::size_t>> reported;
    auto check = [&](const Atom& atom, const char* section) {
        const PredicateDecl* decl = new_domain.predicate(atom.predicate);
        const std::string sig = atom.predicate + "/" + std::to_string(atom.args.size());
        if (decl == nullptr) {
            if (reported.emplace(atom.predicate, atom.args.size()).second) {
                result.diagnostics.push_back({DiagnosticKind::MissingPredicate, atom.str(),
                                              "missing predicate " + sig + " used in " + section});
            }
            return;
        }
        if (decl->arity() != atom.args.size()) {
            if (reported.emplace(atom.predicate, atom.args.size()).second) {
                result.diagnostics.push_back(
                    {DiagnosticKind::ArityMismatch, atom.str(),
                     "predicate " + atom.predicate + " is declared with arity " +
                         std::to_string(decl->arity()) + " but used as " + sig + " in " + section});
            }
            return;
        }
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            auto it = bound.objects.find(atom.args[i]);
            if (it == bound.objects.end()) {
                result.diagnostics.push_back({DiagnosticKind::UndeclaredVariable, atom.str(),
                                              "object " + atom.args[i] + " is not declared"});
                continue;
            }
            const auto& want = decl->params[i].type;
            if (!new_domain.types.contains(want) || !new_domain.types.leq(it->second, want)) {
                result.diagnostics.push_back({DiagnosticKind::TypeMismatch, atom.str(),
                                              "object " + it->first + " of type " + it->second +
                                                  " does not match " + want});
            }
        }
    };
    for (const auto& atom : bound.init) {
        check(atom, "init");
    }
    for (const auto& atom : bound.goal) {
        check(atom, "goal");
    }
    if (result.diagnostics.empty()) {
        result.problem = std::move(bound);
    }
    return result;
}

Problem bind_or_throw(const Problem& problem, const Domain& domain) {
    auto r = rebind_problem(problem, domain);
    if (!r.ok()) {
        throw RebindError(std::move(r.diagnostics));
    }
    return std::move(*r.problem);
}

bool structurally_equal(const Domain& a, const Domain& b) {
    if (!(a.types == b.types)) return false;
    auto by_name = [](const auto& x, const auto& y) { return x.name < y.name; };
    auto preds_a = a.predicates, preds_b = b.predicates;
    std::sort(preds_a.begin(), preds_a.end(), by_name);
    std::sort(preds_b.begin(), preds_b.end(), by_name);
    if (preds_a != preds_b) return false;
    auto acts_a = a.actions, acts_b = b.actions;
    std::sort(acts_a.begin(), acts_a.end(), by_name);
    std::sort(acts_b.begin(), acts_b.end(), by_name);
    return acts_a == acts_b;
}

}  // namespace forge
