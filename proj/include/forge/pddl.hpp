#pragma once

// Typed lifted STRIPS domains and problems.

#include <compare>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

inline constexpr const char* kRootType = "object";

struct TypedVar {
    std::string name;
    std::string type = kRootType;

    auto operator<=>(const TypedVar&) const = default;
};

// A predicate applied to arguments. Lifted atoms use "?var" arguments,
// ground atoms use object names.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    auto operator<=>(const Atom&) const = default;

    std::string str() const;
};

std::ostream& operator<<(std::ostream& os, const Atom& atom);

using AtomSet = std::set<Atom>;

class UndeclaredType : public std::invalid_argument {
public:
    explicit UndeclaredType(const std::string& name)
        : std::invalid_argument("undeclared type " + name), type(name) {}
    std::string type;
};

// Types in a tree order rooted at "object". Declaration order is kept so the
// printer can reproduce it.
class TypeHierarchy {
public:
    // Declares a type; a repeated declaration updates the parent.
    void add(const std::string& name, const std::string& parent = kRootType);

    bool contains(const std::string& name) const;
    // Parent of a declared type; "object" for root children and for "object" itself.
    const std::string& parent(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }

    // t1 <= t2 in the tree order. Throws UndeclaredType.
    bool leq(const std::string& t1, const std::string& t2) const;

    // Types participating in a parent cycle (empty for a proper tree).
    std::vector<std::string> cyclic_types() const;

    bool operator==(const TypeHierarchy& other) const {
        return parent_ == other.parent_;
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> parent_;
};

bool type_leq(const TypeHierarchy& h, const std::string& t1, const std::string& t2);

struct PredicateDecl {
    std::string name;
    std::vector<TypedVar> params;

    std::size_t arity() const { return params.size(); }
    bool operator==(const PredicateDecl&) const = default;
};

struct ActionSchema {
    std::string name;
    std::vector<TypedVar> params;
    AtomSet pre;
    AtomSet add;
    AtomSet del;

    const TypedVar* param(const std::string& var) const;
    bool operator==(const ActionSchema&) const = default;
};

struct Domain {
    std::string name;
    TypeHierarchy types;
    std::vector<PredicateDecl> predicates;
    std::vector<ActionSchema> actions;

    const PredicateDecl* predicate(const std::string& name) const;
    const ActionSchema* action(const std::string& name) const;
    ActionSchema* action(const std::string& name);

    bool operator==(const Domain&) const = default;
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::map<std::string, std::string> objects;  // object -> type
    AtomSet init;
    AtomSet goal;

    bool operator==(const Problem&) const = default;
};

// One grounded step of a plan, e.g. (stack a b).
struct ActionCall {
    std::string name;
    std::vector<std::string> args;

    auto operator<=>(const ActionCall&) const = default;

    std::string str() const;
};

std::ostream& operator<<(std::ostream& os, const ActionCall& call);

using Plan = std::vector<ActionCall>;

// A problem together with the identifier used in assets and reports.
struct NamedProblem {
    std::string id;
    Problem problem;
};

enum class DiagnosticKind {
    UndeclaredType,
    CyclicTypes,
    DuplicatePredicate,
    DuplicateAction,
    DuplicateVariable,
    UndeclaredPredicate,
    UndeclaredVariable,
    ArityMismatch,
    TypeMismatch,
    AddDeleteConflict,
    MissingPredicate,
};

const char* to_string(DiagnosticKind kind);

struct Diagnostic {
    DiagnosticKind kind;
    std::string element;  // offending action/predicate/atom
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Diagnostic& d);
std::string render(const std::vector<Diagnostic>& diagnostics);

std::vector<Diagnostic> check_domain_wellformed(const Domain& domain);

// Equality up to the domain name and the order of type, predicate and action
// declarations.
bool structurally_equal(const Domain& a, const Domain& b);

struct RebindResult {
    std::optional<Problem> problem;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return problem.has_value(); }
};

// Binds a problem to another domain. Object types the domain does not
// declare fall back to "object".
RebindResult rebind_problem(const Problem& problem, const Domain& new_domain);

class RebindError : public std::runtime_error {
public:
    explicit RebindError(std::vector<Diagnostic> diags)
        : std::runtime_error("problem does not bind to domain:\n" + render(diags)),
          diagnostics(std::move(diags)) {}
    std::vector<Diagnostic> diagnostics;
};

// rebind_problem that throws RebindError on failure.
Problem bind_or_throw(const Problem& problem, const Domain& domain);

inline bool is_variable(const std::string& term) {
    return !term.empty() && term.front() == '?';
}

}  // namespace forge
