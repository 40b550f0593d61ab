#pragma once

// Reading and writing the typed-STRIPS PDDL subset.

#include "forge/pddl.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// A parse failure with a 1-based position inside the parsed text.
class SourceError : public std::runtime_error {
public:
    SourceError(int line, int column, std::string message, std::string snippet = {});

    int line;
    int column;
    std::string message;
    std::string snippet;

    // "line L, column C: message" plus the snippet when present.
    std::string render() const;
};

struct SExpr {
    bool is_list = false;
    std::string symbol;  // lowercased, atoms only
    std::vector<SExpr> items;
    int line = 1;
    int column = 1;
};

// Parses every top-level form. Symbols are lowercased; ';' comments and
// carriage returns are skipped.
std::vector<SExpr> parse_sexprs(std::string_view text);

Domain parse_domain(std::string_view text);
std::string print_domain(const Domain& domain);

// Structural parse; predicates are checked later by rebind_problem.
Problem parse_problem(std::string_view text);
std::string print_problem(const Problem& problem);

Plan parse_plan(std::string_view text);
std::string print_plan(const Plan& plan);

// A lone "(:action ...)" form. Only syntax is checked.
ActionSchema parse_action(std::string_view text);
std::string print_action(const ActionSchema& action);

// "(name ?a - t ?b)" declaration form.
PredicateDecl parse_predicate_decl(const SExpr& form);
std::string print_predicate_decl(const PredicateDecl& decl);

// Single flat form such as "(on a b)".
Atom parse_atom_text(std::string_view text);
ActionCall parse_call_text(std::string_view text);

// Contents of the first fenced block holding a top-level "(define" or
// "(:action" form; falls back to the first such form in the raw text.
std::string extract_pddl_block(std::string_view response);

// Every fenced block whose info string equals `label` (case-insensitive).
std::vector<std::string> fenced_blocks(std::string_view response, std::string_view label);

std::string to_lower(std::string_view s);

}  // namespace forge
