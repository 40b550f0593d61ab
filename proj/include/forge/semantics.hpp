#pragma once

// Grounding, state transitions and plan validation.

#include "forge/pddl.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

struct State {
    AtomSet atoms;

    bool contains(const Atom& a) const { return atoms.contains(a); }
    auto operator<=>(const State&) const = default;
};

struct GroundAction {
    std::string schema;
    std::vector<std::string> args;
    AtomSet pre;
    AtomSet add;
    AtomSet del;

    ActionCall call() const { return {schema, args}; }
    std::string str() const { return call().str(); }
};

struct GroundingOptions {
    // Skip substitutions that bind two parameters to the same object.
    bool distinct_args = false;
};

// Instantiates one schema. del is reduced to del \ add, which leaves
// (s \ del) u add unchanged.
GroundAction instantiate(const ActionSchema& schema, const std::vector<std::string>& args);

// All type-consistent groundings, sorted by (schema name, args). The problem
// is rebound to `domain` first; RebindError on failure.
std::vector<GroundAction> ground_actions(const Domain& domain, const Problem& problem,
                                         GroundingOptions opts = {});

bool applicable(const State& state, const GroundAction& a);
bool holds(const State& state, const AtomSet& goal);

class InapplicableAction : public std::runtime_error {
public:
    InapplicableAction(const GroundAction& a, AtomSet missing_atoms);
    AtomSet missing;
};

// (state \ del) u add. Throws InapplicableAction.
State apply(const State& state, const GroundAction& a);

enum class VerdictKind { Valid, PreconditionFailure, GoalFailure, UnknownAction, BadArguments };

const char* to_string(VerdictKind kind);

struct Verdict {
    VerdictKind kind = VerdictKind::Valid;
    std::optional<std::size_t> step;  // 0-based
    AtomSet missing;
    std::string rendered;

    bool valid() const { return kind == VerdictKind::Valid; }
};

// Simulates `plan` from the initial state, reporting the first defect.
Verdict validate_plan(const Domain& domain, const Problem& problem, const Plan& plan);

// Same, for a problem already bound to `domain`.
Verdict validate_bound(const Domain& domain, const Problem& bound, const Plan& plan);

}  // namespace forge
