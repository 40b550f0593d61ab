#include "forge/semantics.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace forge {

namespace {

Atom substitute(const Atom& lifted, const std::map<std::string, std::string>& binding) {
    Atom out{lifted.predicate, {}};
    out.args.reserve(lifted.args.size());
    for (const auto& arg : lifted.args) {
        auto it = binding.find(arg);
        out.args.push_back(it == binding.end() ? arg : it->second);
    }
    return out;
}

std::string join_atoms(const AtomSet& atoms, const char* sep) {
    std::string out;
    for (const auto& a : atoms) {
        if (!out.empty()) out += sep;
        out += a.str();
    }
    return out;
}

}  // namespace

GroundAction instantiate(const ActionSchema& schema, const std::vector<std::string>& args) {
    std::map<std::string, std::string> binding;
    for (std::size_t i = 0; i < schema.params.size() && i < args.size(); ++i) {
        binding[schema.params[i].name] = args[i];
    }
    GroundAction g{schema.name, args, {}, {}, {}};
    for (const auto& a : schema.pre) g.pre.insert(substitute(a, binding));
    for (const auto& a : schema.add) g.add.insert(substitute(a, binding));
    for (const auto& a : schema.del) {
        Atom ga = substitute(a, binding);
        if (!g.add.contains(ga)) {
            g.del.insert(std::move(ga));
        }
    }
    return g;
}

std::vector<GroundAction> ground_actions(const Domain& domain, const Problem& problem,
                                         GroundingOptions opts) {
    const Problem bound = bind_or_throw(problem, domain);
    std::vector<GroundAction> out;
    for (const auto& schema : domain.actions) {
        std::vector<std::vector<std::string>> candidates;
        for (const auto& p : schema.params) {
            std::vector<std::string> objs;
            for (const auto& [obj, type] : bound.objects) {
                if (domain.types.contains(type) && domain.types.contains(p.type) &&
                    domain.types.leq(type, p.type)) {
                    objs.push_back(obj);
                }
            }
            candidates.push_back(std::move(objs));
        }
        if (std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.empty(); })) {
            continue;
        }
        // Odometer over the candidate lists; objects are already sorted.
        std::vector<std::size_t> idx(candidates.size(), 0);
        while (true) {
            std::vector<std::string> args;
            args.reserve(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                args.push_back(candidates[i][idx[i]]);
            }
            bool keep = true;
            if (opts.distinct_args) {
                auto sorted = args;
                std::sort(sorted.begin(), sorted.end());
                keep = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
            }
            if (keep) {
                out.push_back(instantiate(schema, args));
            }
            std::size_t k = idx.size();
            while (k > 0 && ++idx[k - 1] == candidates[k - 1].size()) {
                idx[k - 1] = 0;
                --k;
            }
            if (k == 0) break;
        }
    }
    std::sort(out.begin(), out.end(), [](const GroundAction& a, const GroundAction& b) {
        return std::tie(a.schema, a.args) < std::tie(b.schema, b.args);
    });
    return out;
}

bool applicable(const State& state, const GroundAction& a) {
    return std::includes(state.atoms.begin(), state.atoms.end(), a.pre.begin(), a.pre.end());
}

bool holds(const State& state, const AtomSet& goal) {
    return std::includes(state.atoms.begin(), state.atoms.end(), goal.begin(), goal.end());
}

InapplicableAction::InapplicableAction(const GroundAction& a, AtomSet missing_atoms)
    : std::runtime_error(a.str() + " is not applicable, missing " + join_atoms(missing_atoms, " ")),
      missing(std::move(missing_atoms)) {}

State apply(const State& state, const GroundAction& a) {
    if (!applicable(state, a)) {
        AtomSet missing;
        std::set_difference(a.pre.begin(), a.pre.end(), state.atoms.begin(), state.atoms.end(),
                            std::inserter(missing, missing.end()));
        throw InapplicableAction(a, std::move(missing));
    }
    State next;
    std::set_difference(state.atoms.begin(), state.atoms.end(), a.del.begin(), a.del.end(),
                        std::inserter(next.atoms, next.atoms.end()));
    next.atoms.insert(a.add.begin(), a.add.end());
    return next;
}

const char* to_string(VerdictKind kind) {
    switch (kind) {
    case VerdictKind::Valid: return "Valid";
    case VerdictKind::PreconditionFailure: return "PreconditionFailure";
    case VerdictKind::GoalFailure: return "GoalFailure";
    case VerdictKind::UnknownAction: return "UnknownAction";
    case VerdictKind::BadArguments: return "BadArguments";
    }
    return "?";
}

namespace {

Verdict bad_arguments(std::size_t step, const ActionCall& call, const std::string& why) {
    Verdict v;
    v.kind = VerdictKind::BadArguments;
    v.step = step;
    std::ostringstream r;
    r << "Plan failed to execute.\n"
      << "Plan failed because of bad arguments in action " << call << " at step " << step << ": " << why
      << "\n";
    v.rendered = r.str();
    return v;
}

}  // namespace

Verdict validate_bound(const Domain& domain, const Problem& bound, const Plan& plan) {
    State state{bound.init};
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const ActionCall& call = plan[i];
        const ActionSchema* schema = domain.action(call.name);
        if (schema == nullptr) {
            Verdict v;
            v.kind = VerdictKind::UnknownAction;
            v.step = i;
            v.rendered = "Plan failed to execute.\nPlan failed because action " + call.str() + " at step " +
                         std::to_string(i) + " is not defined in the domain (no action named " + call.name +
                         ")\n";
            return v;
        }
        if (schema->params.size() != call.args.size()) {
            return bad_arguments(i, call,
                                 "expected " + std::to_string(schema->params.size()) + " arguments, got " +
                                     std::to_string(call.args.size()));
        }
        for (std::size_t j = 0; j < call.args.size(); ++j) {
            auto it = bound.objects.find(call.args[j]);
            if (it == bound.objects.end()) {
                return bad_arguments(i, call, "object " + call.args[j] + " is not declared in the problem");
            }
            const auto& want = schema->params[j].type;
            if (!domain.types.contains(want) || !domain.types.leq(it->second, want)) {
                return bad_arguments(i, call,
                                     "object " + it->first + " of type " + it->second + " does not match " +
                                         schema->params[j].name + " - " + want);
            }
        }
        GroundAction g = instantiate(*schema, call.args);
        if (!applicable(state, g)) {
            Verdict v;
            v.kind = VerdictKind::PreconditionFailure;
            v.step = i;
            std::set_difference(g.pre.begin(), g.pre.end(), state.atoms.begin(), state.atoms.end(),
                                std::inserter(v.missing, v.missing.end()));
            std::ostringstream r;
            r << "Plan failed to execute.\n"
              << "Plan failed because of unsatisfied precondition in action " << call << " at step " << i
              << "\n"
              << "Unsatisfied precondition: " << join_atoms(v.missing, " ") << "\n"
              << "Plan Repair Advice:\n"
              << call << " has an unsatisfied precondition at time " << (i + 1) << "\n";
            for (const auto& m : v.missing) {
                r << "(Set " << m << " to true)\n";
            }
            v.rendered = r.str();
            return v;
        }
        state = apply(state, g);
    }
    if (!holds(state, bound.goal)) {
        Verdict v;
        v.kind = VerdictKind::GoalFailure;
        std::set_difference(bound.goal.begin(), bound.goal.end(), state.atoms.begin(), state.atoms.end(),
                            std::inserter(v.missing, v.missing.end()));
        std::ostringstream r;
        r << "Plan executed successfully - checking goal\n"
          << "Goal not satisfied\n"
          << "Unsatisfied goal: " << join_atoms(v.missing, " ") << "\n"
          << "Plan Repair Advice:\n";
        for (const auto& m : v.missing) {
            r << "(Set " << m << " to true)\n";
        }
        v.rendered = r.str();
        return v;
    }
    Verdict v;
    v.rendered = "Plan valid\nFinal value: " + std::to_string(plan.size()) + "\n";
    return v;
}

Verdict validate_plan(const Domain& domain, const Problem& problem, const Plan& plan) {
    auto bound = rebind_problem(problem, domain);
    if (!bound.ok()) {
        Verdict v;
        v.kind = VerdictKind::BadArguments;
        v.step = 0;
        v.rendered = "Plan failed to execute.\nThe problem could not be used with the domain at step 0:\n" +
                     render(bound.diagnostics);
        return v;
    }
    return validate_bound(domain, *bound.problem, plan);
}

}  // namespace forge
