#pragma once

// Heuristic domain equivalence between a ground-truth and a generated domain.

#include "forge/pddl.hpp"
#include "forge/planner.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <string>
#include <vector>

namespace forge {

using Rational = boost::multiprecision::cpp_rational;

double to_double(const Rational& r);
std::string to_string(const Rational& r);  // "num/den"
Rational parse_rational(const std::string& text);

struct HdeEntry {
    std::string problem_id;
    std::size_t forward_num = 0;   // ground-truth plans valid on the generated domain
    std::size_t forward_den = 0;   // |P|
    std::size_t backward_num = 0;  // generated plans valid on the ground truth
    std::size_t backward_den = 0;  // |P'|
    Rational forward;
    Rational backward;  // 0 when |P'| = 0
    Rational score;
    std::vector<std::string> flags;
};

struct HdeBreakdown {
    std::vector<HdeEntry> per_problem;
    Rational aggregate;

    std::string to_csv() const;
    std::string to_table() const;
};

// Score for one problem. `plans` are ground-truth plans (nonempty).
HdeEntry hde_pair(const Domain& gt, const Domain& gen, const NamedProblem& problem,
                  const std::vector<Plan>& plans, const PlannerConfig& cfg);

HdeBreakdown hde_domain(const Domain& gt, const Domain& gen, const std::vector<NamedProblem>& problems,
                        const std::map<std::string, std::vector<Plan>>& plans, const PlannerConfig& cfg);

// Number of scores exactly equal to one.
std::size_t perfect_count(const std::vector<Rational>& scores);

}  // namespace forge
