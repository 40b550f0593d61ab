#include "forge/hde.hpp"

#include "forge/semantics.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace forge {

double to_double(const Rational& r) {
    return r.convert_to<double>();
}

std::string to_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) {
        return Rational(boost::multiprecision::cpp_int(text));
    }
    return Rational(boost::multiprecision::cpp_int(text.substr(0, slash)),
                    boost::multiprecision::cpp_int(text.substr(slash + 1)));
}

HdeEntry hde_pair(const Domain& gt, const Domain& gen, const NamedProblem& problem,
                  const std::vector<Plan>& plans, const PlannerConfig& cfg) {
    if (plans.empty()) {
        throw std::invalid_argument("hde_pair: problem " + problem.id + " has no ground-truth plans");
    }
    HdeEntry e;
    e.problem_id = problem.id;
    e.forward_den = plans.size();

    auto bound = rebind_problem(problem.problem, gen);
    if (!bound.ok()) {
        e.flags.push_back("rebind failure");
        return e;
    }
    for (const auto& plan : plans) {
        if (validate_bound(gen, *bound.problem, plan).valid()) ++e.forward_num;
    }
    e.forward = Rational(e.forward_num, e.forward_den);

    PlanSet generated = enumerate_plans(gen, *bound.problem, cfg);
    if (generated.status == PlanSearchStatus::Truncated) {
        e.flags.push_back("truncated");
    }
    e.backward_den = generated.plans.size();
    for (const auto& plan : generated.plans) {
        if (validate_plan(gt, problem.problem, plan).valid()) ++e.backward_num;
    }
    if (e.backward_den > 0) {
        e.backward = Rational(e.backward_num, e.backward_den);
    }
    e.score = (e.forward + e.backward) / 2;
    return e;
}

HdeBreakdown hde_domain(const Domain& gt, const Domain& gen, const std::vector<NamedProblem>& problems,
                        const std::map<std::string, std::vector<Plan>>& plans, const PlannerConfig& cfg) {
    HdeBreakdown out;
    if (problems.empty()) {
        return out;
    }
    for (const auto& p : problems) {
        auto it = plans.find(p.id);
        if (it == plans.end()) {
            throw std::invalid_argument("hde_domain: no plans for problem " + p.id);
        }
        out.per_problem.push_back(hde_pair(gt, gen, p, it->second, cfg));
        out.aggregate += out.per_problem.back().score;
    }
    out.aggregate /= static_cast<long long>(problems.size());
    return out;
}

std::size_t perfect_count(const std::vector<Rational>& scores) {
    std::size_t n = 0;
    for (const auto& s : scores) {
        if (s == 1) ++n;
    }
    return n;
}

std::string HdeBreakdown::to_csv() const {
    std::ostringstream out;
    out << "problem,forward_num,forward_den,backward_num,backward_den,score\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& e : per_problem) {
        out << e.problem_id << ',' << e.forward_num << ',' << e.forward_den << ',' << e.backward_num << ','
            << e.backward_den << ',' << to_double(e.score) << '\n';
    }
    return out.str();
}

std::string HdeBreakdown::to_table() const {
    std::size_t width = 7;
    for (const auto& e : per_problem) width = std::max(width, e.problem_id.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "problem" << "  forward    backward   score   flags\n";
    for (const auto& e : per_problem) {
        std::ostringstream fwd, bwd;
        fwd << e.forward_num << '/' << e.forward_den;
        bwd << e.backward_num << '/' << e.backward_den;
        out << std::left << std::setw(static_cast<int>(width)) << e.problem_id << "  " << std::setw(9)
            << fwd.str() << "  " << std::setw(9) << bwd.str() << "  " << std::fixed << std::setprecision(3)
            << std::setw(6) << to_double(e.score) << "  ";
        for (std::size_t i = 0; i < e.flags.size(); ++i) {
            out << (i ? "," : "") << e.flags[i];
        }
        out << '\n';
    }
    out << "aggregate " << std::fixed << std::setprecision(4) << to_double(aggregate) << " (" << to_string(aggregate)
        << ")\n";
    return out.str();
}

}  // namespace forge
