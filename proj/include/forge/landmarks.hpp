#pragma once

// Fact landmarks by delete-relaxation backchaining and the disjunctive
// action landmarks formed by their achievers.

#include "forge/pddl.hpp"
#include "forge/planner.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

struct DisjunctiveActionLandmark {
    std::vector<ActionCall> actions;  // sorted, nonempty
    std::optional<Atom> origin;

    bool operator==(const DisjunctiveActionLandmark&) const = default;

    // Comma separated actions, the form spliced into feedback prompts.
    std::string joined(const char* sep = ", ") const;
};

class LandmarkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LandmarkConfig {
    // State budget for the exact reachability filter; above it the
    // relaxed-reachability filter is used instead.
    std::size_t node_limit = 200'000;
};

// Sound single-fact landmarks. Throws LandmarkError when the problem is
// unsolvable and RebindError when it does not bind to the domain.
AtomSet extract_fact_landmarks(const Domain& domain, const Problem& problem, LandmarkConfig cfg = {});

// One landmark per fact not in the initial state: the actions adding it that
// can be applied in some reachable state lacking it. Sorted by origin.
std::vector<DisjunctiveActionLandmark> achiever_landmarks(const Domain& domain, const Problem& problem,
                                                          const AtomSet& facts, LandmarkConfig cfg = {});

// extract_fact_landmarks followed by achiever_landmarks.
std::vector<DisjunctiveActionLandmark> extract_action_landmarks(const Domain& domain, const Problem& problem,
                                                                LandmarkConfig cfg = {});

bool landmark_hit(const DisjunctiveActionLandmark& lm, const std::vector<Plan>& plans);

std::vector<DisjunctiveActionLandmark> read_landmarks(std::string_view text);
std::string write_landmarks(const std::vector<DisjunctiveActionLandmark>& landmarks);

}  // namespace forge
