#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "apsf/architect.hpp"
#include "apsf/rng.hpp"

namespace apsf {

enum class SchedulerKind { ErrorGuided, RoundRobin, Thompson, Greedy, Random };

const char* to_string(SchedulerKind kind);
SchedulerKind scheduler_from_string(const std::string& text);

// Strategy state owned by the optimizer and carried through checkpoints.
// Thompson rewards are acceptance events over a Beta(1,1) prior; Greedy
// tracks realized mean gain (accepted gains over all trials).
struct SchedulerState {
    SchedulerKind kind = SchedulerKind::ErrorGuided;
    std::size_t cursor = 1;         // round-robin
    std::vector<int> alpha, beta;   // thompson, 1-based factor k at [k-1]
    std::vector<Rational> gain_sum; // greedy
    std::vector<int> tried;         // greedy
    Rng rng;

    static SchedulerState make(SchedulerKind kind, std::size_t factor_count,
                               std::uint64_t seed);

    nlohmann::json to_json() const;
    static SchedulerState from_json(const nlohmann::json& j);
};

// Picks the factor for the next post-warm-start step. ErrorGuided needs
// a profile and an architect handle and throws MissingProfile without
// them; the other strategies ignore both.
std::size_t next_factor(SchedulerState& state, const FactorSchema& schema,
                        const ErrorProfile* profile, const SelectionHistory& history,
                        Backend* architect, const ArchitectOptions& opts = {});

void update(SchedulerState& state, std::size_t k1, bool accepted, const Rational& gain);

} // namespace apsf
