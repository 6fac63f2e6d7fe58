#pragma once

#include <vector>

#include <json.hpp>

#include "apsf/rational.hpp"

namespace apsf {

struct FactorStats {
    int selections = 0;      // post-warm-start only
    int warm_selections = 0; // warm-start visits
    int accept_successes = 0;
    int accept_failures = 0;
    Rational accepted_gain_sum;
    int last_selected_step = -1;
};

// Per-factor selection and acceptance record shared by the selection
// prompt, the schedulers, and run checkpoints. The optimizer serializes
// all updates; one record_selection call is followed by exactly one
// record_outcome call for the same factor.
class SelectionHistory {
public:
    SelectionHistory() = default;
    explicit SelectionHistory(std::size_t factor_count);

    std::size_t factor_count() const { return stats_.size(); }
    const FactorStats& stats(std::size_t k1) const;
    int post_steps() const { return post_steps_; }

    void record_selection(std::size_t k1, int step, bool warm_start);
    void record_outcome(std::size_t k1, bool accepted, const Rational& gain);

    // Selected in more than half of the post-warm-start steps so far.
    std::vector<std::size_t> overexplored() const;
    // Never selected post-warm-start.
    std::vector<std::size_t> underexplored() const;

    // Factor to drop from the next selection's list, or 0 when none.
    // Set while the same factor was selected and rejected in the two
    // most recent post-warm-start steps; escapes local optima without
    // randomness.
    std::size_t excluded_factor() const;

    nlohmann::json to_json() const;
    static SelectionHistory from_json(const nlohmann::json& j);

private:
    std::vector<FactorStats> stats_;
    int post_steps_ = 0;
    std::size_t pending_ = 0; // factor awaiting its outcome, 0 = none
    bool pending_post_ = false;
    std::size_t streak_factor_ = 0;
    int streak_rejects_ = 0;
};

} // namespace apsf
