#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "apsf/gateway.hpp"
#include "apsf/optimizer.hpp"
#include "apsf/rational.hpp"
#include "apsf/scoring.hpp"

namespace apsf {

// A factor-optimization environment with known ground truth. Each factor
// holds one candidate from its pool, each candidate carries a quality in
// [0,1], and example i is answered correctly iff the mean quality of the
// chosen candidates reaches its difficulty d_i. Scores are therefore
// exact rationals and every optimum is enumerable.
struct SyntheticTaskSpec {
    int factor_count = 0;
    std::vector<std::vector<Rational>> pools; // candidate qualities per factor
    std::vector<int> initial;                 // starting candidate index per factor
    std::vector<Rational> difficulties;       // ascending, each in [0,1]
    std::uint64_t seed = 42;

    void validate() const;
    nlohmann::json to_json() const;
    static SyntheticTaskSpec from_json(const nlohmann::json& j);
};

// Choices are carried in plain text: factor k's candidate j is tagged
// "@<A+k-1><a+j>" inside its factor text, so the worker can decode the
// full assignment from the assembled prompt alone and echoes the decoded
// tags in its replies for the diagnoser to read back.
std::string candidate_tag(int factor, int candidate);
std::string candidate_text(int factor, int candidate);
std::string synthetic_factor_name(int factor);
int decode_choice(const std::string& text, int factor); // -1 when absent

std::vector<Example> make_dataset(const SyntheticTaskSpec& spec);
TaskContext synthetic_context(const SyntheticTaskSpec& spec);

Rational mean_quality(const SyntheticTaskSpec& spec, const std::vector<int>& choice);
Rational assignment_score(const SyntheticTaskSpec& spec, const std::vector<int>& choice);

// Best single-candidate score gain available in `factor` (1-based) from
// the given assignment; never negative because keeping the current
// candidate is always available.
Rational factor_potential(const SyntheticTaskSpec& spec, const std::vector<int>& choice,
                          int factor);

struct EnvironmentOptions {
    // Probability that a diagnosis names the factor with the largest
    // available gain; misses pick a factor uniformly at random using the
    // spec seed. 1.0 keeps both backends pure functions.
    double truthfulness = 1.0;
};

struct Environment {
    SyntheticBackend worker;
    SyntheticBackend architect;
};

Environment make_environment(const SyntheticTaskSpec& spec,
                             const EnvironmentOptions& options = {});

struct OracleResult {
    SyntheticTaskSpec spec;
    std::vector<int> optimal;            // lexicographically smallest maximiser
    Rational optimal_score;
    std::vector<Rational> oracle_gains;  // greedy best-gain path from the initial assignment

    nlohmann::json to_json() const;
};

// Enumerates every assignment exactly; refuses past 10^6 combinations.
OracleResult brute_force_optimum(const SyntheticTaskSpec& spec);

// Cumulative best-available gain minus the gain available in the factor
// the run actually selected, summed over post-warm-start steps, with the
// assignment replayed from the report's accepted edits.
Rational regret(const RunReport& report, const OracleResult& oracle);

// Seeded families: "bottleneck" concentrates post-warm-start improvement
// in one factor behind a small warm-start enabler, "uniform" spreads
// random quality headroom everywhere, "saturated" has none anywhere.
SyntheticTaskSpec generate_spec(const std::string& family, int factor_count, int pool_size,
                                int examples, std::uint64_t seed);

} // namespace apsf
