#include "apsf/scheduler.hpp"

#include <algorithm>

#include "apsf/error.hpp"

namespace apsf {

namespace {

// Exact order-statistic form: Beta(a,b) with integer shapes is the a-th
// smallest of a+b-1 uniforms. Avoids libm so draws are a pure function
// of the rng stream.
double sample_beta(Rng& rng, int a, int b) {
    std::vector<double> u(static_cast<std::size_t>(a + b - 1));
    for (double& x : u) x = rng.next_unit();
    std::nth_element(u.begin(), u.begin() + (a - 1), u.end());
    return u[static_cast<std::size_t>(a - 1)];
}

} // namespace

const char* to_string(SchedulerKind kind) {
    switch (kind) {
    case SchedulerKind::ErrorGuided: return "error-guided";
    case SchedulerKind::RoundRobin: return "round-robin";
    case SchedulerKind::Thompson: return "thompson";
    case SchedulerKind::Greedy: return "greedy";
    case SchedulerKind::Random: return "random";
    }
    return "error-guided";
}

SchedulerKind scheduler_from_string(const std::string& text) {
    for (SchedulerKind kind : {SchedulerKind::ErrorGuided, SchedulerKind::RoundRobin,
                               SchedulerKind::Thompson, SchedulerKind::Greedy,
                               SchedulerKind::Random}) {
        if (text == to_string(kind)) return kind;
    }
    throw Error(ErrorKind::ConfigError, "unknown scheduler \"" + text + "\"");
}

SchedulerState SchedulerState::make(SchedulerKind kind, std::size_t factor_count,
                                    std::uint64_t seed) {
    if (factor_count < 1) throw Error(ErrorKind::ConfigError, "scheduler needs K >= 1");
    SchedulerState state;
    state.kind = kind;
    state.cursor = 1;
    state.alpha.assign(factor_count, 1);
    state.beta.assign(factor_count, 1);
    state.gain_sum.assign(factor_count, Rational());
    state.tried.assign(factor_count, 0);
    state.rng = Rng(seed);
    return state;
}

nlohmann::json SchedulerState::to_json() const {
    nlohmann::json gains = nlohmann::json::array();
    for (const Rational& g : gain_sum) gains.push_back(g.to_string());
    return {{"kind", to_string(kind)},
            {"cursor", cursor},
            {"alpha", alpha},
            {"beta", beta},
            {"gain_sum", gains},
            {"tried", tried},
            {"rng_state", rng.state()}};
}

SchedulerState SchedulerState::from_json(const nlohmann::json& j) {
    SchedulerState state;
    state.kind = scheduler_from_string(j.at("kind").get<std::string>());
    state.cursor = j.at("cursor").get<std::size_t>();
    state.alpha = j.at("alpha").get<std::vector<int>>();
    state.beta = j.at("beta").get<std::vector<int>>();
    for (const nlohmann::json& g : j.at("gain_sum"))
        state.gain_sum.push_back(Rational::parse(g.get<std::string>()));
    state.tried = j.at("tried").get<std::vector<int>>();
    state.rng.set_state(j.at("rng_state").get<std::uint64_t>());
    return state;
}

std::size_t next_factor(SchedulerState& state, const FactorSchema& schema,
                        const ErrorProfile* profile, const SelectionHistory& history,
                        Backend* architect, const ArchitectOptions& opts) {
    const std::size_t k = schema.size();
    if (k < 1) throw Error(ErrorKind::ConfigError, "scheduler needs K >= 1");

    switch (state.kind) {
    case SchedulerKind::ErrorGuided: {
        if (!profile || !architect)
            throw Error(ErrorKind::MissingProfile,
                        "error-guided selection needs an error profile and an architect");
        return select_factor(schema, *profile, history, *architect, opts);
    }
    case SchedulerKind::RoundRobin: {
        std::size_t pick = state.cursor;
        state.cursor = state.cursor % k + 1;
        return pick;
    }
    case SchedulerKind::Thompson: {
        std::size_t best = 1;
        double best_sample = -1.0;
        for (std::size_t i = 0; i < k; ++i) {
            double sample = sample_beta(state.rng, state.alpha[i], state.beta[i]);
            if (sample > best_sample) {
                best_sample = sample;
                best = i + 1;
            }
        }
        return best;
    }
    case SchedulerKind::Greedy: {
        for (std::size_t i = 0; i < k; ++i)
            if (state.tried[i] == 0) return i + 1;
        std::size_t best = 1;
        for (std::size_t i = 1; i < k; ++i) {
            // mean_i > mean_best as exact cross-multiplication
            if (state.gain_sum[i] * Rational(state.tried[best - 1]) >
                state.gain_sum[best - 1] * Rational(state.tried[i]))
                best = i + 1;
        }
        return best;
    }
    case SchedulerKind::Random:
        return static_cast<std::size_t>(state.rng.next_below(k)) + 1;
    }
    throw Error(ErrorKind::ConfigError, "unknown scheduler kind");
}

void update(SchedulerState& state, std::size_t k1, bool accepted, const Rational& gain) {
    if (k1 < 1 || k1 > state.alpha.size())
        throw Error(ErrorKind::IndexOutOfRange, "factor " + std::to_string(k1));
    switch (state.kind) {
    case SchedulerKind::Thompson:
        if (accepted) state.alpha[k1 - 1] += 1;
        else state.beta[k1 - 1] += 1;
        break;
    case SchedulerKind::Greedy:
        state.tried[k1 - 1] += 1;
        if (accepted) state.gain_sum[k1 - 1] += gain;
        break;
    case SchedulerKind::ErrorGuided:
    case SchedulerKind::RoundRobin:
    case SchedulerKind::Random:
        break;
    }
}

} // namespace apsf
