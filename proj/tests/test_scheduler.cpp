#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "apsf/error.hpp"
#include "apsf/scheduler.hpp"

using namespace apsf;

namespace {

FactorSchema schema_of(std::size_t k) {
    std::vector<FactorSpec> specs;
    for (std::size_t i = 1; i <= k; ++i)
        specs.push_back({"Factor" + std::to_string(i) + "_F" + std::to_string(i),
                         "role " + std::to_string(i)});
    return FactorSchema(specs);
}

std::size_t pick(SchedulerState& state, std::size_t k) {
    SelectionHistory history(k);
    return next_factor(state, schema_of(k), nullptr, history, nullptr);
}

} // namespace

TEST_CASE("kind strings round-trip") {
    for (SchedulerKind kind : {SchedulerKind::ErrorGuided, SchedulerKind::RoundRobin,
                               SchedulerKind::Thompson, SchedulerKind::Greedy,
                               SchedulerKind::Random})
        CHECK(scheduler_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(scheduler_from_string("ucb"), Error);
}

TEST_CASE("round robin cycles through factors") {
    SchedulerState state = SchedulerState::make(SchedulerKind::RoundRobin, 3, 42);
    std::vector<std::size_t> picks;
    for (int i = 0; i < 4; ++i) picks.push_back(pick(state, 3));
    CHECK(picks == std::vector<std::size_t>{1, 2, 3, 1});

    std::set<std::size_t> window;
    for (int i = 0; i < 3; ++i) window.insert(pick(state, 3));
    CHECK(window.size() == 3);
}

TEST_CASE("thompson concentrates on the dominant arm") {
    SchedulerState state = SchedulerState::make(SchedulerKind::Thompson, 2, 42);
    state.alpha = {100, 1};
    state.beta = {1, 100};
    int first = 0;
    for (int i = 0; i < 1000; ++i)
        if (pick(state, 2) == 1) ++first;
    CHECK(first >= 950);
}

TEST_CASE("thompson and random sequences are reproducible from the seed") {
    for (SchedulerKind kind : {SchedulerKind::Thompson, SchedulerKind::Random}) {
        SchedulerState a = SchedulerState::make(kind, 4, 7);
        SchedulerState b = SchedulerState::make(kind, 4, 7);
        for (int i = 0; i < 50; ++i) CHECK(pick(a, 4) == pick(b, 4));
    }
}

TEST_CASE("greedy prefers the best realized mean and forces trials") {
    SchedulerState state = SchedulerState::make(SchedulerKind::Greedy, 2, 42);
    update(state, 1, true, Rational(1, 50));
    update(state, 2, false, Rational());
    CHECK(pick(state, 2) == 1);

    SchedulerState fresh = SchedulerState::make(SchedulerKind::Greedy, 3, 42);
    update(fresh, 1, true, Rational(1, 10));
    CHECK(pick(fresh, 3) == 2);
    update(fresh, 2, false, Rational());
    CHECK(pick(fresh, 3) == 3);
    update(fresh, 3, false, Rational());
    CHECK(pick(fresh, 3) == 1);

    SchedulerState mean = SchedulerState::make(SchedulerKind::Greedy, 2, 42);
    update(mean, 1, true, Rational(1, 50));
    update(mean, 1, true, Rational(2, 50));
    update(mean, 2, true, Rational(1, 50));
    update(mean, 2, true, Rational(1, 50));
    CHECK(mean.gain_sum[0] / Rational(mean.tried[0]) == Rational(3, 100));
    CHECK(pick(mean, 2) == 1);
}

TEST_CASE("random draws cover all factors and stay in range") {
    SchedulerState state = SchedulerState::make(SchedulerKind::Random, 4, 42);
    std::set<std::size_t> seen;
    for (int i = 0; i < 200; ++i) {
        std::size_t k = pick(state, 4);
        CHECK(k >= 1);
        CHECK(k <= 4);
        seen.insert(k);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("error guided delegates to the architect and needs a profile") {
    SchedulerState state = SchedulerState::make(SchedulerKind::ErrorGuided, 3, 42);
    SelectionHistory history(3);
    try {
        next_factor(state, schema_of(3), nullptr, history, nullptr);
        FAIL("expected missing profile");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingProfile);
    }

    ErrorProfile profile = build_error_profile(
        {{FailureCase{"1", "q", "g", "p", "r"}, Diagnosis{"", "reasoning", "", "", ""}}}, 3);
    SyntheticBackend architect("pick2", [](const ChatRequest&) { return "Factor2_F2"; });
    CHECK(next_factor(state, schema_of(3), &profile, history, &architect) == 2);
}

TEST_CASE("updates only touch the owning strategy state") {
    SchedulerState thompson = SchedulerState::make(SchedulerKind::Thompson, 3, 42);
    update(thompson, 2, true, Rational(1, 50));
    update(thompson, 2, false, Rational());
    CHECK(thompson.alpha == std::vector<int>{1, 2, 1});
    CHECK(thompson.beta == std::vector<int>{1, 2, 1});

    SchedulerState random = SchedulerState::make(SchedulerKind::Random, 3, 42);
    nlohmann::json before = random.to_json();
    update(random, 1, true, Rational(1, 2));
    CHECK(random.to_json() == before);

    SchedulerState rr = SchedulerState::make(SchedulerKind::RoundRobin, 3, 42);
    before = rr.to_json();
    update(rr, 3, false, Rational());
    CHECK(rr.to_json() == before);
}

TEST_CASE("state serialization resumes the exact draw sequence") {
    for (SchedulerKind kind : {SchedulerKind::RoundRobin, SchedulerKind::Thompson,
                               SchedulerKind::Greedy, SchedulerKind::Random}) {
        SchedulerState state = SchedulerState::make(kind, 4, 13);
        if (kind == SchedulerKind::Greedy)
            for (std::size_t k = 1; k <= 4; ++k) update(state, k, k % 2 == 0, Rational(1, 50));
        for (int i = 0; i < 5; ++i) pick(state, 4);

        SchedulerState resumed = SchedulerState::from_json(state.to_json());
        for (int i = 0; i < 5; ++i) CHECK(pick(state, 4) == pick(resumed, 4));
    }
}

TEST_CASE("every strategy returns indices in range") {
    for (SchedulerKind kind : {SchedulerKind::RoundRobin, SchedulerKind::Thompson,
                               SchedulerKind::Greedy, SchedulerKind::Random}) {
        for (std::uint64_t seed : {1ULL, 9ULL, 77ULL}) {
            for (std::size_t k : {1u, 2u, 5u}) {
                SchedulerState state = SchedulerState::make(kind, k, seed);
                for (int i = 0; i < 20; ++i) {
                    std::size_t choice = pick(state, k);
                    CHECK(choice >= 1);
                    CHECK(choice <= k);
                    update(state, choice, (i + static_cast<int>(choice)) % 3 == 0,
                           Rational(1, 50));
                }
            }
        }
    }
}
