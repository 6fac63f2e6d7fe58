#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "apsf/gateway.hpp"
#include "apsf/scoring.hpp"

using namespace apsf;

namespace {

// Burns a deterministic amount of CPU per call so the fan-out has
// something to parallelize, mimicking a slow local model.
std::uint64_t busy_hash(std::uint64_t seed, int rounds) {
    std::uint64_t h = seed | 1;
    for (int i = 0; i < rounds; ++i) {
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 29;
    }
    return h;
}

double run_once(const std::string& prompt, const std::vector<Example>& dataset,
                Backend& worker, bool parallel, EmpiricalScore& out) {
    ScoringOptions options;
    options.parallel = parallel;
    auto start = std::chrono::steady_clock::now();
    out = parallel ? empirical_score(prompt, dataset, worker, options)
                   : empirical_score_serial(prompt, dataset, worker, options);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

int main(int argc, char** argv) {
    int examples = argc > 1 ? std::atoi(argv[1]) : 2000;
    int rounds = argc > 2 ? std::atoi(argv[2]) : 4000;
    int reps = argc > 3 ? std::atoi(argv[3]) : 3;
    if (examples < 1 || rounds < 1 || reps < 1) {
        std::fprintf(stderr, "usage: bench_scoring [examples] [work-rounds] [reps]\n");
        return 2;
    }

    std::vector<Example> dataset;
    dataset.reserve(static_cast<std::size_t>(examples));
    for (int i = 1; i <= examples; ++i)
        dataset.push_back({std::to_string(i), "what is item " + std::to_string(i) + "?",
                           std::to_string(i)});

    SyntheticBackend worker(
        "bench",
        [rounds](const ChatRequest& request) {
            const std::string& q = request.messages.back().content;
            std::uint64_t h = busy_hash(std::hash<std::string>{}(q), rounds);
            std::size_t at = q.rfind("item ");
            std::string id = at == std::string::npos
                                 ? "0"
                                 : q.substr(at + 5, q.find('?', at) - at - 5);
            bool flip = h % 7 == 0;
            return "the answer is " + (flip ? id + "0" : id);
        },
        true);

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("examples=%d work-rounds=%d reps=%d threads=%d\n", examples, rounds, reps,
                threads);

    const std::string prompt = "Answer with the item number.";
    double best_serial = 0.0, best_parallel = 0.0;
    EmpiricalScore serial_score, parallel_score;
    for (int r = 0; r < reps; ++r) {
        double s = run_once(prompt, dataset, worker, false, serial_score);
        double p = run_once(prompt, dataset, worker, true, parallel_score);
        if (r == 0 || s < best_serial) best_serial = s;
        if (r == 0 || p < best_parallel) best_parallel = p;
    }

    if (serial_score.value != parallel_score.value ||
        serial_score.correct_count != parallel_score.correct_count) {
        std::fprintf(stderr, "FAIL: serial and parallel scoring disagree (%s vs %s)\n",
                     serial_score.value.to_string().c_str(),
                     parallel_score.value.to_string().c_str());
        return 1;
    }
    for (std::size_t i = 0; i < serial_score.verdicts.size(); ++i) {
        if (serial_score.verdicts[i].correct != parallel_score.verdicts[i].correct ||
            serial_score.verdicts[i].raw_output != parallel_score.verdicts[i].raw_output) {
            std::fprintf(stderr, "FAIL: verdict %zu differs between serial and parallel\n", i);
            return 1;
        }
    }

    std::printf("score %s (%lld/%lld)\n", serial_score.value.to_string().c_str(),
                static_cast<long long>(serial_score.correct_count),
                static_cast<long long>(serial_score.total));
    std::printf("serial   %8.2f ms  (%.1f examples/ms)\n", best_serial * 1e3,
                examples / (best_serial * 1e3));
    std::printf("parallel %8.2f ms  (%.1f examples/ms)\n", best_parallel * 1e3,
                examples / (best_parallel * 1e3));
    std::printf("speedup  %.2fx\n", best_serial / best_parallel);
    return 0;
}
