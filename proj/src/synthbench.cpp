#include "apsf/synthbench.hpp"

#include <algorithm>
#include <cctype>
#include <memory>
#include <mutex>

#include "apsf/error.hpp"
#include "apsf/rng.hpp"

namespace apsf {

namespace {

char factor_letter(int factor) { return static_cast<char>('A' + factor - 1); }

Rational quality(const SyntheticTaskSpec& spec, int factor, int candidate) {
    const auto& pool = spec.pools[static_cast<std::size_t>(factor - 1)];
    if (candidate < 0 || candidate >= static_cast<int>(pool.size())) return Rational(0);
    return pool[static_cast<std::size_t>(candidate)];
}

std::vector<int> decode_all(const std::string& text, int factor_count) {
    std::vector<int> choice(static_cast<std::size_t>(factor_count), -1);
    for (int k = 1; k <= factor_count; ++k)
        choice[static_cast<std::size_t>(k - 1)] = decode_choice(text, k);
    return choice;
}

std::string line_after(const std::string& text, const std::string& marker) {
    std::size_t at = text.find(marker);
    if (at == std::string::npos) return "";
    at += marker.size();
    std::size_t end = text.find('\n', at);
    return text.substr(at, end == std::string::npos ? std::string::npos : end - at);
}

std::string block_between(const std::string& text, const std::string& marker,
                          const std::string& stop) {
    std::size_t at = text.find(marker);
    if (at == std::string::npos) return "";
    at += marker.size();
    std::size_t end = text.find(stop, at);
    return text.substr(at, end == std::string::npos ? std::string::npos : end - at);
}

int parse_factor_index(const std::string& text, int factor_count) {
    std::string lower;
    lower.reserve(text.size());
    for (char c : text)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    std::size_t at = lower.find("factor");
    if (at == std::string::npos) return 1;
    at += 6;
    int value = 0;
    bool any = false;
    while (at < lower.size() && std::isdigit(static_cast<unsigned char>(lower[at]))) {
        value = value * 10 + (lower[at] - '0');
        any = true;
        ++at;
    }
    if (!any || value < 1 || value > factor_count) return 1;
    return value;
}

// Largest-gain factor, ties to the lowest index.
int best_factor(const SyntheticTaskSpec& spec, const std::vector<int>& choice) {
    int pick = 1;
    Rational best = factor_potential(spec, choice, 1);
    for (int k = 2; k <= spec.factor_count; ++k) {
        Rational gain = factor_potential(spec, choice, k);
        if (gain > best) {
            best = gain;
            pick = k;
        }
    }
    return pick;
}

std::string structure_reply(const SyntheticTaskSpec& spec) {
    std::string tpl;
    for (int k = 1; k <= spec.factor_count; ++k) {
        if (k > 1) tpl += " ";
        tpl += candidate_text(k, spec.initial[static_cast<std::size_t>(k - 1)]);
    }
    std::string reply = "Section 1: Complexity Analysis\n";
    reply += std::to_string(spec.factor_count) +
             " independent slots, one tagged candidate each.\n";
    reply += "Section 2: Complete Instruction Template\n" + tpl + "\n";
    reply += "Section 3: Factor Decomposition\n";
    for (int k = 1; k <= spec.factor_count; ++k)
        reply += synthetic_factor_name(k) + ": pick the candidate tag for slot " +
                 factor_letter(k) + "\n";
    reply += "Section 4: Factor Boundary Mapping\n";
    for (int k = 1; k <= spec.factor_count; ++k)
        reply += synthetic_factor_name(k) + ": \"" +
                 candidate_text(k, spec.initial[static_cast<std::size_t>(k - 1)]) + "\"\n";
    return reply;
}

std::string diagnosis_reply(const std::string& factor_name) {
    return "Error Essence: a slot carries a low-quality tag\n"
           "Error Type: " + factor_name + " shortfall\n"
           "Error Mechanism: the mean candidate quality stays below the case threshold\n"
           "Error Impact: every case above the mean fails\n"
           "Improvement Suggestion: switch " + factor_name + " to a higher-quality tag\n";
}

struct DiagnoserState {
    std::mutex mutex;
    Rng rng;
};

} // namespace

void SyntheticTaskSpec::validate() const {
    if (factor_count < 1)
        throw Error(ErrorKind::SpecError, "factor count must be at least 1");
    if (factor_count > 26)
        throw Error(ErrorKind::SpecError, "factor count exceeds the 26 tag letters");
    if (pools.size() != static_cast<std::size_t>(factor_count))
        throw Error(ErrorKind::SpecError, "expected one pool per factor");
    for (std::size_t k = 0; k < pools.size(); ++k) {
        if (pools[k].empty())
            throw Error(ErrorKind::SpecError,
                        "pool " + std::to_string(k + 1) + " is empty");
        if (pools[k].size() > 26)
            throw Error(ErrorKind::SpecError,
                        "pool " + std::to_string(k + 1) + " exceeds 26 candidates");
        for (const Rational& q : pools[k])
            if (q < Rational(0) || Rational(1) < q)
                throw Error(ErrorKind::SpecError,
                            "quality outside [0,1] in pool " + std::to_string(k + 1));
    }
    if (initial.size() != static_cast<std::size_t>(factor_count))
        throw Error(ErrorKind::SpecError, "expected one initial choice per factor");
    for (std::size_t k = 0; k < initial.size(); ++k)
        if (initial[k] < 0 || initial[k] >= static_cast<int>(pools[k].size()))
            throw Error(ErrorKind::SpecError,
                        "initial choice out of range for factor " + std::to_string(k + 1));
    if (difficulties.empty())
        throw Error(ErrorKind::SpecError, "at least one example difficulty required");
    for (std::size_t i = 0; i < difficulties.size(); ++i) {
        if (difficulties[i] < Rational(0) || Rational(1) < difficulties[i])
            throw Error(ErrorKind::SpecError, "difficulty outside [0,1]");
        if (i > 0 && difficulties[i] < difficulties[i - 1])
            throw Error(ErrorKind::SpecError, "difficulties must be sorted ascending");
    }
}

nlohmann::json SyntheticTaskSpec::to_json() const {
    nlohmann::json pool_rows = nlohmann::json::array();
    for (const auto& pool : pools) {
        nlohmann::json row = nlohmann::json::array();
        for (const Rational& q : pool) row.push_back(q.to_string());
        pool_rows.push_back(std::move(row));
    }
    nlohmann::json diffs = nlohmann::json::array();
    for (const Rational& d : difficulties) diffs.push_back(d.to_string());
    return {{"factor_count", factor_count},
            {"pools", std::move(pool_rows)},
            {"initial", initial},
            {"difficulties", std::move(diffs)},
            {"seed", seed}};
}

SyntheticTaskSpec SyntheticTaskSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::SpecError, "spec must be a JSON object");
    SyntheticTaskSpec spec;
    try {
        spec.factor_count = j.at("factor_count").get<int>();
        for (const auto& row : j.at("pools")) {
            std::vector<Rational> pool;
            for (const auto& q : row) pool.push_back(Rational::parse(q.get<std::string>()));
            spec.pools.push_back(std::move(pool));
        }
        spec.initial = j.at("initial").get<std::vector<int>>();
        for (const auto& d : j.at("difficulties"))
            spec.difficulties.push_back(Rational::parse(d.get<std::string>()));
        spec.seed = j.value("seed", std::uint64_t(42));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::SpecError, std::string("malformed spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string candidate_tag(int factor, int candidate) {
    return std::string("@") + factor_letter(factor) +
           static_cast<char>('a' + candidate);
}

std::string candidate_text(int factor, int candidate) {
    return std::string("Slot ") + factor_letter(factor) + " uses tag " +
           candidate_tag(factor, candidate) + ".";
}

std::string synthetic_factor_name(int factor) {
    return "Factor" + std::to_string(factor) + "_Slot" + factor_letter(factor);
}

int decode_choice(const std::string& text, int factor) {
    std::string prefix = std::string("@") + factor_letter(factor);
    std::size_t at = 0;
    while ((at = text.find(prefix, at)) != std::string::npos) {
        std::size_t next = at + prefix.size();
        if (next < text.size() && text[next] >= 'a' && text[next] <= 'z')
            return text[next] - 'a';
        at = next;
    }
    return -1;
}

std::vector<Example> make_dataset(const SyntheticTaskSpec& spec) {
    spec.validate();
    std::vector<Example> out;
    out.reserve(spec.difficulties.size());
    for (std::size_t i = 0; i < spec.difficulties.size(); ++i) {
        std::string id = std::to_string(i + 1);
        out.push_back({id,
                       "threshold " + spec.difficulties[i].to_string() + " case " + id,
                       "1"});
    }
    return out;
}

TaskContext synthetic_context(const SyntheticTaskSpec& spec) {
    std::vector<Example> data = make_dataset(spec);
    if (data.size() > 2) data.resize(2);
    return {"Pick the tagged candidate for each slot so that as many threshold checks as "
            "possible pass.",
            "synthetic", "1 when the check passes, 0 otherwise",
            "keep one @-tag per slot", std::move(data)};
}

Rational mean_quality(const SyntheticTaskSpec& spec, const std::vector<int>& choice) {
    Rational sum(0);
    for (int k = 1; k <= spec.factor_count; ++k)
        sum = sum + quality(spec, k, choice[static_cast<std::size_t>(k - 1)]);
    return sum * Rational(1, spec.factor_count);
}

Rational assignment_score(const SyntheticTaskSpec& spec, const std::vector<int>& choice) {
    Rational mean = mean_quality(spec, choice);
    auto past = std::upper_bound(spec.difficulties.begin(), spec.difficulties.end(), mean);
    auto correct = static_cast<std::int64_t>(past - spec.difficulties.begin());
    return Rational(correct, static_cast<std::int64_t>(spec.difficulties.size()));
}

Rational factor_potential(const SyntheticTaskSpec& spec, const std::vector<int>& choice,
                          int factor) {
    Rational base = assignment_score(spec, choice);
    Rational best = base;
    std::vector<int> probe = choice;
    const auto& pool = spec.pools[static_cast<std::size_t>(factor - 1)];
    for (int j = 0; j < static_cast<int>(pool.size()); ++j) {
        probe[static_cast<std::size_t>(factor - 1)] = j;
        Rational score = assignment_score(spec, probe);
        if (score > best) best = score;
    }
    return best - base;
}

Environment make_environment(const SyntheticTaskSpec& spec,
                             const EnvironmentOptions& options) {
    spec.validate();
    if (options.truthfulness < 0.0 || options.truthfulness > 1.0)
        throw Error(ErrorKind::SpecError, "truthfulness must lie in [0,1]");
    auto shared = std::make_shared<const SyntheticTaskSpec>(spec);
    auto diag = std::make_shared<DiagnoserState>();
    diag->rng = Rng(spec.seed);
    double truthfulness = options.truthfulness;

    SyntheticBackend worker(
        "synth-worker",
        [shared](const ChatRequest& request) -> std::string {
            const std::string& content = request.messages.back().content;
            std::size_t cut = content.rfind("\n\n");
            std::string prompt =
                cut == std::string::npos ? content : content.substr(0, cut);
            std::string question =
                cut == std::string::npos ? content : content.substr(cut + 2);
            Rational threshold(0);
            std::size_t at = question.find("threshold ");
            if (at != std::string::npos) {
                at += 10;
                std::size_t end = question.find(" case", at);
                threshold = Rational::parse(question.substr(
                    at, end == std::string::npos ? std::string::npos : end - at));
            }
            std::vector<int> choice = decode_all(prompt, shared->factor_count);
            bool pass = mean_quality(*shared, choice) >= threshold;
            std::string echo;
            for (int k = 1; k <= shared->factor_count; ++k) {
                int j = choice[static_cast<std::size_t>(k - 1)];
                echo += " ";
                echo += j >= 0 ? candidate_tag(k, j)
                               : std::string("@") + factor_letter(k) + "-";
            }
            return (pass ? "1" : "0") + echo;
        },
        true);

    SyntheticBackend architect(
        "synth-architect",
        [shared, diag, truthfulness](const ChatRequest& request) -> std::string {
            const SyntheticTaskSpec& spec = *shared;
            const std::string& text = request.messages.back().content;
            if (text.find("four sections") != std::string::npos)
                return structure_reply(spec);
            if (text.find("Output ONLY the factor name.") != std::string::npos) {
                std::string label = line_after(text, "Primary Error Type: ");
                return synthetic_factor_name(parse_factor_index(label, spec.factor_count));
            }
            if (text.find("error analysis expert") != std::string::npos) {
                std::string trace = line_after(text, "AI Reasoning Process: ");
                if (trace.find('@') == std::string::npos)
                    trace = line_after(text, "AI Predicted Answer: ");
                std::vector<int> choice = decode_all(trace, spec.factor_count);
                int pick = best_factor(spec, choice);
                if (truthfulness < 1.0) {
                    std::lock_guard<std::mutex> guard(diag->mutex);
                    if (diag->rng.next_unit() >= truthfulness)
                        pick = 1 + static_cast<int>(diag->rng.next_below(
                                       static_cast<std::uint64_t>(spec.factor_count)));
                }
                return diagnosis_reply(synthetic_factor_name(pick));
            }
            if (text.find("improved versions of the complete prompt") !=
                std::string::npos) {
                std::string current =
                    block_between(text, "Current Complete Prompt: ", "\nFactor Segments");
                std::vector<int> choice = decode_all(current, spec.factor_count);
                for (int k = 1; k <= spec.factor_count; ++k)
                    if (choice[static_cast<std::size_t>(k - 1)] < 0)
                        choice[static_cast<std::size_t>(k - 1)] =
                            spec.initial[static_cast<std::size_t>(k - 1)];
                int target = best_factor(spec, choice);
                nlohmann::json outer = nlohmann::json::array();
                const auto& pool = spec.pools[static_cast<std::size_t>(target - 1)];
                for (int j = 0; j < static_cast<int>(pool.size()); ++j) {
                    nlohmann::json inner = nlohmann::json::array();
                    for (int k = 1; k <= spec.factor_count; ++k)
                        inner.push_back(candidate_text(
                            k, k == target ? j
                                           : choice[static_cast<std::size_t>(k - 1)]));
                    outer.push_back(std::move(inner));
                }
                return outer.dump();
            }
            std::string name = line_after(text, "Role/Goal of this factor: ");
            if (name.empty()) return "[]";
            int k = parse_factor_index(name, spec.factor_count);
            nlohmann::json arr = nlohmann::json::array();
            const auto& pool = spec.pools[static_cast<std::size_t>(k - 1)];
            for (int j = 0; j < static_cast<int>(pool.size()); ++j)
                arr.push_back(candidate_text(k, j));
            return arr.dump();
        },
        truthfulness >= 1.0);

    return Environment{std::move(worker), std::move(architect)};
}

nlohmann::json OracleResult::to_json() const {
    nlohmann::json gains = nlohmann::json::array();
    for (const Rational& g : oracle_gains) gains.push_back(g.to_string());
    return {{"spec", spec.to_json()},
            {"optimal", optimal},
            {"optimal_score", optimal_score.to_string()},
            {"oracle_gains", std::move(gains)}};
}

OracleResult brute_force_optimum(const SyntheticTaskSpec& spec) {
    spec.validate();
    std::int64_t combinations = 1;
    for (const auto& pool : spec.pools) {
        combinations *= static_cast<std::int64_t>(pool.size());
        if (combinations > 1000000)
            throw Error(ErrorKind::TooLarge,
                        "assignment space exceeds 10^6 combinations");
    }

    OracleResult result;
    result.spec = spec;
    std::vector<int> choice(static_cast<std::size_t>(spec.factor_count), 0);
    result.optimal = choice;
    result.optimal_score = assignment_score(spec, choice);
    // Odometer enumeration in lexicographic order; strict improvement
    // keeps the lexicographically smallest maximiser.
    while (true) {
        int pos = spec.factor_count - 1;
        while (pos >= 0) {
            auto idx = static_cast<std::size_t>(pos);
            if (choice[idx] + 1 < static_cast<int>(spec.pools[idx].size())) {
                ++choice[idx];
                break;
            }
            choice[idx] = 0;
            --pos;
        }
        if (pos < 0) break;
        Rational score = assignment_score(spec, choice);
        if (score > result.optimal_score) {
            result.optimal_score = score;
            result.optimal = choice;
        }
    }

    std::vector<int> greedy = spec.initial;
    while (true) {
        int pick = best_factor(spec, greedy);
        Rational gain = factor_potential(spec, greedy, pick);
        if (!(gain > Rational(0))) break;
        result.oracle_gains.push_back(gain);
        auto idx = static_cast<std::size_t>(pick - 1);
        Rational base = assignment_score(spec, greedy);
        int best_j = greedy[idx];
        Rational best_score = base;
        std::vector<int> probe = greedy;
        for (int j = 0; j < static_cast<int>(spec.pools[idx].size()); ++j) {
            probe[idx] = j;
            Rational score = assignment_score(spec, probe);
            if (score > best_score) {
                best_score = score;
                best_j = j;
            }
        }
        greedy[idx] = best_j;
    }
    return result;
}

Rational regret(const RunReport& report, const OracleResult& oracle) {
    const SyntheticTaskSpec& spec = oracle.spec;
    spec.validate();
    if (report.val_size != static_cast<std::int64_t>(spec.difficulties.size()))
        throw Error(ErrorKind::SpecMismatch,
                    "report validation size does not match the spec");
    std::vector<int> choice = spec.initial;
    Rational total(0);
    for (const StepRecord& step : report.trajectory) {
        if (step.factor < 1 || step.factor > spec.factor_count)
            throw Error(ErrorKind::SpecMismatch,
                        "step " + std::to_string(step.t) +
                            " has no usable factor selection");
        if (!step.warm_start) {
            Rational best(0);
            for (int k = 1; k <= spec.factor_count; ++k) {
                Rational gain = factor_potential(spec, choice, k);
                if (gain > best) best = gain;
            }
            total = total + best - factor_potential(spec, choice, step.factor);
        }
        if (step.accepted) {
            if (step.accepted_index < 0 ||
                step.accepted_index >= static_cast<int>(step.candidates.size()) ||
                step.candidates[static_cast<std::size_t>(step.accepted_index)]
                        .texts.size() != 1)
                throw Error(ErrorKind::SpecMismatch,
                            "accepted step " + std::to_string(step.t) +
                                " does not carry a single factor text");
            const std::string& text =
                step.candidates[static_cast<std::size_t>(step.accepted_index)].texts[0];
            choice[static_cast<std::size_t>(step.factor - 1)] =
                decode_choice(text, step.factor);
        }
    }
    return total;
}

SyntheticTaskSpec generate_spec(const std::string& family, int factor_count,
                                int pool_size, int examples, std::uint64_t seed) {
    if (factor_count < 1 || pool_size < 1 || examples < 1)
        throw Error(ErrorKind::SpecError, "family dimensions must be positive");
    Rng rng(seed);
    SyntheticTaskSpec spec;
    spec.factor_count = factor_count;
    spec.seed = seed;

    if (family == "uniform") {
        for (int k = 0; k < factor_count; ++k) {
            std::vector<Rational> pool;
            for (int j = 0; j < pool_size; ++j)
                pool.emplace_back(static_cast<std::int64_t>(rng.next_below(9)), 8);
            spec.pools.push_back(std::move(pool));
            spec.initial.push_back(
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(pool_size))));
        }
        for (int i = 1; i <= examples; ++i)
            spec.difficulties.emplace_back(i, examples + 1);
        return spec;
    }

    if (family == "saturated") {
        for (int k = 0; k < factor_count; ++k) {
            Rational q(static_cast<std::int64_t>(1 + rng.next_below(3)), 4);
            spec.pools.emplace_back(static_cast<std::size_t>(pool_size), q);
            spec.initial.push_back(
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(pool_size))));
        }
        for (int i = 1; i <= examples; ++i)
            spec.difficulties.emplace_back(i, examples + 1);
        return spec;
    }

    if (family == "bottleneck") {
        if (factor_count < 2 || pool_size < 3 || examples < 3)
            throw Error(ErrorKind::SpecError,
                        "bottleneck family needs K >= 2, pools >= 3, examples >= 3");
        int bottleneck =
            1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(factor_count - 1)));
        int enabler = bottleneck + 1 +
                      static_cast<int>(rng.next_below(
                          static_cast<std::uint64_t>(factor_count - bottleneck)));
        for (int k = 1; k <= factor_count; ++k) {
            std::vector<Rational> pool;
            if (k == bottleneck) {
                pool = {Rational(0), Rational(1, 4), Rational(1, 2)};
                while (static_cast<int>(pool.size()) < pool_size)
                    pool.emplace_back(1, 2);
                spec.initial.push_back(0);
            } else if (k == enabler) {
                pool = {Rational(0), Rational(1)};
                while (static_cast<int>(pool.size()) < pool_size)
                    pool.emplace_back(1);
                spec.initial.push_back(0);
            } else {
                pool.assign(static_cast<std::size_t>(pool_size), Rational(1, 2));
                spec.initial.push_back(static_cast<int>(
                    rng.next_below(static_cast<std::uint64_t>(pool_size))));
            }
            spec.pools.push_back(std::move(pool));
        }
        // Difficulty bands around the reachable means: band A opens with
        // the bottleneck's first stage, band E with the enabler switch,
        // band B only once both the enabler and the second stage are in.
        auto mean_at = [&](int b_choice, int e_choice) {
            std::vector<int> probe = spec.initial;
            probe[static_cast<std::size_t>(bottleneck - 1)] = b_choice;
            probe[static_cast<std::size_t>(enabler - 1)] = e_choice;
            return mean_quality(spec, probe);
        };
        Rational m0 = mean_at(0, 0);
        Rational stage1 = mean_at(1, 0);
        Rational stage2_locked = mean_at(2, 0);
        Rational enabled = mean_at(1, 1);
        Rational final_mean = mean_at(2, 1);
        int band_a = std::max(1, (examples - 1) / 3);
        int band_b = examples - band_a - 1;
        auto fill = [&spec](Rational lo, Rational hi, int count) {
            for (int i = 1; i <= count; ++i)
                spec.difficulties.push_back(lo + (hi - lo) * Rational(i, count));
        };
        fill(m0, stage1, band_a);
        fill(stage2_locked, enabled, 1);
        fill(enabled, final_mean, band_b);
        return spec;
    }

    throw Error(ErrorKind::SpecError, "unknown family '" + family + "'");
}

} // namespace apsf
