#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apsf/gateway.hpp"
#include "apsf/rational.hpp"

namespace apsf {

struct Example {
    std::string id;
    std::string query;
    std::string gold;
};

struct Verdict {
    std::string example_id;
    std::string raw_output;
    std::optional<std::string> extracted;
    bool correct = false;
};

// Exact accuracy: value == correct_count / total as a rational, so
// threshold comparisons never hinge on floating-point rounding.
struct EmpiricalScore {
    Rational value;
    std::int64_t correct_count = 0;
    std::int64_t total = 0;
    std::vector<Verdict> verdicts;
};

struct FailureCase {
    std::string example_id;
    std::string query;
    std::string gold;
    std::string predicted;
    std::string reasoning;
};

enum class JudgeMode { NumericExact, ChoiceLetter, LlmExtract };

const char* to_string(JudgeMode mode);
JudgeMode judge_mode_from_string(const std::string& name);

// Strips commas, currency prefixes, surrounding junk, and trailing
// fractional zeros, so "1,234.00" and "$1234" both land on "1234".
std::string normalize_numeric(const std::string& token);

// Last "answer is <n>" match wins, then the last "#### <n>", then the
// last standalone number anywhere.
std::optional<std::string> extract_numeric_answer(const std::string& raw);

// Last standalone A-E token, uppercased.
std::optional<std::string> extract_choice_letter(const std::string& raw);

// Lowercase, trim, drop a trailing period, collapse whitespace runs.
std::string normalize_freeform(const std::string& text);

// Pure regex judging for the two offline modes; LlmExtract requires a
// backend and lives in ScoringOptions.
Verdict judge(const std::string& raw, const std::string& gold, JudgeMode mode,
              const std::string& example_id = "");

struct ScoringOptions {
    JudgeMode mode = JudgeMode::NumericExact;
    // Assembled prompt first, blank line, then the raw query.
    std::string composition = "{prompt}\n\n{question}";
    DecodingParams params = default_params(Tag::Worker);
    bool parallel = true;
    Backend* extractor = nullptr; // LlmExtract only
    TokenLedger* ledger = nullptr;
    int step = 0;
};

// Scores every example and returns verdicts in dataset order. Requests
// fan out across OpenMP threads when the backends allow it; ledger
// recording happens afterwards in dataset order, so accounting is
// deterministic regardless of thread interleaving.
EmpiricalScore empirical_score(const std::string& prompt_text,
                               const std::vector<Example>& dataset, Backend& worker,
                               const ScoringOptions& options = {});

// Plain in-order loop; the reference the parallel path must match.
EmpiricalScore empirical_score_serial(const std::string& prompt_text,
                                      const std::vector<Example>& dataset, Backend& worker,
                                      const ScoringOptions& options = {});

std::vector<FailureCase> collect_failures(const EmpiricalScore& score,
                                          const std::vector<Example>& dataset);

// JSONL, one object per line: {"id"?, "question", "answer"}; missing
// ids become the 1-based line number.
std::vector<Example> load_dataset_jsonl(const std::string& path);
std::vector<Example> parse_dataset_jsonl(const std::vector<std::string>& lines,
                                         const std::string& name = "inline");

} // namespace apsf
