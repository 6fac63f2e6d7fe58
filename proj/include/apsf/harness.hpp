#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "apsf/gateway.hpp"
#include "apsf/optimizer.hpp"
#include "apsf/scoring.hpp"
#include "apsf/synthbench.hpp"

namespace apsf {

struct SplitPlan {
    std::uint64_t seed = 42;
    std::size_t validation_size = 50;
    std::string test_file; // optional official test set instead of the remainder

    nlohmann::json to_json() const;
    static SplitPlan from_json(const nlohmann::json& j);
};

struct SplitResult {
    SplitPlan plan;
    std::vector<Example> validation;
    std::vector<Example> test;
    std::vector<std::size_t> validation_indices; // positions in the input file order
    std::vector<std::size_t> test_indices;       // empty when an official test set is used
    bool official_test = false;

    nlohmann::json indices_json() const;
};

// Seeded Fisher-Yates shuffle of the dataset order, validation = first
// slice, test = shuffled remainder or the supplied official set.
SplitResult split(const std::vector<Example>& dataset, const SplitPlan& plan,
                  const std::vector<Example>* official_test = nullptr);

// JSONL, one example per line. Accepts {"id","query","gold"} directly or
// question/answer records, where a "#### <value>" suffix marks the gold.
std::vector<Example> parse_dataset_lines(const std::vector<std::string>& lines,
                                         const std::string& name);
std::vector<Example> load_dataset(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

struct RunManifest {
    std::string dataset;
    std::string test_dataset;
    std::string output_dir = "apsf-out";
    std::string resume;
    // Backend descriptors: "synth:<spec.json>", "fixture:<replay.jsonl>",
    // or "remote:<base_url>[#model]". Remote credentials come from
    // APSF_WORKER_API_KEY / APSF_ARCHITECT_API_KEY / APSF_API_KEY.
    std::string worker;
    std::string architect;
    std::string record;       // optional fixture prefix for recording live traffic
    std::string context_file; // optional serialized task context, wins over the fields below
    std::string task_description;
    std::string output_format;
    std::string constraints;
    int exemplars = 3;
    SplitPlan plan;
    RunConfig config;

    void validate() const;
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

struct BackendSet {
    std::unique_ptr<Environment> synth;
    std::vector<std::unique_ptr<Backend>> owned;
    Backend* worker = nullptr;
    Backend* architect = nullptr;
};

// Builds the worker/architect pair for a manifest. A shared "synth:"
// spec yields one environment serving both roles; recording wraps the
// outermost layer so fixtures capture exactly what the optimizer saw.
BackendSet make_backends(const std::string& worker_desc, const std::string& architect_desc,
                         const std::string& record_prefix);

nlohmann::json context_json(const TaskContext& ctx);
TaskContext context_from_json(const nlohmann::json& j);

TaskContext resolve_context(const RunManifest& manifest,
                            const std::vector<Example>& exemplar_source);

nlohmann::json cmd_optimize(const RunManifest& manifest);

struct EvaluateOptions {
    std::string prompt_file;
    std::string dataset;
    std::string worker;
    JudgeMode judge = JudgeMode::NumericExact;
    bool parallel = true;
    std::string paired_validation; // rational "44/50" or decimal "0.88"; "" = none
    std::string output;            // optional report path
};

nlohmann::json cmd_evaluate(const EvaluateOptions& options);

struct TransferOptions {
    std::string prompt_file;
    std::vector<std::string> targets;
    std::string worker;
    JudgeMode judge = JudgeMode::NumericExact;
    bool parallel = true;
    std::string output;
};

nlohmann::json cmd_transfer(const TransferOptions& options);

struct AblateOptions {
    RunManifest manifest;
    std::string kind;              // "candidates-N" | "scheduler" | "frozen"
    std::vector<std::string> grid; // empty uses the documented default grid
};

nlohmann::json cmd_ablate(const AblateOptions& options);

struct SynthRunOptions {
    std::string spec_file;
    std::string output_dir = "apsf-synth";
    SchedulerKind scheduler = SchedulerKind::ErrorGuided;
    double truthfulness = 1.0;
    int patience = 3;
    std::uint64_t run_seed = 42;
};

nlohmann::json cmd_synth_run(const SynthRunOptions& options);

// Parses "44/50", "0.88", or "1" into an exact value.
Rational parse_score(const std::string& text);

std::string trajectory_csv(const RunReport& report);
std::string ablation_csv(const nlohmann::json& table);
std::string render_report_summary(const nlohmann::json& report);

} // namespace apsf
