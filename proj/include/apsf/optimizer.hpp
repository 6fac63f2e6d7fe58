#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "apsf/architect.hpp"
#include "apsf/scheduler.hpp"
#include "apsf/scoring.hpp"

namespace apsf {

struct RunConfig {
    int n = 4;        // candidates per update
    int t_max = 10;   // total step budget, discovery included by default
    Rational delta;   // acceptance threshold; 0 = auto (1/|val|)
    int patience = 3; // consecutive non-improving steps before early stop
    std::string mode = "initial-prompt"; // or "from-scratch"
    bool unfrozen = false;
    SchedulerKind scheduler = SchedulerKind::ErrorGuided;
    std::uint64_t seed = 42;
    bool count_discovery_step = true;
    int diagnose_cap = 15;   // failures diagnosed per profile build
    int representatives = 3; // failure cases surfaced to meta-prompts
    std::string dataset_name = "dataset";
    std::string task_type = "general";
    JudgeMode judge = JudgeMode::NumericExact;
    std::string composition = "{prompt}\n\n{question}";
    std::string templates_dir;
    std::string initial_prompt = "Let's think step by step";
    DecodingParams worker_params = default_params(Tag::Worker);
    DecodingParams architect_params = default_params(Tag::Architect);
    bool parallel = true;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
};

struct CandidateRecord {
    std::vector<std::string> texts; // one entry in frozen mode, K in unfrozen
    Rational gain;                  // candidate score minus step baseline
};

struct EvaluatedCandidate {
    std::vector<std::string> texts;
    EmpiricalScore score;
    Rational gain;
};

struct StepRecord {
    int t = 0;
    std::size_t factor = 0; // 0 on unfrozen (whole-prompt) steps
    bool warm_start = false;
    std::vector<CandidateRecord> candidates;
    bool accepted = false;
    int accepted_index = -1;
    Rational score_after;
    std::int64_t correct_after = 0;
    Rational best_after;
    std::int64_t step_tokens = 0;
    std::string note;

    nlohmann::json to_json() const;
    static StepRecord from_json(const nlohmann::json& j);
};

struct RunReport {
    nlohmann::json config;
    std::string template_text;
    nlohmann::json best_prompt; // schema + contents
    std::string best_prompt_text;
    Rational initial_score;
    Rational best_score;
    Rational final_score;
    std::int64_t val_size = 0;
    int steps_to_best = 0;
    std::int64_t tokens_at_best_step = 0;
    std::int64_t total_tokens = 0;
    std::vector<StepRecord> trajectory;
    nlohmann::json selection_stats;
    nlohmann::json ledger;
    std::vector<std::string> warnings;
    std::string stop_reason;

    nlohmann::json to_json() const;
};

// Scores each candidate on the full validation slice with factor k
// substituted (frozen) and returns exact gains against the shared step
// baseline, in input order.
std::vector<EvaluatedCandidate> evaluate_candidates(
    const FactorizedPrompt& prompt, std::size_t k, const std::vector<std::string>& candidates,
    const std::vector<Example>& val_set, Backend& worker, const EmpiricalScore& baseline,
    const RunConfig& config, TokenLedger* ledger, int step);

// Unfrozen variant: every candidate replaces all K factor texts.
std::vector<EvaluatedCandidate> evaluate_whole_candidates(
    const FactorizedPrompt& prompt, const std::vector<std::vector<std::string>>& candidates,
    const std::vector<Example>& val_set, Backend& worker, const EmpiricalScore& baseline,
    const RunConfig& config, TokenLedger* ledger, int step);

// One optimization run: Phase 1 structure discovery, then single-factor
// (or whole-prompt) update steps with threshold acceptance, best/patience
// tracking, and per-step checkpointing hooks.
class Optimizer {
public:
    Optimizer(RunConfig config, TaskContext ctx, Backend& architect, Backend& worker,
              std::vector<Example> val_set);

    // Phase 1. Consumes one step of t_max when count_discovery_step.
    void discover();

    bool discovered() const { return prompt_.has_value(); }
    bool done() const;
    const std::string& stop_reason() const { return stop_reason_; }

    // One Algorithm-1 loop iteration; requires discover() first.
    StepRecord step();

    // discover() + step() until done; idempotent over resumed state.
    RunReport run();
    RunReport report() const;

    nlohmann::json checkpoint() const;
    static Optimizer restore(const nlohmann::json& snapshot, Backend& architect,
                             Backend& worker, std::vector<Example> val_set);

    const FactorizedPrompt& prompt() const;
    const EmpiricalScore& current() const { return current_; }
    const Rational& best_score() const { return best_score_; }
    int steps_taken() const { return t_; }
    TokenLedger& ledger() { return *ledger_; }

    std::function<void(const StepRecord&)> on_step; // observer, not serialized

private:
    int optimization_budget() const;
    ArchitectOptions architect_opts(int step);
    const ErrorProfile& profile();
    std::size_t choose_factor(StepRecord& record);

    RunConfig config_;
    TaskContext ctx_;
    Backend* architect_;
    Backend* worker_;
    std::vector<Example> val_;
    std::unique_ptr<TokenLedger> ledger_;

    std::optional<FactorizedPrompt> prompt_;
    std::optional<FactorContents> best_contents_;
    std::string template_text_;
    std::string complexity_note_;
    EmpiricalScore current_;
    Rational initial_score_;
    Rational best_score_;
    int best_step_ = 0;
    int u_ = 0;
    int t_ = 0; // completed optimization steps
    SelectionHistory history_;
    SchedulerState sched_;
    bool profile_valid_ = false;
    ErrorProfile profile_;
    std::vector<StepRecord> trajectory_;
    std::vector<std::string> warnings_;
    std::string stop_reason_;
};

// Whole-prompt edits; requires config.unfrozen.
RunReport run_unfrozen(RunConfig config, const TaskContext& ctx, Backend& architect,
                       Backend& worker, std::vector<Example> val_set);

nlohmann::json failure_to_json(const FailureCase& f);
FailureCase failure_from_json(const nlohmann::json& j);
nlohmann::json diagnosis_to_json(const Diagnosis& d);
Diagnosis diagnosis_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const ErrorProfile& p);
ErrorProfile profile_from_json(const nlohmann::json& j);
nlohmann::json score_to_json(const EmpiricalScore& s);
EmpiricalScore score_from_json(const nlohmann::json& j);

} // namespace apsf
