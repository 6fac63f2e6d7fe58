#include "apsf/optimizer.hpp"

#include <algorithm>

#include "apsf/error.hpp"

namespace apsf {

namespace {

nlohmann::json rational_json(const Rational& r) {
    return {{"exact", r.to_string()}, {"decimal", r.to_double()}};
}

Rational rational_from(const nlohmann::json& j) {
    return Rational::parse(j.at("exact").get<std::string>());
}

nlohmann::json params_to_json(const DecodingParams& p) {
    return {{"temperature", p.temperature},
            {"top_p", p.top_p},
            {"max_tokens", p.max_tokens},
            {"stop", p.stop}};
}

DecodingParams params_from_json(const nlohmann::json& j, DecodingParams base) {
    base.temperature = j.value("temperature", base.temperature);
    base.top_p = j.value("top_p", base.top_p);
    base.max_tokens = j.value("max_tokens", base.max_tokens);
    if (j.contains("stop")) base.stop = j.at("stop").get<std::vector<std::string>>();
    return base;
}

// Warm-start steps have no diagnoses yet; the edit prompt still gets
// the observed failures as plain (question, gold, predicted) triples.
std::string raw_failure_summary(const EmpiricalScore& score, const std::vector<Example>& val,
                                int representatives) {
    std::vector<FailureCase> failures = collect_failures(score, val);
    if (failures.empty()) return "No errors observed.";
    std::string out = "Failures: " + std::to_string(failures.size()) + " of " +
                      std::to_string(score.total) + ".\nRepresentative failures:";
    int shown = 0;
    for (const FailureCase& f : failures) {
        if (shown++ >= representatives) break;
        out += "\n- question: " + f.query + " | gold: " + f.gold +
               " | predicted: " + f.predicted;
    }
    return out;
}

} // namespace

void RunConfig::validate() const {
    if (n < 1) throw Error(ErrorKind::ConfigError, "n must be at least 1");
    if (t_max < 1) throw Error(ErrorKind::ConfigError, "t_max must be at least 1");
    if (patience < 1) throw Error(ErrorKind::ConfigError, "patience must be at least 1");
    if (delta < Rational(0)) throw Error(ErrorKind::ConfigError, "delta must be non-negative");
    if (mode != "from-scratch" && mode != "initial-prompt")
        throw Error(ErrorKind::UnknownMode, "mode \"" + mode + "\"");
    if (diagnose_cap < 0) throw Error(ErrorKind::ConfigError, "diagnose_cap must be >= 0");
    if (representatives < 1)
        throw Error(ErrorKind::ConfigError, "representatives must be at least 1");
}

nlohmann::json RunConfig::to_json() const {
    return {{"n", n},
            {"t_max", t_max},
            {"delta", delta.to_string()},
            {"patience", patience},
            {"mode", mode},
            {"unfrozen", unfrozen},
            {"scheduler", to_string(scheduler)},
            {"seed", seed},
            {"count_discovery_step", count_discovery_step},
            {"diagnose_cap", diagnose_cap},
            {"representatives", representatives},
            {"dataset_name", dataset_name},
            {"task_type", task_type},
            {"judge", to_string(judge)},
            {"composition", composition},
            {"templates_dir", templates_dir},
            {"initial_prompt", initial_prompt},
            {"worker_params", params_to_json(worker_params)},
            {"architect_params", params_to_json(architect_params)},
            {"parallel", parallel}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    c.n = j.value("n", c.n);
    c.t_max = j.value("t_max", c.t_max);
    if (j.contains("delta")) c.delta = Rational::parse(j.at("delta").get<std::string>());
    c.patience = j.value("patience", c.patience);
    c.mode = j.value("mode", c.mode);
    c.unfrozen = j.value("unfrozen", c.unfrozen);
    if (j.contains("scheduler"))
        c.scheduler = scheduler_from_string(j.at("scheduler").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.count_discovery_step = j.value("count_discovery_step", c.count_discovery_step);
    c.diagnose_cap = j.value("diagnose_cap", c.diagnose_cap);
    c.representatives = j.value("representatives", c.representatives);
    c.dataset_name = j.value("dataset_name", c.dataset_name);
    c.task_type = j.value("task_type", c.task_type);
    if (j.contains("judge")) c.judge = judge_mode_from_string(j.at("judge").get<std::string>());
    c.composition = j.value("composition", c.composition);
    c.templates_dir = j.value("templates_dir", c.templates_dir);
    c.initial_prompt = j.value("initial_prompt", c.initial_prompt);
    if (j.contains("worker_params"))
        c.worker_params = params_from_json(j.at("worker_params"), c.worker_params);
    if (j.contains("architect_params"))
        c.architect_params = params_from_json(j.at("architect_params"), c.architect_params);
    c.parallel = j.value("parallel", c.parallel);
    c.validate();
    return c;
}

nlohmann::json StepRecord::to_json() const {
    nlohmann::json cands = nlohmann::json::array();
    for (const CandidateRecord& c : candidates)
        cands.push_back({{"texts", c.texts}, {"gain", rational_json(c.gain)}});
    return {{"t", t},
            {"factor", factor},
            {"warm_start", warm_start},
            {"candidates", cands},
            {"accepted", accepted},
            {"accepted_index", accepted_index},
            {"score_after", rational_json(score_after)},
            {"correct_after", correct_after},
            {"best_after", rational_json(best_after)},
            {"step_tokens", step_tokens},
            {"note", note}};
}

StepRecord StepRecord::from_json(const nlohmann::json& j) {
    StepRecord r;
    r.t = j.at("t").get<int>();
    r.factor = j.at("factor").get<std::size_t>();
    r.warm_start = j.at("warm_start").get<bool>();
    for (const nlohmann::json& c : j.at("candidates"))
        r.candidates.push_back(
            {c.at("texts").get<std::vector<std::string>>(), rational_from(c.at("gain"))});
    r.accepted = j.at("accepted").get<bool>();
    r.accepted_index = j.at("accepted_index").get<int>();
    r.score_after = rational_from(j.at("score_after"));
    r.correct_after = j.at("correct_after").get<std::int64_t>();
    r.best_after = rational_from(j.at("best_after"));
    r.step_tokens = j.at("step_tokens").get<std::int64_t>();
    r.note = j.at("note").get<std::string>();
    return r;
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json steps = nlohmann::json::array();
    for (const StepRecord& r : trajectory) steps.push_back(r.to_json());
    return {{"config", config},
            {"template_text", template_text},
            {"best_prompt", best_prompt},
            {"best_prompt_text", best_prompt_text},
            {"initial_score", rational_json(initial_score)},
            {"best_score", rational_json(best_score)},
            {"final_score", rational_json(final_score)},
            {"val_size", val_size},
            {"steps_to_best", steps_to_best},
            {"tokens_at_best_step", tokens_at_best_step},
            {"total_tokens", total_tokens},
            {"trajectory", steps},
            {"selection_stats", selection_stats},
            {"ledger", ledger},
            {"warnings", warnings},
            {"stop_reason", stop_reason}};
}

nlohmann::json failure_to_json(const FailureCase& f) {
    return {{"example_id", f.example_id},
            {"query", f.query},
            {"gold", f.gold},
            {"predicted", f.predicted},
            {"reasoning", f.reasoning}};
}

FailureCase failure_from_json(const nlohmann::json& j) {
    return {j.at("example_id").get<std::string>(), j.at("query").get<std::string>(),
            j.at("gold").get<std::string>(), j.at("predicted").get<std::string>(),
            j.at("reasoning").get<std::string>()};
}

nlohmann::json diagnosis_to_json(const Diagnosis& d) {
    return {{"essence", d.essence},
            {"type_label", d.type_label},
            {"mechanism", d.mechanism},
            {"impact", d.impact},
            {"suggestion", d.suggestion}};
}

Diagnosis diagnosis_from_json(const nlohmann::json& j) {
    return {j.at("essence").get<std::string>(), j.at("type_label").get<std::string>(),
            j.at("mechanism").get<std::string>(), j.at("impact").get<std::string>(),
            j.at("suggestion").get<std::string>()};
}

nlohmann::json profile_to_json(const ErrorProfile& p) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& [failure, diagnosis] : p.representatives)
        reps.push_back({{"failure", failure_to_json(failure)},
                        {"diagnosis", diagnosis_to_json(diagnosis)}});
    return {{"label_counts", p.label_counts}, {"representatives", reps}, {"total", p.total}};
}

ErrorProfile profile_from_json(const nlohmann::json& j) {
    ErrorProfile p;
    p.label_counts = j.at("label_counts").get<std::map<std::string, int>>();
    for (const nlohmann::json& r : j.at("representatives"))
        p.representatives.push_back(
            {failure_from_json(r.at("failure")), diagnosis_from_json(r.at("diagnosis"))});
    p.total = j.at("total").get<int>();
    return p;
}

nlohmann::json score_to_json(const EmpiricalScore& s) {
    nlohmann::json verdicts = nlohmann::json::array();
    for (const Verdict& v : s.verdicts) {
        nlohmann::json entry = {{"example_id", v.example_id},
                                {"raw_output", v.raw_output},
                                {"correct", v.correct}};
        if (v.extracted) entry["extracted"] = *v.extracted;
        verdicts.push_back(entry);
    }
    return {{"value", s.value.to_string()},
            {"correct_count", s.correct_count},
            {"total", s.total},
            {"verdicts", verdicts}};
}

EmpiricalScore score_from_json(const nlohmann::json& j) {
    EmpiricalScore s;
    s.value = Rational::parse(j.at("value").get<std::string>());
    s.correct_count = j.at("correct_count").get<std::int64_t>();
    s.total = j.at("total").get<std::int64_t>();
    for (const nlohmann::json& v : j.at("verdicts")) {
        Verdict verdict;
        verdict.example_id = v.at("example_id").get<std::string>();
        verdict.raw_output = v.at("raw_output").get<std::string>();
        verdict.correct = v.at("correct").get<bool>();
        if (v.contains("extracted")) verdict.extracted = v.at("extracted").get<std::string>();
        s.verdicts.push_back(verdict);
    }
    return s;
}

std::vector<EvaluatedCandidate> evaluate_candidates(
    const FactorizedPrompt& prompt, std::size_t k, const std::vector<std::string>& candidates,
    const std::vector<Example>& val_set, Backend& worker, const EmpiricalScore& baseline,
    const RunConfig& config, TokenLedger* ledger, int step) {
    ScoringOptions scoring;
    scoring.mode = config.judge;
    scoring.composition = config.composition;
    scoring.params = config.worker_params;
    scoring.parallel = config.parallel;
    scoring.ledger = ledger;
    scoring.step = step;
    std::vector<EvaluatedCandidate> out;
    for (const std::string& candidate : candidates) {
        FactorContents next = substitute(prompt.contents, k, candidate);
        EmpiricalScore score = empirical_score(assemble(next), val_set, worker, scoring);
        Rational gain = score.value - baseline.value;
        out.push_back({{candidate}, std::move(score), gain});
    }
    return out;
}

std::vector<EvaluatedCandidate> evaluate_whole_candidates(
    const FactorizedPrompt& prompt, const std::vector<std::vector<std::string>>& candidates,
    const std::vector<Example>& val_set, Backend& worker, const EmpiricalScore& baseline,
    const RunConfig& config, TokenLedger* ledger, int step) {
    ScoringOptions scoring;
    scoring.mode = config.judge;
    scoring.composition = config.composition;
    scoring.params = config.worker_params;
    scoring.parallel = config.parallel;
    scoring.ledger = ledger;
    scoring.step = step;
    std::vector<EvaluatedCandidate> out;
    for (const std::vector<std::string>& texts : candidates) {
        if (texts.size() != prompt.schema.size())
            throw Error(ErrorKind::InvalidFactor,
                        "whole-prompt candidate has " + std::to_string(texts.size()) +
                            " segments for " + std::to_string(prompt.schema.size()) +
                            " factors");
        FactorContents next{texts};
        EmpiricalScore score = empirical_score(assemble(next), val_set, worker, scoring);
        Rational gain = score.value - baseline.value;
        out.push_back({texts, std::move(score), gain});
    }
    return out;
}

Optimizer::Optimizer(RunConfig config, TaskContext ctx, Backend& architect, Backend& worker,
                     std::vector<Example> val_set)
    : config_(std::move(config)), ctx_(std::move(ctx)), architect_(&architect),
      worker_(&worker), val_(std::move(val_set)), ledger_(std::make_unique<TokenLedger>()) {
    config_.validate();
    if (val_.empty()) throw Error(ErrorKind::ConfigError, "validation set is empty");
    if (config_.delta == Rational(0))
        config_.delta = Rational(1, static_cast<std::int64_t>(val_.size()));
}

int Optimizer::optimization_budget() const {
    return config_.count_discovery_step ? config_.t_max - 1 : config_.t_max;
}

ArchitectOptions Optimizer::architect_opts(int step) {
    ArchitectOptions opts;
    opts.templates_dir = config_.templates_dir;
    opts.params = config_.architect_params;
    opts.ledger = ledger_.get();
    opts.step = step;
    opts.log = [this](const std::string& note) { warnings_.push_back(note); };
    return opts;
}

void Optimizer::discover() {
    if (prompt_) throw Error(ErrorKind::ConfigError, "structure already discovered");
    ArchitectOptions opts = architect_opts(0);
    StructureProposal proposal =
        config_.mode == "from-scratch"
            ? discover_structure(ctx_, *architect_, opts)
            : analyze_initial_prompt(config_.initial_prompt, ctx_, *architect_, opts);
    for (const std::string& w : proposal.warnings) warnings_.push_back(w);
    template_text_ = proposal.template_text;
    complexity_note_ = proposal.complexity_note;
    prompt_.emplace(std::move(proposal.prompt));

    ScoringOptions scoring;
    scoring.mode = config_.judge;
    scoring.composition = config_.composition;
    scoring.params = config_.worker_params;
    scoring.parallel = config_.parallel;
    scoring.ledger = ledger_.get();
    scoring.step = 0;
    current_ = empirical_score(assemble(*prompt_), val_, *worker_, scoring);
    initial_score_ = current_.value;
    best_score_ = current_.value;
    best_contents_ = prompt_->contents;
    best_step_ = 0;

    history_ = SelectionHistory(prompt_->schema.size());
    sched_ = SchedulerState::make(config_.scheduler, prompt_->schema.size(), config_.seed);

    if (current_.value == Rational(1)) stop_reason_ = "perfect validation score";
    else if (optimization_budget() <= 0) stop_reason_ = "step budget exhausted";
}

bool Optimizer::done() const { return prompt_.has_value() && !stop_reason_.empty(); }

const FactorizedPrompt& Optimizer::prompt() const {
    if (!prompt_) throw Error(ErrorKind::ConfigError, "structure not discovered yet");
    return *prompt_;
}

const ErrorProfile& Optimizer::profile() {
    if (profile_valid_) return profile_;
    std::vector<FailureCase> failures = collect_failures(current_, val_);
    std::vector<std::pair<FailureCase, Diagnosis>> diagnosed;
    ArchitectOptions opts = architect_opts(t_ + 1);
    int cap = std::min<int>(static_cast<int>(failures.size()), config_.diagnose_cap);
    for (int i = 0; i < cap; ++i)
        diagnosed.push_back({failures[i], diagnose_failure(failures[i], *architect_, opts)});
    profile_ = build_error_profile(diagnosed, config_.representatives);
    profile_valid_ = true;
    return profile_;
}

std::size_t Optimizer::choose_factor(StepRecord& record) {
    const std::size_t k_count = prompt_->schema.size();
    if (t_ < static_cast<int>(k_count)) {
        record.warm_start = true;
        return static_cast<std::size_t>(t_) + 1;
    }
    record.warm_start = false;
    const ErrorProfile& prof = profile();
    return next_factor(sched_, prompt_->schema, &prof, history_, architect_,
                       architect_opts(record.t));
}

StepRecord Optimizer::step() {
    if (!prompt_) throw Error(ErrorKind::ConfigError, "structure not discovered yet");
    if (done()) throw Error(ErrorKind::ConfigError, "run already stopped: " + stop_reason_);

    StepRecord record;
    record.t = t_ + 1;

    const bool whole = config_.unfrozen;
    std::size_t k = 0;
    std::string summary;
    if (whole) {
        record.factor = 0;
        summary = error_summary_text(profile());
    } else {
        k = choose_factor(record);
        record.factor = k;
        history_.record_selection(k, record.t, record.warm_start);
        summary = record.warm_start
                      ? raw_failure_summary(current_, val_, config_.representatives)
                      : error_summary_text(profile());
    }

    bool accepted = false;
    Rational best_gain;
    int best_index = -1;
    std::vector<EvaluatedCandidate> evaluated;
    try {
        if (whole) {
            auto candidates =
                propose_whole_edits(*prompt_, summary, current_, config_.n,
                                    config_.dataset_name, config_.task_type, *architect_,
                                    architect_opts(record.t));
            evaluated = evaluate_whole_candidates(*prompt_, candidates, val_, *worker_,
                                                  current_, config_, ledger_.get(), record.t);
        } else {
            CandidateSet set =
                propose_edits(*prompt_, k, summary, current_, config_.n, config_.dataset_name,
                              config_.task_type, *architect_, architect_opts(record.t));
            evaluated = evaluate_candidates(*prompt_, k, set.candidates, val_, *worker_,
                                            current_, config_, ledger_.get(), record.t);
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::CandidateParseError) throw;
        record.note = e.what();
        warnings_.push_back(std::string("step ") + std::to_string(record.t) +
                            " skipped: " + e.what());
    }

    for (const EvaluatedCandidate& c : evaluated)
        record.candidates.push_back({c.texts, c.gain});
    for (int i = 0; i < static_cast<int>(evaluated.size()); ++i) {
        if (best_index == -1 || evaluated[i].gain > best_gain) {
            best_index = i;
            best_gain = evaluated[i].gain;
        }
    }
    if (best_index >= 0 && best_gain >= config_.delta) {
        accepted = true;
        record.accepted = true;
        record.accepted_index = best_index;
        const EvaluatedCandidate& winner = evaluated[best_index];
        FactorContents next = whole ? FactorContents(winner.texts)
                                    : substitute(prompt_->contents, k, winner.texts[0]);
        FactorSchema schema = prompt_->schema;
        prompt_.emplace(std::move(schema), std::move(next));
        current_ = winner.score;
        profile_valid_ = false;
    }

    if (!whole) {
        history_.record_outcome(k, accepted, accepted ? best_gain : Rational());
        update(sched_, k, accepted, accepted ? best_gain : Rational());
    }

    if (current_.value > best_score_) {
        best_score_ = current_.value;
        best_contents_ = prompt_->contents;
        best_step_ = record.t;
        u_ = 0;
    } else {
        u_ += 1;
    }

    record.score_after = current_.value;
    record.correct_after = current_.correct_count;
    record.best_after = best_score_;
    record.step_tokens = ledger_->step_total(record.t);

    t_ += 1;
    if (current_.value == Rational(1)) stop_reason_ = "perfect validation score";
    else if (u_ >= config_.patience) stop_reason_ = "patience exhausted";
    else if (t_ >= optimization_budget()) stop_reason_ = "step budget exhausted";

    trajectory_.push_back(record);
    if (on_step) on_step(record);
    return record;
}

RunReport Optimizer::run() {
    if (!prompt_) discover();
    while (!done()) step();
    return report();
}

RunReport Optimizer::report() const {
    if (!prompt_) throw Error(ErrorKind::ConfigError, "structure not discovered yet");
    RunReport r;
    r.config = config_.to_json();
    r.template_text = template_text_;
    FactorizedPrompt best(prompt_->schema, *best_contents_);
    r.best_prompt = prompt_to_json(best);
    r.best_prompt_text = assemble(best);
    r.initial_score = initial_score_;
    r.best_score = best_score_;
    r.final_score = current_.value;
    r.val_size = static_cast<std::int64_t>(val_.size());
    r.steps_to_best = best_step_;
    r.tokens_at_best_step = ledger_->cumulative_through_step(best_step_);
    r.total_tokens = ledger_->grand_total();
    r.trajectory = trajectory_;
    nlohmann::json stats = nlohmann::json::array();
    for (std::size_t i = 1; i <= prompt_->schema.size(); ++i) {
        const FactorStats& s = history_.stats(i);
        stats.push_back({{"name", prompt_->schema.at(i).name},
                         {"role", prompt_->schema.at(i).role},
                         {"selections", s.selections},
                         {"warm_selections", s.warm_selections},
                         {"accept_successes", s.accept_successes},
                         {"accept_failures", s.accept_failures},
                         {"accepted_gain", rational_json(s.accepted_gain_sum)}});
    }
    r.selection_stats = stats;
    r.ledger = ledger_->to_json();
    r.warnings = warnings_;
    r.stop_reason = stop_reason_;
    return r;
}

nlohmann::json Optimizer::checkpoint() const {
    if (!prompt_) throw Error(ErrorKind::ConfigError, "nothing to checkpoint before discovery");
    nlohmann::json steps = nlohmann::json::array();
    for (const StepRecord& r : trajectory_) steps.push_back(r.to_json());
    nlohmann::json ctx = {{"task_description", ctx_.task_description},
                          {"task_type", ctx_.task_type},
                          {"output_format", ctx_.output_format},
                          {"constraints", ctx_.constraints}};
    nlohmann::json exemplars = nlohmann::json::array();
    for (const Example& e : ctx_.exemplars)
        exemplars.push_back({{"id", e.id}, {"query", e.query}, {"gold", e.gold}});
    ctx["exemplars"] = exemplars;
    return {{"kind", "apsf-checkpoint"},
            {"version", 1},
            {"config", config_.to_json()},
            {"context", ctx},
            {"template_text", template_text_},
            {"complexity_note", complexity_note_},
            {"prompt", prompt_to_json(*prompt_)},
            {"best_contents", contents_to_json(*best_contents_)},
            {"current", score_to_json(current_)},
            {"initial_score", initial_score_.to_string()},
            {"best_score", best_score_.to_string()},
            {"best_step", best_step_},
            {"u", u_},
            {"t", t_},
            {"history", history_.to_json()},
            {"scheduler", sched_.to_json()},
            {"profile_valid", profile_valid_},
            {"profile", profile_to_json(profile_)},
            {"trajectory", steps},
            {"warnings", warnings_},
            {"stop_reason", stop_reason_},
            {"ledger", ledger_->to_json()}};
}

Optimizer Optimizer::restore(const nlohmann::json& snapshot, Backend& architect,
                             Backend& worker, std::vector<Example> val_set) {
    if (!snapshot.is_object() || snapshot.value("kind", "") != "apsf-checkpoint")
        throw Error(ErrorKind::CorruptCheckpoint, "not an optimizer checkpoint");
    if (snapshot.value("version", -1) != 1)
        throw Error(ErrorKind::CorruptCheckpoint,
                    "unsupported version " + std::to_string(snapshot.value("version", -1)));
    try {
        RunConfig config = RunConfig::from_json(snapshot.at("config"));
        TaskContext ctx;
        const nlohmann::json& c = snapshot.at("context");
        ctx.task_description = c.at("task_description").get<std::string>();
        ctx.task_type = c.at("task_type").get<std::string>();
        ctx.output_format = c.at("output_format").get<std::string>();
        ctx.constraints = c.at("constraints").get<std::string>();
        for (const nlohmann::json& e : c.at("exemplars"))
            ctx.exemplars.push_back({e.at("id").get<std::string>(),
                                     e.at("query").get<std::string>(),
                                     e.at("gold").get<std::string>()});

        Optimizer opt(std::move(config), std::move(ctx), architect, worker,
                      std::move(val_set));
        opt.template_text_ = snapshot.at("template_text").get<std::string>();
        opt.complexity_note_ = snapshot.at("complexity_note").get<std::string>();
        opt.prompt_.emplace(prompt_from_json(snapshot.at("prompt")));
        opt.best_contents_ = contents_from_json(snapshot.at("best_contents"));
        opt.current_ = score_from_json(snapshot.at("current"));
        opt.initial_score_ = Rational::parse(snapshot.at("initial_score").get<std::string>());
        opt.best_score_ = Rational::parse(snapshot.at("best_score").get<std::string>());
        opt.best_step_ = snapshot.at("best_step").get<int>();
        opt.u_ = snapshot.at("u").get<int>();
        opt.t_ = snapshot.at("t").get<int>();
        opt.history_ = SelectionHistory::from_json(snapshot.at("history"));
        opt.sched_ = SchedulerState::from_json(snapshot.at("scheduler"));
        opt.profile_valid_ = snapshot.at("profile_valid").get<bool>();
        opt.profile_ = profile_from_json(snapshot.at("profile"));
        for (const nlohmann::json& s : snapshot.at("trajectory"))
            opt.trajectory_.push_back(StepRecord::from_json(s));
        opt.warnings_ = snapshot.at("warnings").get<std::vector<std::string>>();
        opt.stop_reason_ = snapshot.at("stop_reason").get<std::string>();
        opt.ledger_ = std::make_unique<TokenLedger>(snapshot.at("ledger"));
        return opt;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::CorruptCheckpoint, e.what());
    }
}

RunReport run_unfrozen(RunConfig config, const TaskContext& ctx, Backend& architect,
                       Backend& worker, std::vector<Example> val_set) {
    if (!config.unfrozen)
        throw Error(ErrorKind::ConfigError, "run_unfrozen requires unfrozen mode");
    Optimizer opt(std::move(config), ctx, architect, worker, std::move(val_set));
    return opt.run();
}

} // namespace apsf
