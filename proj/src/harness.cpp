#include "apsf/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "apsf/error.hpp"
#include "apsf/rng.hpp"

namespace apsf {

namespace fs = std::filesystem;

namespace {

nlohmann::json rational_json(const Rational& r) {
    return {{"exact", r.to_string()}, {"decimal", r.to_double()}};
}

bool starts_with(const std::string& text, const std::string& prefix) {
    return text.rfind(prefix, 0) == 0;
}

std::string descriptor_path(const std::string& desc) {
    return desc.substr(desc.find(':') + 1);
}

} // namespace

nlohmann::json SplitPlan::to_json() const {
    return {{"split_seed", seed}, {"validation_size", validation_size}, {"test_file", test_file}};
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
    SplitPlan p;
    p.seed = j.value("split_seed", p.seed);
    p.validation_size = j.value("validation_size", p.validation_size);
    p.test_file = j.value("test_file", p.test_file);
    return p;
}

nlohmann::json SplitResult::indices_json() const {
    return {{"plan", plan.to_json()},
            {"validation", validation_indices},
            {"test", test_indices},
            {"official_test", official_test}};
}

SplitResult split(const std::vector<Example>& dataset, const SplitPlan& plan,
                  const std::vector<Example>* official_test) {
    if (plan.validation_size == 0)
        throw Error(ErrorKind::TooSmall, "validation slice must be non-empty");
    if (dataset.size() < plan.validation_size)
        throw Error(ErrorKind::TooSmall,
                    "dataset has " + std::to_string(dataset.size()) + " examples; need at least " +
                        std::to_string(plan.validation_size) + " for the validation slice");

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(plan.seed);
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(i + 1)]);

    SplitResult result;
    result.plan = plan;
    for (std::size_t i = 0; i < plan.validation_size; ++i) {
        result.validation_indices.push_back(order[i]);
        result.validation.push_back(dataset[order[i]]);
    }
    if (official_test) {
        result.test = *official_test;
        result.official_test = true;
    } else {
        for (std::size_t i = plan.validation_size; i < order.size(); ++i) {
            result.test_indices.push_back(order[i]);
            result.test.push_back(dataset[order[i]]);
        }
    }
    return result;
}

std::vector<Example> parse_dataset_lines(const std::vector<std::string>& lines,
                                         const std::string& name) {
    std::vector<Example> out;
    std::size_t line_no = 0;
    for (const std::string& line : lines) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::DatasetError,
                        name + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object())
            throw Error(ErrorKind::DatasetError,
                        name + ":" + std::to_string(line_no) + ": expected a JSON object");

        Example e;
        if (j.contains("id"))
            e.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        else
            e.id = std::to_string(line_no);

        if (j.contains("query"))
            e.query = j.at("query").get<std::string>();
        else if (j.contains("question"))
            e.query = j.at("question").get<std::string>();
        else
            throw Error(ErrorKind::DatasetError,
                        name + ":" + std::to_string(line_no) + ": missing query/question field");

        if (j.contains("gold")) {
            e.gold = j.at("gold").is_string() ? j.at("gold").get<std::string>() : j.at("gold").dump();
        } else if (j.contains("answer")) {
            std::string answer = j.at("answer").get<std::string>();
            std::size_t marker = answer.rfind("####");
            e.gold = trim(marker == std::string::npos ? answer : answer.substr(marker + 4));
        } else {
            throw Error(ErrorKind::DatasetError,
                        name + ":" + std::to_string(line_no) + ": missing gold/answer field");
        }
        if (trim(e.gold).empty())
            throw Error(ErrorKind::DatasetError,
                        name + ":" + std::to_string(line_no) + ": empty gold answer");
        out.push_back(std::move(e));
    }
    if (out.empty()) throw Error(ErrorKind::DatasetError, name + ": no examples");
    return out;
}

std::vector<Example> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::DatasetError, "cannot open dataset " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return parse_dataset_lines(lines, path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorKind::ConfigError, "short write to " + path);
}

void RunManifest::validate() const {
    config.validate();
    if (worker.empty()) throw Error(ErrorKind::ConfigError, "worker backend descriptor required");
    if (architect.empty())
        throw Error(ErrorKind::ConfigError, "architect backend descriptor required");
    if (dataset.empty() && !starts_with(worker, "synth:"))
        throw Error(ErrorKind::ConfigError, "dataset path required");
    auto check_path = [](const std::string& label, const std::string& path) {
        if (!path.empty() && !fs::exists(path))
            throw Error(ErrorKind::ConfigError, label + " not found: " + path);
    };
    check_path("dataset", dataset);
    check_path("test dataset", test_dataset);
    check_path("resume checkpoint", resume);
    check_path("context file", context_file);
    for (const std::string& desc : {worker, architect})
        if (starts_with(desc, "synth:") || starts_with(desc, "fixture:"))
            check_path("backend file", descriptor_path(desc));
    if (exemplars < 0) throw Error(ErrorKind::ConfigError, "exemplars must be non-negative");
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j = config.to_json();
    j["dataset"] = dataset;
    j["test_dataset"] = test_dataset;
    j["output_dir"] = output_dir;
    j["resume"] = resume;
    j["worker"] = worker;
    j["architect"] = architect;
    j["record"] = record;
    j["context_file"] = context_file;
    j["task_description"] = task_description;
    j["output_format"] = output_format;
    j["constraints"] = constraints;
    j["exemplars"] = exemplars;
    j["split_seed"] = plan.seed;
    j["validation_size"] = plan.validation_size;
    return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.config = RunConfig::from_json(j);
    m.dataset = j.value("dataset", m.dataset);
    m.test_dataset = j.value("test_dataset", m.test_dataset);
    m.output_dir = j.value("output_dir", m.output_dir);
    m.resume = j.value("resume", m.resume);
    m.worker = j.value("worker", m.worker);
    m.architect = j.value("architect", m.architect);
    m.record = j.value("record", m.record);
    m.context_file = j.value("context_file", m.context_file);
    m.task_description = j.value("task_description", m.task_description);
    m.output_format = j.value("output_format", m.output_format);
    m.constraints = j.value("constraints", m.constraints);
    m.exemplars = j.value("exemplars", m.exemplars);
    m.plan = SplitPlan::from_json(j);
    m.plan.test_file = m.test_dataset;
    return m;
}

namespace {

RemoteConfig parse_remote(const std::string& desc, bool is_worker) {
    RemoteConfig rc;
    std::string rest = descriptor_path(desc);
    std::size_t hash = rest.rfind('#');
    if (hash == std::string::npos) {
        rc.base_url = rest;
    } else {
        rc.base_url = rest.substr(0, hash);
        rc.model = rest.substr(hash + 1);
    }
    if (rc.base_url.empty())
        throw Error(ErrorKind::ConfigError, "remote descriptor needs a base url: " + desc);
    const char* key = std::getenv(is_worker ? "APSF_WORKER_API_KEY" : "APSF_ARCHITECT_API_KEY");
    if (!key) key = std::getenv("APSF_API_KEY");
    if (key) rc.api_key = key;
    return rc;
}

} // namespace

BackendSet make_backends(const std::string& worker_desc, const std::string& architect_desc,
                         const std::string& record_prefix) {
    BackendSet set;
    std::string synth_path;

    auto build = [&](const std::string& desc, bool is_worker) -> Backend* {
        if (desc.empty()) return nullptr;
        if (starts_with(desc, "synth:")) {
            std::string path = descriptor_path(desc);
            if (!set.synth) {
                SyntheticTaskSpec spec =
                    SyntheticTaskSpec::from_json(nlohmann::json::parse(read_text_file(path)));
                set.synth = std::make_unique<Environment>(make_environment(spec));
                synth_path = path;
            } else if (path != synth_path) {
                throw Error(ErrorKind::ConfigError,
                            "worker and architect synthetic specs must match");
            }
            return is_worker ? static_cast<Backend*>(&set.synth->worker)
                             : static_cast<Backend*>(&set.synth->architect);
        }
        if (starts_with(desc, "fixture:")) {
            set.owned.push_back(std::make_unique<ScriptedBackend>(descriptor_path(desc)));
            return set.owned.back().get();
        }
        if (starts_with(desc, "remote:")) {
            set.owned.push_back(std::make_unique<RemoteBackend>(parse_remote(desc, is_worker)));
            Backend* remote = set.owned.back().get();
            set.owned.push_back(std::make_unique<CachedBackend>(*remote));
            return set.owned.back().get();
        }
        throw Error(ErrorKind::ConfigError, "unknown backend descriptor: " + desc);
    };

    Backend* worker = build(worker_desc, true);
    Backend* architect = architect_desc == worker_desc ? build(worker_desc, false)
                                                       : build(architect_desc, false);
    if (!record_prefix.empty()) {
        if (worker) {
            std::string path = record_prefix + ".worker.jsonl";
            write_text_file(path, "");
            set.owned.push_back(std::make_unique<RecordingBackend>(*worker, path));
            worker = set.owned.back().get();
        }
        if (architect) {
            std::string path = record_prefix + ".architect.jsonl";
            write_text_file(path, "");
            set.owned.push_back(std::make_unique<RecordingBackend>(*architect, path));
            architect = set.owned.back().get();
        }
    }
    set.worker = worker;
    set.architect = architect;
    return set;
}

nlohmann::json context_json(const TaskContext& ctx) {
    nlohmann::json exemplars = nlohmann::json::array();
    for (const Example& e : ctx.exemplars)
        exemplars.push_back({{"id", e.id}, {"query", e.query}, {"gold", e.gold}});
    return {{"task_description", ctx.task_description},
            {"task_type", ctx.task_type},
            {"output_format", ctx.output_format},
            {"constraints", ctx.constraints},
            {"exemplars", exemplars}};
}

TaskContext context_from_json(const nlohmann::json& j) {
    TaskContext ctx;
    ctx.task_description = j.at("task_description").get<std::string>();
    ctx.task_type = j.at("task_type").get<std::string>();
    ctx.output_format = j.at("output_format").get<std::string>();
    ctx.constraints = j.at("constraints").get<std::string>();
    for (const nlohmann::json& e : j.at("exemplars"))
        ctx.exemplars.push_back({e.at("id").get<std::string>(), e.at("query").get<std::string>(),
                                 e.at("gold").get<std::string>()});
    return ctx;
}

TaskContext resolve_context(const RunManifest& manifest,
                            const std::vector<Example>& exemplar_source) {
    if (!manifest.context_file.empty())
        return context_from_json(nlohmann::json::parse(read_text_file(manifest.context_file)));
    if (manifest.task_description.empty() && starts_with(manifest.worker, "synth:")) {
        SyntheticTaskSpec spec = SyntheticTaskSpec::from_json(
            nlohmann::json::parse(read_text_file(descriptor_path(manifest.worker))));
        return synthetic_context(spec);
    }
    if (manifest.task_description.empty())
        throw Error(ErrorKind::ConfigError, "task_description required for this backend");
    TaskContext ctx;
    ctx.task_description = manifest.task_description;
    ctx.task_type = manifest.config.task_type;
    ctx.output_format = manifest.output_format;
    ctx.constraints = manifest.constraints;
    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(manifest.exemplars),
                                              exemplar_source.size());
    ctx.exemplars.assign(exemplar_source.begin(),
                         exemplar_source.begin() + static_cast<std::ptrdiff_t>(count));
    return ctx;
}

namespace {

std::vector<Example> manifest_validation(const RunManifest& manifest, SplitResult* parts_out) {
    std::vector<Example> dataset;
    if (!manifest.dataset.empty())
        dataset = load_dataset(manifest.dataset);
    else if (starts_with(manifest.worker, "synth:"))
        dataset = make_dataset(SyntheticTaskSpec::from_json(
            nlohmann::json::parse(read_text_file(descriptor_path(manifest.worker)))));
    else
        throw Error(ErrorKind::ConfigError, "dataset path required");

    SplitPlan plan = manifest.plan;
    if (plan.validation_size >= dataset.size()) plan.validation_size = dataset.size();
    std::optional<std::vector<Example>> official;
    if (!manifest.test_dataset.empty()) official = load_dataset(manifest.test_dataset);
    SplitResult parts = split(dataset, plan, official ? &*official : nullptr);
    std::vector<Example> validation = parts.validation;
    if (parts_out) *parts_out = std::move(parts);
    return validation;
}

} // namespace

nlohmann::json cmd_optimize(const RunManifest& manifest) {
    manifest.validate();
    SplitResult parts;
    std::vector<Example> validation = manifest_validation(manifest, &parts);

    BackendSet backends = make_backends(manifest.worker, manifest.architect, manifest.record);
    TaskContext ctx = resolve_context(manifest, validation);

    fs::create_directories(manifest.output_dir);
    write_text_file(manifest.output_dir + "/context.json", context_json(ctx).dump(2) + "\n");
    auto run_one = [&](Optimizer& opt) {
        opt.on_step = [&](const StepRecord& record) {
            nlohmann::json cp = opt.checkpoint();
            write_text_file(manifest.output_dir + "/checkpoint-" + std::to_string(record.t) +
                                ".json",
                            cp.dump(2) + "\n");
        };
        return opt.run();
    };

    RunReport report;
    if (!manifest.resume.empty()) {
        nlohmann::json snapshot = nlohmann::json::parse(read_text_file(manifest.resume));
        Optimizer opt = Optimizer::restore(snapshot, *backends.architect, *backends.worker,
                                           validation);
        report = run_one(opt);
    } else {
        Optimizer opt(manifest.config, ctx, *backends.architect, *backends.worker, validation);
        report = run_one(opt);
    }

    nlohmann::json out = {{"report", report.to_json()},
                          {"split", parts.indices_json()},
                          {"manifest", manifest.to_json()}};
    write_text_file(manifest.output_dir + "/report.json", out.dump(2) + "\n");
    std::string best = report.best_prompt_text;
    if (best.empty() || best.back() != '\n') best += '\n';
    write_text_file(manifest.output_dir + "/best_prompt.txt", best);
    write_text_file(manifest.output_dir + "/trajectory.csv", trajectory_csv(report));
    return out;
}

namespace {

struct EvalTarget {
    std::string name;
    std::vector<Example> data;
    BackendSet backends;
};

EvalTarget resolve_target(const std::string& dataset_desc, const std::string& worker_desc) {
    EvalTarget target;
    target.name = dataset_desc;
    if (starts_with(dataset_desc, "synth:")) {
        SyntheticTaskSpec spec = SyntheticTaskSpec::from_json(
            nlohmann::json::parse(read_text_file(descriptor_path(dataset_desc))));
        target.data = make_dataset(spec);
        target.backends = make_backends(dataset_desc, "", "");
    } else {
        if (worker_desc.empty() || starts_with(worker_desc, "synth:"))
            throw Error(ErrorKind::ConfigError,
                        "plain dataset " + dataset_desc + " needs a fixture: or remote: worker");
        target.data = load_dataset(dataset_desc);
        target.backends = make_backends(worker_desc, "", "");
    }
    return target;
}

nlohmann::json score_target(const std::string& prompt, EvalTarget& target, JudgeMode judge,
                            bool parallel, bool with_verdicts) {
    TokenLedger ledger;
    ScoringOptions options;
    options.mode = judge;
    options.parallel = parallel;
    options.ledger = &ledger;
    EmpiricalScore score = empirical_score(prompt, target.data, *target.backends.worker, options);
    nlohmann::json out = {{"dataset", target.name},
                          {"examples", score.total},
                          {"correct", score.correct_count},
                          {"accuracy", rational_json(score.value)},
                          {"tokens", ledger.grand_total()}};
    if (with_verdicts) {
        nlohmann::json verdicts = nlohmann::json::array();
        for (std::size_t i = 0; i < score.verdicts.size(); ++i) {
            const Verdict& v = score.verdicts[i];
            verdicts.push_back({{"id", v.example_id},
                                {"gold", target.data[i].gold},
                                {"extracted", v.extracted ? nlohmann::json(*v.extracted)
                                                          : nlohmann::json()},
                                {"correct", v.correct}});
        }
        out["verdicts"] = verdicts;
    }
    return out;
}

} // namespace

nlohmann::json cmd_evaluate(const EvaluateOptions& options) {
    std::string prompt = read_text_file(options.prompt_file);
    while (!prompt.empty() && prompt.back() == '\n') prompt.pop_back();
    if (trim(prompt).empty())
        throw Error(ErrorKind::ConfigError, "prompt file is empty: " + options.prompt_file);

    EvalTarget target = resolve_target(options.dataset, options.worker);
    nlohmann::json out = score_target(prompt, target, options.judge, options.parallel, true);
    out["prompt_file"] = options.prompt_file;
    if (!options.paired_validation.empty()) {
        Rational validation = parse_score(options.paired_validation);
        Rational test = Rational::parse(out.at("accuracy").at("exact").get<std::string>());
        out["paired_validation"] = rational_json(validation);
        out["generalization_gap"] = rational_json(validation - test);
    }
    if (!options.output.empty()) write_text_file(options.output, out.dump(2) + "\n");
    return out;
}

nlohmann::json cmd_transfer(const TransferOptions& options) {
    if (options.targets.empty())
        throw Error(ErrorKind::ConfigError, "transfer needs at least one target dataset");
    std::string prompt = read_text_file(options.prompt_file);
    while (!prompt.empty() && prompt.back() == '\n') prompt.pop_back();
    if (trim(prompt).empty())
        throw Error(ErrorKind::ConfigError, "prompt file is empty: " + options.prompt_file);

    nlohmann::json row = nlohmann::json::array();
    for (const std::string& dataset : options.targets) {
        EvalTarget target = resolve_target(dataset, options.worker);
        row.push_back(score_target(prompt, target, options.judge, options.parallel, false));
    }
    nlohmann::json out = {{"prompt_file", options.prompt_file}, {"row", row}};
    if (!options.output.empty()) write_text_file(options.output, out.dump(2) + "\n");
    return out;
}

namespace {

std::vector<std::string> default_grid(const std::string& kind) {
    if (kind == "candidates-N") return {"2", "4", "6", "8"};
    if (kind == "scheduler")
        return {"error-guided", "round-robin", "thompson", "greedy", "random"};
    if (kind == "frozen") return {"true", "false"};
    throw Error(ErrorKind::ConfigError, "unknown ablation kind: " + kind);
}

RunConfig apply_ablation(RunConfig config, const std::string& kind, const std::string& value) {
    if (kind == "candidates-N") {
        int n = 0;
        try {
            std::size_t used = 0;
            n = std::stoi(value, &used);
            if (used != value.size()) n = 0;
        } catch (const std::exception&) {
            n = 0;
        }
        if (n < 1) throw Error(ErrorKind::ConfigError, "bad candidate count: " + value);
        config.n = n;
    } else if (kind == "scheduler") {
        config.scheduler = scheduler_from_string(value);
    } else if (kind == "frozen") {
        if (value != "true" && value != "false")
            throw Error(ErrorKind::ConfigError, "frozen grid takes true/false, got " + value);
        config.unfrozen = value == "false";
    } else {
        throw Error(ErrorKind::ConfigError, "unknown ablation kind: " + kind);
    }
    config.validate();
    return config;
}

} // namespace

nlohmann::json cmd_ablate(const AblateOptions& options) {
    options.manifest.validate();
    std::vector<std::string> grid =
        options.grid.empty() ? default_grid(options.kind) : options.grid;
    for (const std::string& value : grid) apply_ablation(options.manifest.config, options.kind, value);

    std::vector<Example> validation = manifest_validation(options.manifest, nullptr);
    fs::create_directories(options.manifest.output_dir);

    nlohmann::json table = {{"kind", options.kind}, {"grid", grid},
                            {"runs", nlohmann::json::array()}};
    for (const std::string& value : grid) {
        nlohmann::json entry = {{"value", value}};
        try {
            RunConfig config = apply_ablation(options.manifest.config, options.kind, value);
            BackendSet backends =
                make_backends(options.manifest.worker, options.manifest.architect, "");
            TaskContext ctx = resolve_context(options.manifest, validation);
            RunReport report;
            if (config.unfrozen) {
                report = run_unfrozen(config, ctx, *backends.architect, *backends.worker,
                                      validation);
            } else {
                Optimizer opt(config, ctx, *backends.architect, *backends.worker, validation);
                report = opt.run();
            }
            entry["initial_score"] = rational_json(report.initial_score);
            entry["best_score"] = rational_json(report.best_score);
            entry["final_score"] = rational_json(report.final_score);
            entry["steps"] = report.trajectory.size();
            entry["steps_to_best"] = report.steps_to_best;
            entry["tokens_at_best_step"] = report.tokens_at_best_step;
            entry["total_tokens"] = report.total_tokens;
            entry["stop_reason"] = report.stop_reason;
        } catch (const std::exception& e) {
            entry["error"] = e.what();
        }
        table["runs"].push_back(entry);
        write_text_file(options.manifest.output_dir + "/ablation.json", table.dump(2) + "\n");
        write_text_file(options.manifest.output_dir + "/ablation.csv", ablation_csv(table));
    }
    return table;
}

nlohmann::json cmd_synth_run(const SynthRunOptions& options) {
    SyntheticTaskSpec spec =
        SyntheticTaskSpec::from_json(nlohmann::json::parse(read_text_file(options.spec_file)));
    EnvironmentOptions env_options;
    env_options.truthfulness = options.truthfulness;
    Environment env = make_environment(spec, env_options);
    OracleResult oracle = brute_force_optimum(spec);

    RunConfig config;
    config.mode = "from-scratch";
    config.scheduler = options.scheduler;
    config.patience = options.patience;
    config.seed = options.run_seed;
    config.dataset_name = fs::path(options.spec_file).stem().string();
    config.task_type = "synthetic";
    config.parallel = false;

    Optimizer opt(config, synthetic_context(spec), env.architect, env.worker, make_dataset(spec));
    RunReport report = opt.run();
    Rational run_regret = regret(report, oracle);

    nlohmann::json out = {{"report", report.to_json()},
                          {"oracle", oracle.to_json()},
                          {"regret", rational_json(run_regret)}};
    fs::create_directories(options.output_dir);
    write_text_file(options.output_dir + "/report.json", out.dump(2) + "\n");
    write_text_file(options.output_dir + "/oracle.json", oracle.to_json().dump(2) + "\n");
    return out;
}

Rational parse_score(const std::string& text) {
    std::string s = trim(text);
    if (s.empty()) throw Error(ErrorKind::ConfigError, "empty score");
    std::size_t dot = s.find('.');
    if (s.find('/') != std::string::npos || dot == std::string::npos) {
        try {
            return Rational::parse(s);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, "bad score: " + text);
        }
    }

    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    bool negative = !whole.empty() && whole[0] == '-';
    if (negative) whole = whole.substr(1);
    if (whole.empty()) whole = "0";
    if (frac.empty() || frac.size() > 18)
        throw Error(ErrorKind::ConfigError, "bad decimal score: " + text);
    for (const std::string& part : {whole, frac})
        for (char c : part)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw Error(ErrorKind::ConfigError, "bad decimal score: " + text);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    std::int64_t num = std::stoll(whole) * den + std::stoll(frac);
    return Rational(negative ? -num : num, den);
}

std::string trajectory_csv(const RunReport& report) {
    std::ostringstream out;
    out << "step,factor,warm_start,accepted,gain,gain_exact,score,score_exact,best,best_exact,"
           "step_tokens\n";
    for (const StepRecord& r : report.trajectory) {
        Rational gain;
        if (r.accepted && r.accepted_index >= 0 &&
            static_cast<std::size_t>(r.accepted_index) < r.candidates.size())
            gain = r.candidates[static_cast<std::size_t>(r.accepted_index)].gain;
        out << r.t << ',' << r.factor << ',' << (r.warm_start ? 1 : 0) << ','
            << (r.accepted ? 1 : 0) << ',' << gain.to_double() << ',' << gain.to_string() << ','
            << r.score_after.to_double() << ',' << r.score_after.to_string() << ','
            << r.best_after.to_double() << ',' << r.best_after.to_string() << ','
            << r.step_tokens << '\n';
    }
    return out.str();
}

std::string ablation_csv(const nlohmann::json& table) {
    std::ostringstream out;
    out << "value,initial,best,final,steps,steps_to_best,tokens_at_best_step,total_tokens,"
           "stop_reason,error\n";
    for (const nlohmann::json& run : table.at("runs")) {
        out << run.at("value").get<std::string>() << ',';
        if (run.contains("error")) {
            std::string message = run.at("error").get<std::string>();
            std::replace(message.begin(), message.end(), ',', ';');
            out << ",,,,,,,," << message << '\n';
            continue;
        }
        out << run.at("initial_score").at("exact").get<std::string>() << ','
            << run.at("best_score").at("exact").get<std::string>() << ','
            << run.at("final_score").at("exact").get<std::string>() << ','
            << run.at("steps").get<std::int64_t>() << ','
            << run.at("steps_to_best").get<std::int64_t>() << ','
            << run.at("tokens_at_best_step").get<std::int64_t>() << ','
            << run.at("total_tokens").get<std::int64_t>() << ','
            << run.at("stop_reason").get<std::string>() << ",\n";
    }
    return out.str();
}

std::string render_report_summary(const nlohmann::json& report) {
    const nlohmann::json& r = report.contains("report") ? report.at("report") : report;
    std::ostringstream out;
    auto score_line = [&](const char* label, const nlohmann::json& s) {
        out << label << ' ' << s.at("decimal").get<double>() << " (" <<
            s.at("exact").get<std::string>() << ")";
    };
    out << "validation examples: " << r.at("val_size").get<std::int64_t>() << '\n';
    score_line("initial", r.at("initial_score"));
    out << "  ";
    score_line("best", r.at("best_score"));
    out << "  ";
    score_line("final", r.at("final_score"));
    out << '\n';
    out << "steps: " << r.at("trajectory").size() << "  steps to best: "
        << r.at("steps_to_best").get<std::int64_t>() << "  stop: "
        << r.at("stop_reason").get<std::string>() << '\n';
    out << "tokens: " << r.at("total_tokens").get<std::int64_t>() << " total, "
        << r.at("tokens_at_best_step").get<std::int64_t>() << " through best step\n";
    out << "factors:\n";
    for (const nlohmann::json& s : r.at("selection_stats")) {
        std::int64_t warm = s.at("warm_selections").get<std::int64_t>();
        std::int64_t post = s.at("selections").get<std::int64_t>();
        out << "  " << s.at("name").get<std::string>() << " (" << s.at("role").get<std::string>()
            << "): selected " << warm + post << " (" << warm << " warm), accepted "
            << s.at("accept_successes").get<std::int64_t>() << ", gain "
            << s.at("accepted_gain").at("exact").get<std::string>() << '\n';
    }
    for (const nlohmann::json& w : r.at("warnings"))
        out << "warning: " << w.get<std::string>() << '\n';
    return out.str();
}

} // namespace apsf
