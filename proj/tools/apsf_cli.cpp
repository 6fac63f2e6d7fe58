#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "apsf/error.hpp"
#include "apsf/harness.hpp"

namespace {

using namespace apsf;

std::string quoted_stops(const std::vector<std::string>& stops) {
    std::string out;
    for (const std::string& s : stops) {
        if (!out.empty()) out += ", ";
        out += nlohmann::json(s).dump();
    }
    return out.empty() ? "(none)" : out;
}

struct OptimizeArgs {
    std::string config;
    std::string dataset, test_dataset, worker, architect, record, output_dir, resume;
    std::string context_file, task_description, output_format, constraints;
    int exemplars = 0;
    std::uint64_t split_seed = 0;
    std::size_t val_size = 0;
    int n = 0, t_max = 0, patience = 0;
    std::string delta, mode, scheduler, judge, initial_prompt;
    std::uint64_t seed = 0;
    bool unfrozen = false, serial = false, skip_discovery_charge = false;
    bool print_config = false;
};

RunManifest build_manifest(const CLI::App& sub, const OptimizeArgs& a) {
    RunManifest m;
    if (!a.config.empty())
        m = RunManifest::from_json(nlohmann::json::parse(read_text_file(a.config)));
    if (sub.count("--dataset")) m.dataset = a.dataset;
    if (sub.count("--test-dataset")) {
        m.test_dataset = a.test_dataset;
        m.plan.test_file = a.test_dataset;
    }
    if (sub.count("--worker")) m.worker = a.worker;
    if (sub.count("--architect")) m.architect = a.architect;
    if (sub.count("--record")) m.record = a.record;
    if (sub.count("--output-dir")) m.output_dir = a.output_dir;
    if (sub.count("--resume")) m.resume = a.resume;
    if (sub.count("--context")) m.context_file = a.context_file;
    if (sub.count("--task")) m.task_description = a.task_description;
    if (sub.count("--output-format")) m.output_format = a.output_format;
    if (sub.count("--constraints")) m.constraints = a.constraints;
    if (sub.count("--exemplars")) m.exemplars = a.exemplars;
    if (sub.count("--split-seed")) m.plan.seed = a.split_seed;
    if (sub.count("--val-size")) m.plan.validation_size = a.val_size;
    if (sub.count("--candidates")) m.config.n = a.n;
    if (sub.count("--steps")) m.config.t_max = a.t_max;
    if (sub.count("--patience")) m.config.patience = a.patience;
    if (sub.count("--delta")) {
        try {
            m.config.delta = parse_score(a.delta);
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, "bad threshold: " + a.delta);
        }
    }
    if (sub.count("--mode")) m.config.mode = a.mode;
    if (sub.count("--scheduler")) m.config.scheduler = scheduler_from_string(a.scheduler);
    if (sub.count("--judge")) m.config.judge = judge_mode_from_string(a.judge);
    if (sub.count("--initial-prompt")) m.config.initial_prompt = a.initial_prompt;
    if (sub.count("--seed")) m.config.seed = a.seed;
    if (a.unfrozen) m.config.unfrozen = true;
    if (a.serial) m.config.parallel = false;
    if (a.skip_discovery_charge) m.config.count_discovery_step = false;
    if (m.architect.empty()) m.architect = m.worker;
    return m;
}

void add_optimize_flags(CLI::App* sub, OptimizeArgs& a) {
    sub->add_option("--config", a.config, "manifest JSON, overridden by flags");
    sub->add_option("--dataset", a.dataset, "JSONL training pool");
    sub->add_option("--test-dataset", a.test_dataset, "official test JSONL");
    sub->add_option("--worker", a.worker, "synth:<spec>|fixture:<jsonl>|remote:<url>[#model]");
    sub->add_option("--architect", a.architect, "architect backend, defaults to worker");
    sub->add_option("--record", a.record, "fixture prefix for recording traffic");
    sub->add_option("--output-dir", a.output_dir, "artifact directory");
    sub->add_option("--resume", a.resume, "checkpoint to continue from");
    sub->add_option("--context", a.context_file, "serialized task context JSON");
    sub->add_option("--task", a.task_description, "task description");
    sub->add_option("--output-format", a.output_format, "expected answer format");
    sub->add_option("--constraints", a.constraints, "task constraints");
    sub->add_option("--exemplars", a.exemplars, "exemplars shown to the architect");
    sub->add_option("--split-seed", a.split_seed, "shuffle seed for the split");
    sub->add_option("--val-size", a.val_size, "validation slice size");
    sub->add_option("--candidates", a.n, "candidates per update");
    sub->add_option("--steps", a.t_max, "total step budget");
    sub->add_option("--patience", a.patience, "non-improving steps before stop");
    sub->add_option("--delta", a.delta, "acceptance threshold, e.g. 1/50");
    sub->add_option("--mode", a.mode, "initial-prompt or from-scratch");
    sub->add_option("--scheduler", a.scheduler,
                    "error-guided|round-robin|thompson|greedy|random");
    sub->add_option("--judge", a.judge, "numeric-exact|choice-letter|llm-extract");
    sub->add_option("--initial-prompt", a.initial_prompt, "seed prompt text");
    sub->add_option("--seed", a.seed, "run seed");
    sub->add_flag("--unfrozen", a.unfrozen, "whole-prompt edits instead of single factors");
    sub->add_flag("--serial", a.serial, "disable parallel example scoring");
    sub->add_flag("--skip-discovery-charge", a.skip_discovery_charge,
                  "do not count structure discovery against the budget");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"factorized prompt optimizer"};
    app.require_subcommand(1);

    OptimizeArgs opt_args;
    CLI::App* optimize = app.add_subcommand("optimize", "run the two-phase optimization loop");
    add_optimize_flags(optimize, opt_args);
    optimize->add_flag("--print-config", opt_args.print_config,
                       "print the merged manifest and exit");
    optimize->callback([&] {
        RunManifest manifest = build_manifest(*optimize, opt_args);
        if (opt_args.print_config) {
            std::cout << "worker stop sequences: "
                      << quoted_stops(manifest.config.worker_params.stop) << "\n"
                      << "architect stop sequences: "
                      << quoted_stops(manifest.config.architect_params.stop) << "\n"
                      << manifest.to_json().dump(2) << "\n";
            return;
        }
        nlohmann::json out = cmd_optimize(manifest);
        std::cout << render_report_summary(out) << "artifacts in " << manifest.output_dir
                  << "\n";
    });

    EvaluateOptions eval_options;
    std::string eval_judge;
    bool eval_serial = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a prompt file on a dataset");
    evaluate->add_option("--prompt", eval_options.prompt_file, "prompt text file")->required();
    evaluate->add_option("--dataset", eval_options.dataset, "JSONL file or synth:<spec>")
        ->required();
    evaluate->add_option("--worker", eval_options.worker, "worker backend descriptor");
    evaluate->add_option("--judge", eval_judge, "numeric-exact|choice-letter|llm-extract");
    evaluate->add_option("--paired-validation", eval_options.paired_validation,
                         "validation score for the generalization gap, e.g. 44/50 or 0.88");
    evaluate->add_option("--output", eval_options.output, "write the report JSON here");
    evaluate->add_flag("--serial", eval_serial, "disable parallel example scoring");
    evaluate->callback([&] {
        if (!eval_judge.empty()) eval_options.judge = judge_mode_from_string(eval_judge);
        eval_options.parallel = !eval_serial;
        std::cout << cmd_evaluate(eval_options).dump(2) << "\n";
    });

    TransferOptions transfer_options;
    std::string transfer_judge;
    bool transfer_serial = false;
    CLI::App* transfer = app.add_subcommand("transfer", "score one prompt across datasets");
    transfer->add_option("--prompt", transfer_options.prompt_file, "prompt text file")
        ->required();
    transfer->add_option("--target", transfer_options.targets,
                         "target dataset, repeatable")->required();
    transfer->add_option("--worker", transfer_options.worker, "worker backend descriptor");
    transfer->add_option("--judge", transfer_judge, "judge mode");
    transfer->add_option("--output", transfer_options.output, "write the matrix row here");
    transfer->add_flag("--serial", transfer_serial, "disable parallel example scoring");
    transfer->callback([&] {
        if (!transfer_judge.empty())
            transfer_options.judge = judge_mode_from_string(transfer_judge);
        transfer_options.parallel = !transfer_serial;
        std::cout << cmd_transfer(transfer_options).dump(2) << "\n";
    });

    OptimizeArgs ablate_args;
    std::string ablate_kind;
    std::vector<std::string> ablate_grid;
    CLI::App* ablate = app.add_subcommand("ablate", "sweep one knob over a grid");
    add_optimize_flags(ablate, ablate_args);
    ablate->add_option("--kind", ablate_kind, "candidates-N|scheduler|frozen")->required();
    ablate->add_option("--grid", ablate_grid, "grid values, repeatable; empty = default grid");
    ablate->callback([&] {
        AblateOptions options;
        options.manifest = build_manifest(*ablate, ablate_args);
        options.kind = ablate_kind;
        options.grid = ablate_grid;
        nlohmann::json table = cmd_ablate(options);
        std::cout << ablation_csv(table) << "table in " << options.manifest.output_dir
                  << "/ablation.json\n";
    });

    CLI::App* synth = app.add_subcommand("synth", "synthetic benchmark environments");
    synth->require_subcommand(1);

    std::string gen_family = "bottleneck", gen_output = "spec.json";
    int gen_factors = 4, gen_pool = 4, gen_examples = 50;
    std::uint64_t gen_seed = 42;
    CLI::App* generate = synth->add_subcommand("generate", "write a task specification");
    generate->add_option("--family", gen_family, "bottleneck|uniform|saturated");
    generate->add_option("--factors", gen_factors, "factor count");
    generate->add_option("--pool", gen_pool, "candidates per factor");
    generate->add_option("--examples", gen_examples, "validation examples");
    generate->add_option("--seed", gen_seed, "generation seed");
    generate->add_option("--output", gen_output, "spec file to write");
    generate->callback([&] {
        SyntheticTaskSpec spec =
            generate_spec(gen_family, gen_factors, gen_pool, gen_examples, gen_seed);
        write_text_file(gen_output, spec.to_json().dump(2) + "\n");
        OracleResult oracle = brute_force_optimum(spec);
        std::cout << "wrote " << gen_output << "; optimum "
                  << oracle.optimal_score.to_string() << "\n";
    });

    SynthRunOptions synth_options;
    std::string synth_scheduler;
    CLI::App* synth_run = synth->add_subcommand("run", "optimize against a spec and score regret");
    synth_run->add_option("--spec", synth_options.spec_file, "task spec JSON")->required();
    synth_run->add_option("--output-dir", synth_options.output_dir, "artifact directory");
    synth_run->add_option("--scheduler", synth_scheduler, "factor selection strategy");
    synth_run->add_option("--truthfulness", synth_options.truthfulness,
                          "probability a diagnosis names the best factor");
    synth_run->add_option("--patience", synth_options.patience, "non-improving step limit");
    synth_run->add_option("--seed", synth_options.run_seed, "run seed");
    synth_run->callback([&] {
        if (!synth_scheduler.empty())
            synth_options.scheduler = scheduler_from_string(synth_scheduler);
        nlohmann::json out = cmd_synth_run(synth_options);
        std::cout << "best " << out.at("report").at("best_score").at("exact").get<std::string>()
                  << "  optimum " << out.at("oracle").at("optimal_score").get<std::string>()
                  << "  regret " << out.at("regret").at("exact").get<std::string>() << "\n";
    });

    std::string report_path;
    CLI::App* report = app.add_subcommand("report", "summarize a run report");
    report->add_option("file", report_path, "report.json from an optimize run")->required();
    report->callback([&] {
        nlohmann::json j = nlohmann::json::parse(read_text_file(report_path));
        std::cout << render_report_summary(j);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const apsf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
