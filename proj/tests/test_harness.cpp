#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

#include "apsf/error.hpp"
#include "apsf/harness.hpp"

using namespace apsf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("apsf-harness-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int value = 0;
        return value;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<Example> numbered_examples(int count) {
    std::vector<Example> out;
    for (int i = 1; i <= count; ++i)
        out.push_back({std::to_string(i), "q" + std::to_string(i), std::to_string(i)});
    return out;
}

SyntheticTaskSpec k2_spec() {
    SyntheticTaskSpec spec;
    spec.factor_count = 2;
    spec.pools = {{Rational(1, 5), Rational(9, 10)}, {Rational(1, 2), Rational(1, 2)}};
    spec.initial = {0, 0};
    for (int i = 1; i <= 10; ++i) spec.difficulties.push_back(Rational(i, 10));
    spec.seed = 7;
    return spec;
}

std::string write_spec(const TempDir& dir, const SyntheticTaskSpec& spec,
                       const std::string& name = "spec.json") {
    std::string path = dir.file(name);
    write_text_file(path, spec.to_json().dump(2) + "\n");
    return path;
}

RunManifest synth_manifest(const std::string& spec_path, const std::string& output_dir) {
    RunManifest m;
    m.worker = "synth:" + spec_path;
    m.architect = "synth:" + spec_path;
    m.output_dir = output_dir;
    m.config.mode = "from-scratch";
    m.config.parallel = false;
    m.config.patience = 4;
    m.plan.validation_size = 10;
    return m;
}

} // namespace

TEST_CASE("split is deterministic, index-faithful, and guards slice size") {
    std::vector<Example> data = numbered_examples(12);
    SplitPlan plan;
    plan.seed = 42;
    plan.validation_size = 5;

    SplitResult a = split(data, plan);
    SplitResult b = split(data, plan);
    CHECK(a.validation_indices == b.validation_indices);
    CHECK(a.test_indices == b.test_indices);
    CHECK(a.validation.size() == 5);
    CHECK(a.test.size() == 7);
    CHECK_FALSE(a.official_test);

    std::set<std::size_t> seen;
    for (std::size_t idx : a.validation_indices) seen.insert(idx);
    for (std::size_t idx : a.test_indices) seen.insert(idx);
    CHECK(seen.size() == 12);
    for (std::size_t i = 0; i < a.validation.size(); ++i)
        CHECK(a.validation[i].id == data[a.validation_indices[i]].id);

    SplitPlan other = plan;
    other.seed = 43;
    CHECK(split(data, other).validation_indices != a.validation_indices);

    SplitResult big = split(numbered_examples(1369), SplitPlan{});
    CHECK(big.validation.size() == 50);
    CHECK(big.test.size() == 1319);

    plan.validation_size = 13;
    CHECK_THROWS_AS(split(data, plan), Error);
    try {
        split(data, plan);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooSmall);
    }
}

TEST_CASE("official test set replaces the shuffled remainder") {
    std::vector<Example> data = numbered_examples(8);
    std::vector<Example> official = numbered_examples(3);
    SplitPlan plan;
    plan.validation_size = 6;
    SplitResult parts = split(data, plan, &official);
    CHECK(parts.official_test);
    CHECK(parts.test.size() == 3);
    CHECK(parts.test_indices.empty());
    CHECK(parts.indices_json().at("official_test").get<bool>());
}

TEST_CASE("dataset parsing handles both record shapes and rejects junk") {
    std::vector<std::string> lines = {
        R"({"id":"a","query":"2+2?","gold":"4"})",
        "",
        R"({"question":"3+4?","answer":"adding gives\n#### 7"})",
        R"({"id":9,"question":"5*2?","answer":"10"})",
    };
    std::vector<Example> data = parse_dataset_lines(lines, "inline");
    REQUIRE(data.size() == 3);
    CHECK(data[0].id == "a");
    CHECK(data[0].gold == "4");
    CHECK(data[1].id == "3");
    CHECK(data[1].query == "3+4?");
    CHECK(data[1].gold == "7");
    CHECK(data[2].id == "9");
    CHECK(data[2].gold == "10");

    auto rejects = [](const std::vector<std::string>& bad) {
        try {
            parse_dataset_lines(bad, "bad");
        } catch (const Error& e) {
            return e.kind() == ErrorKind::DatasetError;
        }
        return false;
    };
    CHECK(rejects({"not json"}));
    CHECK(rejects({"[1,2]"}));
    CHECK(rejects({R"({"gold":"4"})"}));
    CHECK(rejects({R"({"query":"?"})"}));
    CHECK(rejects({R"({"query":"?","answer":"#### "})"}));
    CHECK(rejects({}));
    CHECK_THROWS_AS(load_dataset("/nonexistent/data.jsonl"), Error);
}

TEST_CASE("manifest json round-trips flat keys and validates paths") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());
    RunManifest m = synth_manifest(spec_path, dir.file("out"));
    m.task_description = "toy task";
    m.config.n = 3;
    m.config.seed = 99;
    m.plan.seed = 1234;
    m.plan.validation_size = 10;

    nlohmann::json j = m.to_json();
    CHECK(j.at("split_seed").get<std::uint64_t>() == 1234);
    CHECK(j.at("seed").get<std::uint64_t>() == 99);

    RunManifest back = RunManifest::from_json(j);
    CHECK(back.worker == m.worker);
    CHECK(back.config.n == 3);
    CHECK(back.config.seed == 99);
    CHECK(back.plan.seed == 1234);
    CHECK(back.plan.validation_size == 10);
    CHECK(back.task_description == "toy task");
    back.validate();

    RunManifest missing = back;
    missing.worker = "synth:/nonexistent/spec.json";
    CHECK_THROWS_AS(missing.validate(), Error);
    RunManifest no_arch = back;
    no_arch.architect.clear();
    CHECK_THROWS_AS(no_arch.validate(), Error);
}

TEST_CASE("optimize command writes report, prompt, trajectory, and checkpoints") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());
    RunManifest m = synth_manifest(spec_path, dir.file("out"));

    nlohmann::json out = cmd_optimize(m);
    const nlohmann::json& report = out.at("report");
    CHECK(report.at("best_score").at("exact").get<std::string>() == "7/10");
    CHECK(report.at("val_size").get<int>() == 10);
    CHECK(out.at("split").at("validation").size() == 10);

    CHECK(fs::exists(dir.file("out/report.json")));
    CHECK(fs::exists(dir.file("out/best_prompt.txt")));
    CHECK(fs::exists(dir.file("out/trajectory.csv")));
    int steps = static_cast<int>(report.at("trajectory").size());
    CHECK(steps >= 2);
    for (int t = 1; t <= steps; ++t)
        CHECK(fs::exists(dir.file("out/checkpoint-" + std::to_string(t) + ".json")));

    std::string prompt = read_text_file(dir.file("out/best_prompt.txt"));
    CHECK(prompt.find("@Ab") != std::string::npos);
    std::string csv = read_text_file(dir.file("out/trajectory.csv"));
    CHECK(csv.rfind("step,factor,warm_start,accepted,gain", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == steps + 1);

    nlohmann::json parsed = nlohmann::json::parse(read_text_file(dir.file("out/report.json")));
    CHECK(parsed.at("report") == report);
    CHECK(parsed.at("manifest").at("worker").get<std::string>() == m.worker);
}

TEST_CASE("resumed run reproduces the uninterrupted report") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());

    RunManifest full = synth_manifest(spec_path, dir.file("full"));
    nlohmann::json whole = cmd_optimize(full);
    REQUIRE(fs::exists(dir.file("full/checkpoint-2.json")));

    RunManifest tail = synth_manifest(spec_path, dir.file("tail"));
    tail.resume = dir.file("full/checkpoint-2.json");
    nlohmann::json resumed = cmd_optimize(tail);
    CHECK(resumed.at("report").dump() == whole.at("report").dump());
}

TEST_CASE("recorded fixtures replay to a byte-identical report") {
    TempDir dir;
    SyntheticTaskSpec spec = k2_spec();
    std::string spec_path = write_spec(dir, spec);

    RunManifest live = synth_manifest(spec_path, dir.file("live"));
    live.record = dir.file("fixture");
    nlohmann::json first = cmd_optimize(live);
    CHECK(fs::exists(dir.file("fixture.worker.jsonl")));
    CHECK(fs::exists(dir.file("fixture.architect.jsonl")));

    std::string data_path = dir.file("data.jsonl");
    std::string jsonl;
    for (const Example& e : make_dataset(spec))
        jsonl += nlohmann::json({{"id", e.id}, {"query", e.query}, {"gold", e.gold}}).dump() + "\n";
    write_text_file(data_path, jsonl);

    RunManifest replay = synth_manifest(spec_path, dir.file("replay"));
    replay.dataset = data_path;
    replay.worker = "fixture:" + dir.file("fixture.worker.jsonl");
    replay.architect = "fixture:" + dir.file("fixture.architect.jsonl");
    replay.context_file = dir.file("live/context.json");
    nlohmann::json second = cmd_optimize(replay);
    CHECK(second.at("report").dump() == first.at("report").dump());
}

TEST_CASE("evaluate reports exact accuracy and paired generalization gap") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());
    std::string prompt_path = dir.file("prompt.txt");
    write_text_file(prompt_path, candidate_text(1, 1) + " " + candidate_text(2, 0) + "\n");

    EvaluateOptions options;
    options.prompt_file = prompt_path;
    options.dataset = "synth:" + spec_path;
    options.paired_validation = "0.9";
    options.output = dir.file("eval.json");
    nlohmann::json out = cmd_evaluate(options);

    CHECK(out.at("accuracy").at("exact").get<std::string>() == "7/10");
    CHECK(out.at("correct").get<int>() == 7);
    CHECK(out.at("examples").get<int>() == 10);
    CHECK(out.at("verdicts").size() == 10);
    CHECK(out.at("generalization_gap").at("exact").get<std::string>() == "1/5");
    CHECK(out.at("paired_validation").at("decimal").get<double>() == doctest::Approx(0.9));
    CHECK(fs::exists(options.output));

    EvaluateOptions empty = options;
    write_text_file(dir.file("empty.txt"), "\n");
    empty.prompt_file = dir.file("empty.txt");
    CHECK_THROWS_AS(cmd_evaluate(empty), Error);
}

TEST_CASE("transfer scores one prompt across targets; source column matches oracle") {
    TempDir dir;
    SyntheticTaskSpec source = k2_spec();
    std::string source_path = write_spec(dir, source, "source.json");
    SyntheticTaskSpec other = k2_spec();
    other.pools = {{Rational(1, 5), Rational(2, 5)}, {Rational(1, 2), Rational(1, 2)}};
    std::string other_path = write_spec(dir, other, "other.json");

    OracleResult oracle = brute_force_optimum(source);
    std::string prompt_path = dir.file("best.txt");
    std::string text;
    for (std::size_t k = 1; k <= source.pools.size(); ++k) {
        if (!text.empty()) text += " ";
        text += candidate_text(static_cast<int>(k), oracle.optimal[k - 1]);
    }
    write_text_file(prompt_path, text + "\n");

    TransferOptions options;
    options.prompt_file = prompt_path;
    options.targets = {"synth:" + source_path, "synth:" + other_path};
    nlohmann::json out = cmd_transfer(options);
    REQUIRE(out.at("row").size() == 2);
    CHECK(out.at("row")[0].at("accuracy").at("exact").get<std::string>() ==
          oracle.optimal_score.to_string());
    CHECK(out.at("row")[1].at("accuracy").at("exact").get<std::string>() == "2/5");

    EvaluateOptions same;
    same.prompt_file = prompt_path;
    same.dataset = "synth:" + source_path;
    CHECK(cmd_evaluate(same).at("accuracy") == out.at("row")[0].at("accuracy"));

    TransferOptions none;
    none.prompt_file = prompt_path;
    CHECK_THROWS_AS(cmd_transfer(none), Error);
}

TEST_CASE("ablation sweeps its grid sequentially and keeps partial results") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());

    AblateOptions options;
    options.manifest = synth_manifest(spec_path, dir.file("ablate"));
    options.manifest.config.t_max = 4;
    options.kind = "candidates-N";
    options.grid = {"1", "2"};
    nlohmann::json table = cmd_ablate(options);
    REQUIRE(table.at("runs").size() == 2);
    for (const nlohmann::json& run : table.at("runs"))
        CHECK_FALSE(run.contains("error"));
    CHECK(table.at("runs")[0].at("best_score").at("exact").get<std::string>() == "3/10");
    CHECK(table.at("runs")[1].at("best_score").at("exact").get<std::string>() == "7/10");
    CHECK(fs::exists(dir.file("ablate/ablation.json")));
    std::string csv = read_text_file(dir.file("ablate/ablation.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    AblateOptions sched = options;
    sched.kind = "scheduler";
    sched.grid.clear();
    nlohmann::json sched_table = cmd_ablate(sched);
    CHECK(sched_table.at("grid").size() == 5);
    CHECK(sched_table.at("runs").size() == 5);

    AblateOptions frozen = options;
    frozen.kind = "frozen";
    frozen.grid.clear();
    nlohmann::json frozen_table = cmd_ablate(frozen);
    REQUIRE(frozen_table.at("runs").size() == 2);
    for (const nlohmann::json& run : frozen_table.at("runs"))
        CHECK(run.contains("best_score"));

    AblateOptions bad = options;
    bad.grid = {"0"};
    CHECK_THROWS_AS(cmd_ablate(bad), Error);
    AblateOptions unknown = options;
    unknown.kind = "widgets";
    unknown.grid.clear();
    CHECK_THROWS_AS(cmd_ablate(unknown), Error);
}

TEST_CASE("synthetic run command emits report, oracle, and zero regret here") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());
    SynthRunOptions options;
    options.spec_file = spec_path;
    options.output_dir = dir.file("synth");
    nlohmann::json out = cmd_synth_run(options);
    CHECK(out.at("report").at("best_score").at("exact").get<std::string>() == "7/10");
    CHECK(out.at("oracle").at("optimal_score").get<std::string>() == "7/10");
    CHECK(out.at("regret").at("exact").get<std::string>() == "0");
    CHECK(fs::exists(dir.file("synth/report.json")));
    CHECK(fs::exists(dir.file("synth/oracle.json")));
}

TEST_CASE("score strings parse exactly in all three shapes") {
    CHECK(parse_score("44/50") == Rational(44, 50));
    CHECK(parse_score("0.88") == Rational(88, 100));
    CHECK(parse_score(" 0.880 ") == Rational(88, 100));
    CHECK(parse_score("1") == Rational(1));
    CHECK(parse_score("-0.5") == Rational(-1, 2));
    CHECK_THROWS_AS(parse_score(""), Error);
    CHECK_THROWS_AS(parse_score("abc"), Error);
    CHECK_THROWS_AS(parse_score("1.2.3"), Error);
}

TEST_CASE("report summary renders scores, stop reason, and factor stats") {
    TempDir dir;
    std::string spec_path = write_spec(dir, k2_spec());
    RunManifest m = synth_manifest(spec_path, dir.file("out"));
    nlohmann::json out = cmd_optimize(m);
    std::string text = render_report_summary(out);
    CHECK(text.find("validation examples: 10") != std::string::npos);
    CHECK(text.find("7/10") != std::string::npos);
    CHECK(text.find("stop:") != std::string::npos);
    CHECK(text.find("factors:") != std::string::npos);
}
