#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apsf/scoring.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace apsf;

namespace {

std::vector<Example> numeric_dataset(int n) {
    std::vector<Example> dataset;
    for (int i = 0; i < n; ++i)
        dataset.push_back({"ex" + std::to_string(i), "what is " + std::to_string(i) + "?",
                           std::to_string(i)});
    return dataset;
}

// Answers the gold for queries "what is <n>?" when n is below the cutoff.
SyntheticBackend cutoff_worker(int cutoff) {
    return SyntheticBackend("cutoff", [cutoff](const ChatRequest& request) {
        const std::string& content = request.messages.back().content;
        auto at = content.rfind("what is ");
        int n = std::stoi(content.substr(at + 8));
        int reply = n < cutoff ? n : n + 1;
        return "Reasoning... The answer is " + std::to_string(reply);
    });
}

} // namespace

TEST_CASE("numeric extraction prefers the answer-is pattern") {
    CHECK(extract_numeric_answer("The answer is 42") == "42");
    CHECK(extract_numeric_answer("...total is $1,234.00. The answer is 1,234") == "1234");
    CHECK(extract_numeric_answer("no digits here") == std::nullopt);
    CHECK(extract_numeric_answer("first guess: answer is 3. Final answer is 7.") == "7");
    CHECK(extract_numeric_answer("scratch 99 then #### 17") == "17");
    CHECK(extract_numeric_answer("calc gives 12 then 15") == "15");
    CHECK(extract_numeric_answer("Answer: -3") == "-3");
    CHECK(extract_numeric_answer("The answer is 17.0") == "17");
}

TEST_CASE("numeric normalization strips formatting") {
    CHECK(normalize_numeric("1,234.00") == "1234");
    CHECK(normalize_numeric("$5") == "5");
    CHECK(normalize_numeric("17.0") == "17");
    CHECK(normalize_numeric("17.50") == "17.5");
    CHECK(normalize_numeric("42.") == "42");
    CHECK(normalize_numeric("-0.0") == "0");
    CHECK(normalize_numeric("3.14") == "3.14");
}

TEST_CASE("choice extraction finds the last standalone letter") {
    CHECK(extract_choice_letter("I pick (B) because it fits") == "B");
    CHECK(extract_choice_letter("Answer: C") == "C");
    CHECK(extract_choice_letter("maybe a, maybe d") == "D");
    CHECK(extract_choice_letter("nothing fits") == std::nullopt);
    CHECK(extract_choice_letter("grade") == std::nullopt);
}

TEST_CASE("judge handles both offline modes") {
    Verdict v1 = judge("The answer is 17", "17", JudgeMode::NumericExact, "a");
    CHECK(v1.correct);
    CHECK(v1.extracted == "17");

    Verdict v2 = judge("I pick (B) because it balances", "B", JudgeMode::ChoiceLetter, "b");
    CHECK(v2.correct);

    Verdict v3 = judge("The answer is 16", "17", JudgeMode::NumericExact, "c");
    CHECK_FALSE(v3.correct);
    CHECK(v3.extracted == "16");

    CHECK(judge("The answer is 17.0", "17", JudgeMode::NumericExact).correct);
    CHECK(judge("pick (b)", "(B)", JudgeMode::ChoiceLetter).correct);
    CHECK_THROWS_AS(judge("x", "", JudgeMode::NumericExact), Error);
    CHECK_THROWS_AS(judge("x", "1", JudgeMode::LlmExtract), Error);
}

TEST_CASE("judge mode names round-trip") {
    for (auto mode : {JudgeMode::NumericExact, JudgeMode::ChoiceLetter, JudgeMode::LlmExtract})
        CHECK(judge_mode_from_string(to_string(mode)) == mode);
    CHECK_THROWS_AS(judge_mode_from_string("fuzzy"), Error);
}

TEST_CASE("perfect and hopeless workers bracket the score") {
    auto dataset = numeric_dataset(5);
    SyntheticBackend perfect = cutoff_worker(5);
    EmpiricalScore one = empirical_score("prompt", dataset, perfect);
    CHECK(one.value == Rational(1));
    CHECK(one.correct_count == one.total);

    SyntheticBackend zero("zero", [](const ChatRequest&) { return std::string("The answer is 999"); });
    EmpiricalScore none = empirical_score("prompt", dataset, zero);
    CHECK(none.value == Rational(0));
    CHECK(none.correct_count == 0);
}

TEST_CASE("score is the exact fraction of correct verdicts") {
    auto dataset = numeric_dataset(50);
    SyntheticBackend worker = cutoff_worker(43);
    EmpiricalScore score = empirical_score("prompt", dataset, worker);
    CHECK(score.value == Rational(43, 50));
    CHECK(score.correct_count == 43);
    CHECK(score.total == 50);
    CHECK(score.value * Rational(score.total) == Rational(score.correct_count));
    CHECK(score.verdicts.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(score.verdicts[i].example_id == dataset[i].id);
}

TEST_CASE("parallel and serial scoring agree verdict for verdict") {
    auto dataset = numeric_dataset(97);
    SyntheticBackend worker = cutoff_worker(31);

    TokenLedger parallel_ledger, serial_ledger;
    ScoringOptions parallel_options;
    parallel_options.ledger = &parallel_ledger;
    ScoringOptions serial_options;
    serial_options.ledger = &serial_ledger;

    EmpiricalScore parallel = empirical_score("prompt", dataset, worker, parallel_options);
    EmpiricalScore serial = empirical_score_serial("prompt", dataset, worker, serial_options);

    CHECK(parallel.value == serial.value);
    REQUIRE(parallel.verdicts.size() == serial.verdicts.size());
    for (std::size_t i = 0; i < serial.verdicts.size(); ++i) {
        CHECK(parallel.verdicts[i].example_id == serial.verdicts[i].example_id);
        CHECK(parallel.verdicts[i].raw_output == serial.verdicts[i].raw_output);
        CHECK(parallel.verdicts[i].correct == serial.verdicts[i].correct);
    }
    CHECK(parallel_ledger.grand_total() == serial_ledger.grand_total());
    CHECK(parallel_ledger.to_json() == serial_ledger.to_json());
}

TEST_CASE("worker sees the prompt, a blank line, then the query") {
    std::string seen;
    SyntheticBackend worker("spy", [&seen](const ChatRequest& request) {
        seen = request.messages.back().content;
        return std::string("The answer is 0");
    });
    ScoringOptions options;
    options.parallel = false;
    empirical_score("Do the thing", {{"e1", "what is 0?", "0"}}, worker, options);
    CHECK(seen == "Do the thing\n\nwhat is 0?");
}

TEST_CASE("scoring uses worker decoding defaults") {
    ChatRequest captured;
    SyntheticBackend worker("capture", [&captured](const ChatRequest& request) {
        captured = request;
        return std::string("The answer is 0");
    });
    ScoringOptions options;
    options.parallel = false;
    empirical_score("p", {{"e1", "what is 0?", "0"}}, worker, options);
    CHECK(captured.temperature == 0.0);
    CHECK(captured.top_p == 1.0);
    CHECK(captured.max_tokens == 8192);
    CHECK(captured.stop == std::vector<std::string>{"\n\n", "---"});
    CHECK(captured.tag == Tag::Worker);
}

TEST_CASE("backend failures abort with the example id") {
    SyntheticBackend worker("flaky", [](const ChatRequest& request) -> std::string {
        if (request.messages.back().content.find("what is 3?") != std::string::npos)
            throw Error(ErrorKind::EndpointError, "boom");
        return "The answer is 0";
    });
    auto dataset = numeric_dataset(6);
    for (bool parallel : {false, true}) {
        ScoringOptions options;
        options.parallel = parallel;
        try {
            empirical_score("p", dataset, worker, options);
            FAIL("expected BackendFailure");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::BackendFailure);
            CHECK(std::string(e.what()).find("ex3") != std::string::npos);
        }
    }
}

TEST_CASE("llm extraction judges freeform answers") {
    SyntheticBackend worker("verbose", [](const ChatRequest&) {
        return std::string("After thought, the list should be sorted ascending.");
    });
    SyntheticBackend extractor("extractor", [](const ChatRequest& request) {
        bool sorted = request.messages.back().content.find("sorted ascending") !=
                      std::string::npos;
        return std::string(sorted ? "sorted ascending" : "unknown");
    });
    ScoringOptions options;
    options.mode = JudgeMode::LlmExtract;
    options.extractor = &extractor;
    TokenLedger ledger;
    options.ledger = &ledger;
    EmpiricalScore score =
        empirical_score("p", {{"e1", "how to order?", "Sorted ascending."}}, worker, options);
    CHECK(score.value == Rational(1));
    CHECK(ledger.grand_total() > 0);

    ScoringOptions broken = options;
    broken.extractor = nullptr;
    CHECK_THROWS_AS(empirical_score("p", {{"e1", "q", "a"}}, worker, broken), Error);
}

TEST_CASE("failures keep dataset order and full reasoning") {
    auto dataset = numeric_dataset(5);
    SyntheticBackend worker = cutoff_worker(3);
    EmpiricalScore score = empirical_score("p", dataset, worker);
    auto failures = collect_failures(score, dataset);
    REQUIRE(failures.size() == 2);
    CHECK(failures[0].example_id == "ex3");
    CHECK(failures[1].example_id == "ex4");
    CHECK(failures[0].predicted == "4");
    CHECK(failures[0].gold == "3");
    CHECK(failures[0].reasoning.find("Reasoning...") == 0);

    SyntheticBackend perfect = cutoff_worker(5);
    EmpiricalScore clean = empirical_score("p", dataset, perfect);
    CHECK(collect_failures(clean, dataset).empty());
}

TEST_CASE("datasets load from jsonl with auto ids") {
    std::vector<std::string> lines = {
        R"({"question":"2+2?","answer":"4"})",
        R"({"id":"named","question":"3+3?","answer":6})",
        "",
        R"({"question":"4+4?","answer":"8"})",
    };
    auto dataset = parse_dataset_jsonl(lines);
    REQUIRE(dataset.size() == 3);
    CHECK(dataset[0].id == "1");
    CHECK(dataset[1].id == "named");
    CHECK(dataset[1].gold == "6");
    CHECK(dataset[2].id == "4");

    CHECK_THROWS_AS(parse_dataset_jsonl({R"({"answer":"4"})"}), Error);
    CHECK_THROWS_AS(parse_dataset_jsonl({R"({"question":"q"})"}), Error);
    CHECK_THROWS_AS(parse_dataset_jsonl({R"({"id":"x","question":"q","answer":"1"})",
                                         R"({"id":"x","question":"r","answer":"2"})"}),
                    Error);
    CHECK_THROWS_AS(parse_dataset_jsonl({"not json"}), Error);
    CHECK_THROWS_AS(load_dataset_jsonl("/nonexistent/data.jsonl"), Error);

    auto path = std::filesystem::temp_directory_path() / "apsf-data-test.jsonl";
    {
        std::ofstream out(path);
        out << R"({"question":"2+2?","answer":"4"})" << "\n";
    }
    auto from_file = load_dataset_jsonl(path.string());
    CHECK(from_file.size() == 1);
    std::filesystem::remove(path);
}

TEST_CASE("empty datasets are rejected") {
    SyntheticBackend worker("w", [](const ChatRequest&) { return std::string("x"); });
    CHECK_THROWS_AS(empirical_score("p", {}, worker), Error);
}
