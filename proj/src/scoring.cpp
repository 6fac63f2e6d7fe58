#include "apsf/scoring.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <unordered_set>

#include "apsf/factor.hpp"
#include "apsf/templates.hpp"

namespace apsf {

const char* to_string(JudgeMode mode) {
    switch (mode) {
    case JudgeMode::NumericExact: return "numeric-exact";
    case JudgeMode::ChoiceLetter: return "choice-letter";
    case JudgeMode::LlmExtract: return "llm-extract";
    }
    return "unknown";
}

JudgeMode judge_mode_from_string(const std::string& name) {
    if (name == "numeric-exact") return JudgeMode::NumericExact;
    if (name == "choice-letter") return JudgeMode::ChoiceLetter;
    if (name == "llm-extract") return JudgeMode::LlmExtract;
    throw Error(ErrorKind::UnknownMode, "judge mode '" + name + "'");
}

std::string normalize_numeric(const std::string& token) {
    std::string out;
    out.reserve(token.size());
    for (char c : token) {
        if (c == ',' || c == '$' || std::isspace(static_cast<unsigned char>(c))) continue;
        out.push_back(c);
    }
    while (!out.empty() && out.back() != '.' && !std::isdigit(static_cast<unsigned char>(out.back())))
        out.pop_back();
    if (out.find('.') != std::string::npos) {
        while (!out.empty() && out.back() == '0') out.pop_back();
    }
    if (!out.empty() && out.back() == '.') out.pop_back();
    if (out == "-0") out = "0";
    return out;
}

namespace {

const std::regex& number_pattern() {
    static const std::regex re(R"(-?\s*\$?\d[\d,]*(?:\.\d*)?)");
    return re;
}

std::optional<std::string> last_match(const std::string& text, const std::regex& re,
                                      int group) {
    std::optional<std::string> found;
    for (std::sregex_iterator it(text.begin(), text.end(), re), end; it != end; ++it)
        found = (*it)[group].str();
    return found;
}

} // namespace

std::optional<std::string> extract_numeric_answer(const std::string& raw) {
    static const std::regex answer_re(R"([Aa]nswer\s*(?:is|:)\s*(-?\s*\$?\d[\d,]*(?:\.\d*)?))");
    static const std::regex hash_re(R"(####\s*(-?\s*\$?\d[\d,]*(?:\.\d*)?))");
    if (auto m = last_match(raw, answer_re, 1)) return normalize_numeric(*m);
    if (auto m = last_match(raw, hash_re, 1)) return normalize_numeric(*m);
    if (auto m = last_match(raw, number_pattern(), 0)) return normalize_numeric(*m);
    return std::nullopt;
}

std::optional<std::string> extract_choice_letter(const std::string& raw) {
    for (std::size_t i = raw.size(); i-- > 0;) {
        char c = raw[i];
        if (!((c >= 'A' && c <= 'E') || (c >= 'a' && c <= 'e'))) continue;
        bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
        bool right_ok = i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
        if (left_ok && right_ok)
            return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return std::nullopt;
}

std::string normalize_freeform(const std::string& text) {
    std::string trimmed = trim(text);
    std::string out;
    out.reserve(trimmed.size());
    bool in_space = false;
    for (unsigned char c : trimmed) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

Verdict judge(const std::string& raw, const std::string& gold, JudgeMode mode,
              const std::string& example_id) {
    if (trim(gold).empty()) throw Error(ErrorKind::DatasetError, "empty gold answer");
    Verdict verdict;
    verdict.example_id = example_id;
    verdict.raw_output = raw;
    switch (mode) {
    case JudgeMode::NumericExact: {
        verdict.extracted = extract_numeric_answer(raw);
        std::string want = normalize_numeric(trim(gold));
        verdict.correct = verdict.extracted.has_value() && *verdict.extracted == want;
        break;
    }
    case JudgeMode::ChoiceLetter: {
        verdict.extracted = extract_choice_letter(raw);
        std::string want = extract_choice_letter(gold).value_or(normalize_freeform(gold));
        verdict.correct = verdict.extracted.has_value() && *verdict.extracted == want;
        break;
    }
    case JudgeMode::LlmExtract:
        throw Error(ErrorKind::UnknownMode,
                    "llm-extract judging needs a backend; score through empirical_score");
    }
    return verdict;
}

namespace {

constexpr const char* kExtractionPrompt =
    "Extract the final answer from the response below. Reply with the answer only, no "
    "explanation.\n\nResponse:\n{response}";

struct JudgeOutcome {
    Verdict verdict;
    std::optional<ChatResponse> extractor_response;
};

JudgeOutcome judge_one(const Example& example, const ChatResponse& worker_response,
                       const ScoringOptions& options) {
    JudgeOutcome outcome;
    if (options.mode != JudgeMode::LlmExtract) {
        outcome.verdict = judge(worker_response.text, example.gold, options.mode, example.id);
        return outcome;
    }
    if (!options.extractor)
        throw Error(ErrorKind::ConfigError, "llm-extract judging needs an extractor backend");
    std::string content =
        render_template(kExtractionPrompt, {{"response", worker_response.text}});
    ChatRequest request = make_request(Tag::Worker, content, default_params(Tag::Worker));
    request.stop.clear();
    ChatResponse extraction = options.extractor->complete(request);
    outcome.extractor_response = extraction;

    Verdict verdict;
    verdict.example_id = example.id;
    verdict.raw_output = worker_response.text;
    verdict.extracted = normalize_freeform(extraction.text);
    verdict.correct = *verdict.extracted == normalize_freeform(example.gold);
    outcome.verdict = std::move(verdict);
    return outcome;
}

EmpiricalScore finalize(std::vector<Verdict> verdicts) {
    EmpiricalScore score;
    score.total = static_cast<std::int64_t>(verdicts.size());
    for (const auto& verdict : verdicts)
        if (verdict.correct) ++score.correct_count;
    score.value = Rational(score.correct_count, score.total);
    score.verdicts = std::move(verdicts);
    return score;
}

ChatRequest compose_request(const std::string& prompt_text, const Example& example,
                            const ScoringOptions& options) {
    std::string content = render_template(
        options.composition, {{"prompt", prompt_text}, {"question", example.query}});
    return make_request(Tag::Worker, content, options.params);
}

} // namespace

EmpiricalScore empirical_score_serial(const std::string& prompt_text,
                                      const std::vector<Example>& dataset, Backend& worker,
                                      const ScoringOptions& options) {
    if (dataset.empty()) throw Error(ErrorKind::DatasetError, "empty dataset");
    std::vector<Verdict> verdicts;
    verdicts.reserve(dataset.size());
    for (const auto& example : dataset) {
        ChatRequest request = compose_request(prompt_text, example, options);
        ChatResponse response;
        try {
            response = worker.complete(request);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::BackendFailure, example.id + ": " + e.what());
        }
        JudgeOutcome outcome = judge_one(example, response, options);
        if (options.ledger) {
            options.ledger->record(response, Tag::Worker, options.step);
            if (outcome.extractor_response)
                options.ledger->record(*outcome.extractor_response, Tag::Worker, options.step);
        }
        verdicts.push_back(std::move(outcome.verdict));
    }
    return finalize(std::move(verdicts));
}

EmpiricalScore empirical_score(const std::string& prompt_text,
                               const std::vector<Example>& dataset, Backend& worker,
                               const ScoringOptions& options) {
    if (dataset.empty()) throw Error(ErrorKind::DatasetError, "empty dataset");
    bool extractor_safe = options.mode != JudgeMode::LlmExtract ||
                          (options.extractor && options.extractor->concurrent_safe());
    bool parallel = options.parallel && worker.concurrent_safe() && extractor_safe;
    if (!parallel) return empirical_score_serial(prompt_text, dataset, worker, options);

    const std::size_t n = dataset.size();
    std::vector<Verdict> verdicts(n);
    std::vector<ChatResponse> responses(n);
    std::vector<std::optional<ChatResponse>> extractions(n);
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            ChatRequest request = compose_request(prompt_text, dataset[i], options);
            responses[i] = worker.complete(request);
            JudgeOutcome outcome = judge_one(dataset[i], responses[i], options);
            verdicts[i] = std::move(outcome.verdict);
            extractions[i] = std::move(outcome.extractor_response);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!errors[i].empty())
            throw Error(ErrorKind::BackendFailure, dataset[i].id + ": " + errors[i]);

    if (options.ledger) {
        for (std::size_t i = 0; i < n; ++i) {
            options.ledger->record(responses[i], Tag::Worker, options.step);
            if (extractions[i])
                options.ledger->record(*extractions[i], Tag::Worker, options.step);
        }
    }
    return finalize(std::move(verdicts));
}

std::vector<FailureCase> collect_failures(const EmpiricalScore& score,
                                          const std::vector<Example>& dataset) {
    if (score.verdicts.size() != dataset.size())
        throw Error(ErrorKind::DatasetError, "score/dataset size mismatch");
    std::vector<FailureCase> failures;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Verdict& verdict = score.verdicts[i];
        if (verdict.correct) continue;
        FailureCase failure;
        failure.example_id = dataset[i].id;
        failure.query = dataset[i].query;
        failure.gold = dataset[i].gold;
        failure.predicted = verdict.extracted.value_or("");
        failure.reasoning = verdict.raw_output;
        failures.push_back(std::move(failure));
    }
    return failures;
}

std::vector<Example> parse_dataset_jsonl(const std::vector<std::string>& lines,
                                         const std::string& name) {
    std::vector<Example> dataset;
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        std::string where = name + " line " + std::to_string(i + 1);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::DatasetError, where + ": " + e.what());
        }
        Example example;
        if (j.contains("id"))
            example.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        if (example.id.empty()) example.id = std::to_string(i + 1);
        if (!j.contains("question") || !j["question"].is_string() ||
            trim(j["question"].get<std::string>()).empty())
            throw Error(ErrorKind::DatasetError, where + ": missing question");
        example.query = j["question"].get<std::string>();
        if (!j.contains("answer"))
            throw Error(ErrorKind::DatasetError, where + ": missing answer");
        example.gold = j["answer"].is_string() ? j["answer"].get<std::string>()
                                               : j["answer"].dump();
        if (!ids.insert(example.id).second)
            throw Error(ErrorKind::DatasetError, where + ": duplicate id " + example.id);
        dataset.push_back(std::move(example));
    }
    return dataset;
}

std::vector<Example> load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::DatasetError, "cannot open dataset " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return parse_dataset_jsonl(lines, path);
}

} // namespace apsf
