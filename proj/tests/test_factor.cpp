#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apsf/error.hpp"
#include "apsf/factor.hpp"
#include "apsf/rng.hpp"

#include <functional>
#include <string>
#include <vector>

using namespace apsf;

namespace {

FactorSchema make_schema(std::size_t k) {
    std::vector<FactorSpec> specs;
    for (std::size_t i = 1; i <= k; ++i)
        specs.push_back({"Factor" + std::to_string(i) + "_F" + std::to_string(i), "role " + std::to_string(i)});
    return FactorSchema(specs);
}

bool throws_kind(ErrorKind kind, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind() == kind;
    }
    return false;
}

} // namespace

TEST_CASE("schema validates names and roles") {
    CHECK_THROWS_AS(FactorSchema(std::vector<FactorSpec>{}), Error);
    CHECK(throws_kind(ErrorKind::DuplicateName,
                      [] { FactorSchema(std::vector<FactorSpec>{{"A", "r"}, {"A", "r"}}); }));
    CHECK(throws_kind(ErrorKind::InvalidFactor,
                      [] { FactorSchema(std::vector<FactorSpec>{{"has space", "r"}}); }));
    CHECK(throws_kind(ErrorKind::InvalidFactor, [] { FactorSchema(std::vector<FactorSpec>{{"A", "  "}}); }));

    FactorSchema schema = make_schema(3);
    CHECK(schema.size() == 3);
    CHECK(schema.at(1).name == "Factor1_F1");
    CHECK(schema.index_of("Factor2_F2") == 2);
    CHECK(schema.index_of("missing") == 0);
    CHECK(throws_kind(ErrorKind::IndexOutOfRange, [&] { schema.at(4); }));
    CHECK(throws_kind(ErrorKind::IndexOutOfRange, [&] { schema.at(0); }));
}

TEST_CASE("contents reject empty blocks") {
    CHECK_THROWS_AS(FactorContents(std::vector<std::string>{}), Error);
    CHECK(throws_kind(ErrorKind::InvalidFactor, [] { FactorContents(std::vector<std::string>{"A", " \n "}); }));
}

TEST_CASE("prompt requires matching lengths") {
    CHECK(throws_kind(ErrorKind::InvalidFactor, [] {
        FactorizedPrompt(FactorSchema(std::vector<FactorSpec>{{"A", "r"}}), FactorContents(std::vector<std::string>{"x", "y"}));
    }));
}

TEST_CASE("assemble joins blocks with single newlines") {
    CHECK(assemble(FactorContents(std::vector<std::string>{"Let's think step by step"})) == "Let's think step by step");
    CHECK(assemble(FactorContents(std::vector<std::string>{"A", "B", "C"})) == "A\nB\nC");
}

TEST_CASE("assemble keeps multi-sentence factor texts intact") {
    FactorContents contents({
        "Let's think step by step",
        "carefully analyzing the problem's components and their relationships",
        "performing each calculation with clear intermediate steps",
        "logically combining all results to arrive at the final answer",
    });
    std::string text = assemble(contents);
    auto first = text.find("Let's think step by step");
    auto second = text.find("carefully analyzing the problem's components");
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    CHECK(first < second);
    CHECK(text.find('\n', first) < second);
}

TEST_CASE("block_spans cover assemble output exactly") {
    FactorContents contents({"one\ntwo", "three", "f o u r"});
    std::string text = assemble(contents);
    auto spans = block_spans(contents);
    REQUIRE(spans.size() == contents.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        auto [begin, end] = spans[i];
        CHECK(text.substr(begin, end - begin) == contents.texts()[i]);
    }
    CHECK(spans.back().second == text.size());
}

TEST_CASE("substitute replaces one block and keeps value semantics") {
    FactorContents contents({"A", "B"});
    FactorContents edited = substitute(contents, 2, "B'");
    CHECK(edited.texts() == std::vector<std::string>{"A", "B'"});
    CHECK(contents.texts() == std::vector<std::string>{"A", "B"});

    CHECK(substitute(contents, 1, "A") == contents);
    CHECK(assemble(substitute(FactorContents(std::vector<std::string>{"A", "B", "C"}), 3, "C2")) == "A\nB\nC2");

    CHECK(throws_kind(ErrorKind::IndexOutOfRange, [&] { substitute(contents, 3, "x"); }));
    CHECK(throws_kind(ErrorKind::EmptyCandidate, [&] { substitute(contents, 1, " \t"); }));
}

TEST_CASE("substitution diffs stay confined to the edited block") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t k = 2 + rng.next_below(4);
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < k; ++i) {
            std::string t;
            std::size_t len = 1 + rng.next_below(8);
            for (std::size_t j = 0; j < len; ++j)
                t.push_back(static_cast<char>('a' + rng.next_below(26)));
            texts.push_back(t);
        }
        FactorContents base(texts);
        std::size_t target = 1 + rng.next_below(k);
        FactorContents edited = substitute(base, target, "EDIT" + std::to_string(trial));

        auto base_spans = block_spans(base);
        auto edit_spans = block_spans(edited);
        std::string base_text = assemble(base);
        std::string edit_text = assemble(edited);
        for (std::size_t i = 0; i < k; ++i) {
            std::string before = base_text.substr(base_spans[i].first,
                                                  base_spans[i].second - base_spans[i].first);
            std::string after = edit_text.substr(edit_spans[i].first,
                                                 edit_spans[i].second - edit_spans[i].first);
            if (i + 1 == target)
                CHECK(after == "EDIT" + std::to_string(trial));
            else
                CHECK(before == after);
        }
    }
}

TEST_CASE("newline-free contents split back out of the assembly") {
    FactorContents contents({"alpha", "beta", "gamma"});
    std::string text = assemble(contents);
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = text.find('\n', start)) != std::string::npos; start = pos + 1)
        parts.push_back(text.substr(start, pos - start));
    parts.push_back(text.substr(start));
    CHECK(parts == contents.texts());
}

TEST_CASE("validate_boundaries accepts in-order verbatim claims") {
    std::vector<std::string> warnings;
    FactorizedPrompt p = validate_boundaries("A B", {{"F1", "A", ""}, {"F2", "B", ""}}, &warnings);
    CHECK(p.schema.size() == 2);
    CHECK(p.contents.texts() == std::vector<std::string>{"A", "B"});
    CHECK(warnings.empty());
}

TEST_CASE("validate_boundaries rejects overlapping claims") {
    CHECK(throws_kind(ErrorKind::OverlappingBoundaries, [] {
        validate_boundaries("A B", {{"F1", "A B", ""}, {"F2", "B", ""}});
    }));
}

TEST_CASE("validate_boundaries rejects missing substrings") {
    CHECK(throws_kind(ErrorKind::SubstringNotFound, [] {
        validate_boundaries("X", {{"F1", "Y", ""}});
    }));
}

TEST_CASE("validate_boundaries rejects duplicate names") {
    CHECK(throws_kind(ErrorKind::DuplicateName, [] {
        validate_boundaries("A B", {{"F1", "A", ""}, {"F1", "B", ""}});
    }));
}

TEST_CASE("validate_boundaries warns about discarded interstitial text") {
    std::vector<std::string> warnings;
    validate_boundaries("A filler B trailer", {{"F1", "A", ""}, {"F2", "B", ""}}, &warnings);
    CHECK(warnings.size() == 2);
}

TEST_CASE("validated contents assemble to a subsequence of the template") {
    std::string tpl = "First, read the question. Then compute. Finally answer.";
    FactorizedPrompt p = validate_boundaries(
        tpl, {{"F1", "read the question", ""}, {"F2", "Finally answer", ""}});
    std::size_t cursor = 0;
    for (const auto& text : p.contents.texts()) {
        cursor = tpl.find(text, cursor);
        REQUIRE(cursor != std::string::npos);
        cursor += text.size();
    }
}

TEST_CASE("boundary roles default to the factor name") {
    FactorizedPrompt p = validate_boundaries("A B", {{"F1", "A", ""}, {"F2", "B", "does B"}});
    CHECK(p.schema.at(1).role == "F1");
    CHECK(p.schema.at(2).role == "does B");
}

TEST_CASE("schema and contents round-trip through json") {
    FactorSchema schema = make_schema(3);
    FactorContents contents({"one", "two", "three"});
    FactorizedPrompt prompt(schema, contents);

    nlohmann::json j = prompt_to_json(prompt);
    REQUIRE(j.contains("schema"));
    REQUIRE(j.contains("contents"));
    FactorizedPrompt back = prompt_from_json(j);
    CHECK(back.contents == contents);
    CHECK(back.schema.size() == schema.size());
    for (std::size_t i = 1; i <= schema.size(); ++i) {
        CHECK(back.schema.at(i).name == schema.at(i).name);
        CHECK(back.schema.at(i).role == schema.at(i).role);
    }
}
