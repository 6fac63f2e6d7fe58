#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace apsf {

// One semantic component of a prompt: a name plus a one-line role.
// Names follow "Factor<k>_<Name>" or are bare identifiers without
// whitespace.
struct FactorSpec {
    std::string name;
    std::string role;
};

// Ordered factor roles. Order is significant and fixed after creation;
// names are pairwise distinct.
class FactorSchema {
public:
    explicit FactorSchema(std::vector<FactorSpec> specs);

    std::size_t size() const { return specs_.size(); }
    const FactorSpec& at(std::size_t k1) const; // 1-based
    const std::vector<FactorSpec>& specs() const { return specs_; }

    // 1-based index of the factor with this exact name, or 0 if absent.
    std::size_t index_of(const std::string& name) const;

private:
    std::vector<FactorSpec> specs_;
};

// Ordered factor texts, aligned index-for-index with a schema of the
// same length. Every text is non-empty after trimming. Immutable value;
// edits go through substitute().
class FactorContents {
public:
    explicit FactorContents(std::vector<std::string> texts);

    std::size_t size() const { return texts_.size(); }
    const std::string& at(std::size_t k1) const; // 1-based
    const std::vector<std::string>& texts() const { return texts_; }

    bool operator==(const FactorContents& other) const { return texts_ == other.texts_; }

private:
    std::vector<std::string> texts_;
};

struct FactorizedPrompt {
    FactorSchema schema;
    FactorContents contents;

    FactorizedPrompt(FactorSchema s, FactorContents c);
};

// Joins factor texts with a single newline between consecutive blocks.
std::string assemble(const FactorContents& contents);
inline std::string assemble(const FactorizedPrompt& prompt) { return assemble(prompt.contents); }

// Half-open [begin, end) spans of each factor block inside assemble()'s
// output. Factor texts may contain newlines themselves, so boundary
// recovery goes through these spans rather than splitting on '\n'.
std::vector<std::pair<std::size_t, std::size_t>> block_spans(const FactorContents& contents);

// Returns a copy with position k (1-based) holding `candidate`; the input
// is untouched. Throws IndexOutOfRange / EmptyCandidate.
FactorContents substitute(const FactorContents& contents, std::size_t k1,
                          const std::string& candidate);

struct BoundaryEntry {
    std::string name;
    std::string substring;
    std::string role; // optional; defaults to the name when empty
};

// Checks that each mapped substring occurs verbatim in the template, in
// map order and without overlaps, and builds the factorized prompt whose
// assembly order follows the map. Template text not claimed by any
// boundary is dropped (reported through `warnings` when given).
FactorizedPrompt validate_boundaries(const std::string& template_text,
                                     const std::vector<BoundaryEntry>& boundary_map,
                                     std::vector<std::string>* warnings = nullptr);

std::string trim(const std::string& text);

nlohmann::json schema_to_json(const FactorSchema& schema);
nlohmann::json contents_to_json(const FactorContents& contents);
FactorSchema schema_from_json(const nlohmann::json& j);
FactorContents contents_from_json(const nlohmann::json& j);

// {"schema":[{"name","role"}...], "contents":[...]} as used by
// checkpoints and reports.
nlohmann::json prompt_to_json(const FactorizedPrompt& prompt);
FactorizedPrompt prompt_from_json(const nlohmann::json& j);

} // namespace apsf
