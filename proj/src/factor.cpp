#include "apsf/factor.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <json.hpp>

#include "apsf/error.hpp"

namespace apsf {

std::string trim(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

namespace {

bool valid_factor_name(const std::string& name) {
    if (name.empty()) return false;
    return std::none_of(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace

FactorSchema::FactorSchema(std::vector<FactorSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw Error(ErrorKind::InvalidFactor, "schema needs at least one factor");
    std::unordered_set<std::string> seen;
    for (const auto& spec : specs_) {
        if (!valid_factor_name(spec.name))
            throw Error(ErrorKind::InvalidFactor, "bad factor name '" + spec.name + "'");
        if (trim(spec.role).empty())
            throw Error(ErrorKind::InvalidFactor, "factor '" + spec.name + "' has an empty role");
        if (!seen.insert(spec.name).second)
            throw Error(ErrorKind::DuplicateName, spec.name);
    }
}

const FactorSpec& FactorSchema::at(std::size_t k1) const {
    if (k1 < 1 || k1 > specs_.size())
        throw Error(ErrorKind::IndexOutOfRange,
                    "factor index " + std::to_string(k1) + " of " + std::to_string(specs_.size()));
    return specs_[k1 - 1];
}

std::size_t FactorSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return i + 1;
    return 0;
}

FactorContents::FactorContents(std::vector<std::string> texts) : texts_(std::move(texts)) {
    if (texts_.empty()) throw Error(ErrorKind::InvalidFactor, "contents need at least one block");
    for (const auto& text : texts_)
        if (trim(text).empty())
            throw Error(ErrorKind::InvalidFactor, "factor text empty after trimming");
}

const std::string& FactorContents::at(std::size_t k1) const {
    if (k1 < 1 || k1 > texts_.size())
        throw Error(ErrorKind::IndexOutOfRange,
                    "factor index " + std::to_string(k1) + " of " + std::to_string(texts_.size()));
    return texts_[k1 - 1];
}

FactorizedPrompt::FactorizedPrompt(FactorSchema s, FactorContents c)
    : schema(std::move(s)), contents(std::move(c)) {
    if (schema.size() != contents.size())
        throw Error(ErrorKind::InvalidFactor, "schema/contents length mismatch");
}

std::string assemble(const FactorContents& contents) {
    std::string result;
    std::size_t total = contents.size() - 1;
    for (const auto& text : contents.texts()) total += text.size();
    result.reserve(total);
    for (std::size_t i = 0; i < contents.size(); ++i) {
        if (i > 0) result.push_back('\n');
        result += contents.texts()[i];
    }
    return result;
}

std::vector<std::pair<std::size_t, std::size_t>> block_spans(const FactorContents& contents) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    spans.reserve(contents.size());
    std::size_t pos = 0;
    for (const auto& text : contents.texts()) {
        spans.emplace_back(pos, pos + text.size());
        pos += text.size() + 1; // joiner
    }
    return spans;
}

FactorContents substitute(const FactorContents& contents, std::size_t k1,
                          const std::string& candidate) {
    if (k1 < 1 || k1 > contents.size())
        throw Error(ErrorKind::IndexOutOfRange,
                    "factor index " + std::to_string(k1) + " of " + std::to_string(contents.size()));
    if (trim(candidate).empty()) throw Error(ErrorKind::EmptyCandidate, "candidate trims to empty");
    std::vector<std::string> texts = contents.texts();
    texts[k1 - 1] = candidate;
    return FactorContents(std::move(texts));
}

FactorizedPrompt validate_boundaries(const std::string& template_text,
                                     const std::vector<BoundaryEntry>& boundary_map,
                                     std::vector<std::string>* warnings) {
    if (boundary_map.empty())
        throw Error(ErrorKind::InvalidFactor, "empty boundary map");

    std::unordered_set<std::string> seen;
    for (const auto& entry : boundary_map)
        if (!seen.insert(entry.name).second) throw Error(ErrorKind::DuplicateName, entry.name);

    std::vector<FactorSpec> specs;
    std::vector<std::string> texts;
    std::size_t cursor = 0; // end of the previous claim
    std::string prev_name;
    for (const auto& entry : boundary_map) {
        if (entry.substring.empty())
            throw Error(ErrorKind::SubstringNotFound, entry.name + " (empty boundary)");
        std::size_t pos = template_text.find(entry.substring, cursor);
        if (pos == std::string::npos) {
            // Distinguish "not in the template at all" from "only inside or
            // before an earlier claim".
            if (template_text.find(entry.substring) != std::string::npos)
                throw Error(ErrorKind::OverlappingBoundaries, prev_name + ", " + entry.name);
            throw Error(ErrorKind::SubstringNotFound, entry.name);
        }
        if (warnings && pos > cursor && !trim(template_text.substr(cursor, pos - cursor)).empty())
            warnings->push_back("discarding unclaimed template text before '" + entry.name + "'");
        cursor = pos + entry.substring.size();
        specs.push_back({entry.name, entry.role.empty() ? entry.name : entry.role});
        texts.push_back(entry.substring);
        prev_name = entry.name;
    }
    if (warnings && cursor < template_text.size() &&
        !trim(template_text.substr(cursor)).empty())
        warnings->push_back("discarding unclaimed template text after '" + prev_name + "'");

    return FactorizedPrompt(FactorSchema(std::move(specs)), FactorContents(std::move(texts)));
}

nlohmann::json schema_to_json(const FactorSchema& schema) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& spec : schema.specs()) arr.push_back({{"name", spec.name}, {"role", spec.role}});
    return arr;
}

nlohmann::json contents_to_json(const FactorContents& contents) {
    return nlohmann::json(contents.texts());
}

FactorSchema schema_from_json(const nlohmann::json& j) {
    std::vector<FactorSpec> specs;
    for (const auto& item : j) specs.push_back({item.at("name"), item.at("role")});
    return FactorSchema(std::move(specs));
}

FactorContents contents_from_json(const nlohmann::json& j) {
    return FactorContents(j.get<std::vector<std::string>>());
}

nlohmann::json prompt_to_json(const FactorizedPrompt& prompt) {
    return {{"schema", schema_to_json(prompt.schema)}, {"contents", contents_to_json(prompt.contents)}};
}

FactorizedPrompt prompt_from_json(const nlohmann::json& j) {
    return FactorizedPrompt(schema_from_json(j.at("schema")), contents_from_json(j.at("contents")));
}

} // namespace apsf
