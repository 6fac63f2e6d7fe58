#include "apsf/architect.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "apsf/error.hpp"
#include "apsf/templates.hpp"

namespace apsf {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool starts_with_ci(const std::string& text, const std::string& prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void log_note(const ArchitectOptions& opts, const std::string& note) {
    if (opts.log) opts.log(note);
}

ChatResponse call(Backend& architect, const std::string& user_content,
                  const ArchitectOptions& opts) {
    ChatRequest req = make_request(Tag::Architect, user_content, opts.params);
    ChatResponse resp = architect.complete(req);
    if (opts.ledger) opts.ledger->record(resp, Tag::Architect, opts.step);
    return resp;
}

std::string render(const std::string& name, const std::map<std::string, std::string>& values,
                   const ArchitectOptions& opts) {
    return render_template(load_template(name, opts.templates_dir), values);
}

std::string percent_text(const Rational& value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value.to_double() * 100.0);
    return buf;
}

// Drops a leading/trailing markdown fence line when present.
std::string strip_code_fences(const std::string& text) {
    std::string t = trim(text);
    if (t.rfind("```", 0) == 0) {
        std::size_t nl = t.find('\n');
        t = nl == std::string::npos ? "" : t.substr(nl + 1);
    }
    if (t.size() >= 3 && t.compare(t.size() - 3, 3, "```") == 0) {
        std::size_t nl = t.find_last_of('\n');
        t = nl == std::string::npos ? "" : t.substr(0, nl);
    }
    return trim(t);
}

nlohmann::json parse_json_payload(const std::string& reply) {
    std::string body = strip_code_fences(reply);
    nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    std::size_t open = body.find('[');
    std::size_t close = body.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close <= open)
        return nlohmann::json::value_t::discarded;
    return nlohmann::json::parse(body.substr(open, close - open + 1), nullptr, false);
}

std::vector<std::string> parse_candidate_array(const std::string& reply) {
    nlohmann::json parsed = parse_json_payload(reply);
    std::vector<std::string> out;
    if (parsed.is_discarded() || !parsed.is_array()) return out;
    for (const nlohmann::json& item : parsed) {
        if (!item.is_string()) continue;
        std::string text = trim(item.get<std::string>());
        if (text.empty()) continue;
        if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(text);
    }
    return out;
}

std::vector<std::vector<std::string>> parse_whole_candidate_array(const std::string& reply,
                                                                  std::size_t k) {
    nlohmann::json parsed = parse_json_payload(reply);
    std::vector<std::vector<std::string>> out;
    if (parsed.is_discarded() || !parsed.is_array()) return out;
    for (const nlohmann::json& item : parsed) {
        if (!item.is_array() || item.size() != k) continue;
        std::vector<std::string> texts;
        for (const nlohmann::json& part : item) {
            if (!part.is_string()) break;
            std::string text = trim(part.get<std::string>());
            if (text.empty()) break;
            texts.push_back(text);
        }
        if (texts.size() != k) continue;
        if (std::find(out.begin(), out.end(), texts) == out.end()) out.push_back(texts);
    }
    return out;
}

std::map<std::string, std::string> context_bindings(const TaskContext& ctx) {
    if (trim(ctx.task_description).empty())
        throw Error(ErrorKind::ConfigError, "task_description is empty");
    return {{"task_description", ctx.task_description},
            {"task_type", ctx.task_type.empty() ? "general" : ctx.task_type},
            {"output_format", ctx.output_format.empty() ? "free text" : ctx.output_format},
            {"constraints", ctx.constraints.empty() ? "none" : ctx.constraints},
            {"example_data", example_block(ctx.exemplars)}};
}

StructureProposal request_structure(const std::string& template_name,
                                    std::map<std::string, std::string> bindings,
                                    Backend& architect, const ArchitectOptions& opts) {
    const std::string rendered = render(template_name, bindings, opts);
    std::string prompt_text = rendered;
    for (int attempt = 0;; ++attempt) {
        ChatResponse resp = call(architect, prompt_text, opts);
        try {
            return parse_structure_reply(resp.text);
        } catch (const Error& e) {
            if (attempt >= opts.structure_retries) throw;
            log_note(opts, std::string("structure reply rejected, retrying: ") + e.what());
            prompt_text = rendered +
                          "\n\nYour previous reply was rejected: " + std::string(e.what()) +
                          "\nReturn exactly the four required sections and nothing else.";
        }
    }
}

struct LabeledLine {
    const char* prefix;
    std::string Diagnosis::* field;
};

} // namespace

std::string ErrorProfile::dominant_label() const {
    std::string best;
    int best_count = -1;
    for (const auto& [label, count] : label_counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best_count < 0 ? "none" : best;
}

std::string example_block(const std::vector<Example>& exemplars) {
    if (exemplars.empty()) return "(no examples provided)";
    std::string out;
    for (const Example& ex : exemplars) {
        if (!out.empty()) out += "\n\n";
        out += "Q: " + ex.query + "\nA: " + ex.gold;
    }
    return out;
}

std::string factor_list_text(const FactorSchema& schema) {
    std::string out;
    for (std::size_t k = 1; k <= schema.size(); ++k) {
        if (!out.empty()) out += "\n";
        out += schema.at(k).name + ": " + schema.at(k).role;
    }
    return out;
}

std::string error_summary_text(const ErrorProfile& profile) {
    if (profile.total == 0) return "No errors observed.";
    std::vector<std::pair<std::string, int>> counts(profile.label_counts.begin(),
                                                    profile.label_counts.end());
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::string out = "Error type counts:";
    for (const auto& [label, count] : counts)
        out += " " + label + "=" + std::to_string(count) + ";";
    out += "\nRepresentative failures:";
    for (const auto& [failure, diagnosis] : profile.representatives) {
        out += "\n- [" + diagnosis.type_label + "] question: " + failure.query +
               " | gold: " + failure.gold + " | predicted: " + failure.predicted;
    }
    return out;
}

StructureProposal parse_structure_reply(const std::string& reply) {
    const std::vector<std::string> lines = split_lines(reply);
    int header_at[4] = {-1, -1, -1, -1};
    for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
        const std::string t = trim(lines[i]);
        for (int s = 0; s < 4; ++s) {
            if (header_at[s] == -1 && starts_with_ci(t, "section " + std::to_string(s + 1)))
                header_at[s] = i;
        }
    }
    for (int s = 0; s < 4; ++s) {
        if (header_at[s] == -1)
            throw Error(ErrorKind::StructureParseError,
                        "Section " + std::to_string(s + 1) + ": header missing");
        if (s > 0 && header_at[s] <= header_at[s - 1])
            throw Error(ErrorKind::StructureParseError,
                        "Section " + std::to_string(s + 1) + ": out of order");
    }

    auto body_lines = [&](int s) {
        int begin = header_at[s] + 1;
        int end = s == 3 ? static_cast<int>(lines.size()) : header_at[s + 1];
        return std::vector<std::string>(lines.begin() + begin, lines.begin() + end);
    };
    auto body_text = [&](int s) {
        std::string out;
        for (const std::string& line : body_lines(s)) {
            if (!out.empty()) out += "\n";
            out += line;
        }
        return trim(out);
    };

    const std::string complexity_note = body_text(0);
    const std::string template_text = body_text(1);
    if (template_text.empty())
        throw Error(ErrorKind::StructureParseError, "Section 2: template is empty");

    std::vector<FactorSpec> specs;
    for (const std::string& raw : body_lines(2)) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw Error(ErrorKind::StructureParseError,
                        "Section 3: expected 'Name: role' but got \"" + line + "\"");
        FactorSpec spec{trim(line.substr(0, colon)), trim(line.substr(colon + 1))};
        if (spec.name.empty() || spec.name.find_first_of(" \t") != std::string::npos)
            throw Error(ErrorKind::StructureParseError,
                        "Section 3: bad factor name \"" + spec.name + "\"");
        if (spec.role.empty())
            throw Error(ErrorKind::StructureParseError,
                        "Section 3: empty role for " + spec.name);
        specs.push_back(spec);
    }
    if (specs.empty())
        throw Error(ErrorKind::StructureParseError, "Section 3: no factors listed");

    std::vector<BoundaryEntry> boundaries;
    for (const std::string& raw : body_lines(3)) {
        const std::string line = trim(raw);
        if (line.empty()) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw Error(ErrorKind::StructureParseError,
                        "Section 4: expected 'Name: \"substring\"' but got \"" + line + "\"");
        const std::string name = trim(line.substr(0, colon));
        const std::string rest = line.substr(colon + 1);
        std::size_t open = rest.find('"');
        std::size_t close = rest.rfind('"');
        if (open == std::string::npos || close <= open)
            throw Error(ErrorKind::StructureParseError,
                        "Section 4: missing quoted substring for " + name);
        const std::string substring = rest.substr(open + 1, close - open - 1);
        if (trim(substring).empty())
            throw Error(ErrorKind::StructureParseError,
                        "Section 4: empty substring for " + name);
        boundaries.push_back({name, substring, ""});
    }
    if (boundaries.size() != specs.size())
        throw Error(ErrorKind::StructureParseError,
                    "Section 4: " + std::to_string(boundaries.size()) + " boundaries for " +
                        std::to_string(specs.size()) + " factors");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (boundaries[i].name != specs[i].name)
            throw Error(ErrorKind::StructureParseError,
                        "Section 4: name \"" + boundaries[i].name +
                            "\" does not match Section 3 \"" + specs[i].name + "\"");
        boundaries[i].role = specs[i].role;
    }

    std::vector<std::string> warnings;
    FactorizedPrompt prompt = validate_boundaries(template_text, boundaries, &warnings);
    return StructureProposal{complexity_note, template_text, std::move(prompt),
                             std::move(warnings)};
}

StructureProposal discover_structure(const TaskContext& ctx, Backend& architect,
                                     const ArchitectOptions& opts) {
    return request_structure("structure_from_scratch", context_bindings(ctx), architect, opts);
}

StructureProposal analyze_initial_prompt(const std::string& p_init, const TaskContext& ctx,
                                         Backend& architect, const ArchitectOptions& opts) {
    const std::string seed = trim(p_init);
    if (seed.empty()) throw Error(ErrorKind::ConfigError, "initial prompt is empty");
    std::map<std::string, std::string> bindings = context_bindings(ctx);
    bindings["initial_prompt"] = p_init;
    StructureProposal proposal =
        request_structure("structure_from_initial", bindings, architect, opts);
    if (lower(proposal.template_text).find(lower(seed)) == std::string::npos) {
        proposal.warnings.push_back("initial prompt not preserved verbatim in template");
        log_note(opts, proposal.warnings.back());
    }
    return proposal;
}

CandidateSet propose_edits(const FactorizedPrompt& prompt, std::size_t k,
                           const std::string& error_summary, const EmpiricalScore& score,
                           int n, const std::string& dataset_name, const std::string& task_type,
                           Backend& architect, const ArchitectOptions& opts) {
    if (k < 1 || k > prompt.schema.size())
        throw Error(ErrorKind::IndexOutOfRange, "factor " + std::to_string(k));
    if (n < 1) throw Error(ErrorKind::ConfigError, "candidate count must be at least 1");
    const std::map<std::string, std::string> bindings = {
        {"dataset_name", dataset_name},
        {"task_type", task_type},
        {"accuracy", percent_text(score.value)},
        {"correct_count", std::to_string(score.correct_count)},
        {"total_samples", std::to_string(score.total)},
        {"current_prompt", assemble(prompt)},
        {"current_factor_desc", prompt.contents.at(k)},
        {"target_factor", prompt.schema.at(k).name},
        {"error_summary", error_summary},
        {"num_candidates", std::to_string(n)},
    };
    const std::string rendered = render("factor_edit", bindings, opts);
    std::vector<std::string> candidates = parse_candidate_array(call(architect, rendered, opts).text);
    if (static_cast<int>(candidates.size()) < n) {
        nlohmann::json seen = nlohmann::json::array();
        for (const std::string& c : candidates) seen.push_back(c);
        const std::string followup =
            rendered + "\n\nOnly " + std::to_string(candidates.size()) +
            " valid distinct versions were received so far: " + seen.dump() + "\nProvide " +
            std::to_string(n - static_cast<int>(candidates.size())) +
            " additional distinct versions in the same JSON array format.";
        for (const std::string& extra : parse_candidate_array(call(architect, followup, opts).text)) {
            if (std::find(candidates.begin(), candidates.end(), extra) == candidates.end())
                candidates.push_back(extra);
        }
    }
    if (candidates.empty())
        throw Error(ErrorKind::CandidateParseError,
                    "no candidates parsed for factor " + prompt.schema.at(k).name);
    if (static_cast<int>(candidates.size()) > n) candidates.resize(n);
    return {k, candidates};
}

std::vector<std::vector<std::string>> propose_whole_edits(
    const FactorizedPrompt& prompt, const std::string& error_summary,
    const EmpiricalScore& score, int n, const std::string& dataset_name,
    const std::string& task_type, Backend& architect, const ArchitectOptions& opts) {
    if (n < 1) throw Error(ErrorKind::ConfigError, "candidate count must be at least 1");
    const std::size_t k = prompt.schema.size();
    std::string factor_lines;
    for (std::size_t i = 1; i <= k; ++i) {
        if (!factor_lines.empty()) factor_lines += "\n";
        factor_lines += std::to_string(i) + ". " + prompt.schema.at(i).name + " (" +
                        prompt.schema.at(i).role + "): \"" + prompt.contents.at(i) + "\"";
    }
    const std::map<std::string, std::string> bindings = {
        {"dataset_name", dataset_name},
        {"task_type", task_type},
        {"accuracy", percent_text(score.value)},
        {"correct_count", std::to_string(score.correct_count)},
        {"total_samples", std::to_string(score.total)},
        {"current_prompt", assemble(prompt)},
        {"factor_list", factor_lines},
        {"error_summary", error_summary},
        {"num_candidates", std::to_string(n)},
        {"num_factors", std::to_string(k)},
    };
    const std::string rendered = render("whole_prompt_edit", bindings, opts);
    std::vector<std::vector<std::string>> candidates =
        parse_whole_candidate_array(call(architect, rendered, opts).text, k);
    if (static_cast<int>(candidates.size()) < n) {
        const std::string followup =
            rendered + "\n\nOnly " + std::to_string(candidates.size()) +
            " valid versions were received so far. Provide " +
            std::to_string(n - static_cast<int>(candidates.size())) +
            " additional distinct versions in the same JSON array-of-arrays format.";
        for (auto& extra : parse_whole_candidate_array(call(architect, followup, opts).text, k)) {
            if (std::find(candidates.begin(), candidates.end(), extra) == candidates.end())
                candidates.push_back(extra);
        }
    }
    if (candidates.empty())
        throw Error(ErrorKind::CandidateParseError, "no whole-prompt candidates parsed");
    if (static_cast<int>(candidates.size()) > n) candidates.resize(n);
    return candidates;
}

bool parse_diagnosis_reply(const std::string& reply, Diagnosis& out,
                           std::vector<std::string>* warnings) {
    static const LabeledLine kLabels[] = {
        {"Error Essence:", &Diagnosis::essence},
        {"Error Type:", &Diagnosis::type_label},
        {"Error Mechanism:", &Diagnosis::mechanism},
        {"Error Impact:", &Diagnosis::impact},
        {"Improvement Suggestion:", &Diagnosis::suggestion},
        {"Improvement Direction:", &Diagnosis::suggestion},
    };
    out = Diagnosis{};
    std::string Diagnosis::* active = nullptr;
    for (const std::string& raw : split_lines(reply)) {
        const std::string line = trim(raw);
        bool matched = false;
        for (const LabeledLine& label : kLabels) {
            if (starts_with_ci(line, label.prefix)) {
                active = label.field;
                out.*active = trim(line.substr(std::string(label.prefix).size()));
                matched = true;
                break;
            }
        }
        if (!matched && active && !line.empty()) {
            std::string& value = out.*active;
            if (!value.empty()) value += "\n";
            value += line;
        }
    }
    auto strip_brackets = [](std::string& value) {
        if (value.size() >= 2 && value.front() == '[' && value.back() == ']')
            value = trim(value.substr(1, value.size() - 2));
    };
    strip_brackets(out.essence);
    strip_brackets(out.type_label);
    strip_brackets(out.mechanism);
    strip_brackets(out.impact);
    strip_brackets(out.suggestion);
    if (warnings) {
        if (out.essence.empty()) warnings->push_back("diagnosis missing Error Essence");
        if (out.mechanism.empty()) warnings->push_back("diagnosis missing Error Mechanism");
        if (out.impact.empty()) warnings->push_back("diagnosis missing Error Impact");
        if (out.suggestion.empty()) warnings->push_back("diagnosis missing Improvement Suggestion");
    }
    return !out.type_label.empty();
}

Diagnosis diagnose_failure(const FailureCase& f, Backend& architect,
                           const ArchitectOptions& opts) {
    const std::map<std::string, std::string> bindings = {
        {"question", f.query},
        {"correct_answer", f.gold},
        {"predicted_answer", f.predicted.empty() ? "(no answer extracted)" : f.predicted},
        {"reasoning", f.reasoning},
    };
    const std::string rendered = render("error_diagnosis", bindings, opts);
    Diagnosis diagnosis;
    std::vector<std::string> warnings;
    if (!parse_diagnosis_reply(call(architect, rendered, opts).text, diagnosis, &warnings)) {
        log_note(opts, "diagnosis missing Error Type for example " + f.example_id + ", retrying");
        const std::string followup =
            rendered + "\n\nYour previous reply omitted the Error Type line. "
                       "Reply again using all five labeled lines.";
        warnings.clear();
        if (!parse_diagnosis_reply(call(architect, followup, opts).text, diagnosis, &warnings)) {
            diagnosis.type_label = "unclassified";
            log_note(opts, "diagnosis defaulted to unclassified for example " + f.example_id);
        }
    }
    for (const std::string& warning : warnings)
        log_note(opts, warning + " for example " + f.example_id);
    return diagnosis;
}

ErrorProfile build_error_profile(const std::vector<std::pair<FailureCase, Diagnosis>>& diagnoses,
                                 int r) {
    if (r < 1) throw Error(ErrorKind::ConfigError, "representative count must be at least 1");
    ErrorProfile profile;
    profile.total = static_cast<int>(diagnoses.size());
    std::vector<std::string> label_order; // first-appearance order
    for (const auto& [failure, diagnosis] : diagnoses) {
        std::string label = lower(trim(diagnosis.type_label));
        if (label.empty()) label = "unclassified";
        if (profile.label_counts[label]++ == 0) label_order.push_back(label);
    }
    std::stable_sort(label_order.begin(), label_order.end(),
                     [&](const std::string& a, const std::string& b) {
                         return profile.label_counts[a] > profile.label_counts[b];
                     });
    std::vector<std::size_t> chosen;
    for (const std::string& label : label_order) {
        if (static_cast<int>(chosen.size()) >= r) break;
        for (std::size_t i = 0; i < diagnoses.size(); ++i) {
            std::string li = lower(trim(diagnoses[i].second.type_label));
            if (li.empty()) li = "unclassified";
            if (li == label) {
                chosen.push_back(i);
                break;
            }
        }
    }
    for (std::size_t i = 0; i < diagnoses.size() && static_cast<int>(chosen.size()) < r; ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
    for (std::size_t i : chosen) profile.representatives.push_back(diagnoses[i]);
    return profile;
}

std::size_t select_factor(const FactorSchema& schema, const ErrorProfile& profile,
                          const SelectionHistory& history, Backend& architect,
                          const ArchitectOptions& opts) {
    const std::size_t k = schema.size();
    if (k == 1) return 1;

    const std::size_t excluded = history.factor_count() == k ? history.excluded_factor() : 0;
    std::vector<std::size_t> offered;
    for (std::size_t i = 1; i <= k; ++i)
        if (i != excluded) offered.push_back(i);

    std::string factor_lines;
    for (std::size_t i : offered) {
        if (!factor_lines.empty()) factor_lines += "\n";
        factor_lines += schema.at(i).name + ": " + schema.at(i).role;
    }
    auto names_of = [&](const std::vector<std::size_t>& indices) {
        std::string out;
        for (std::size_t i : indices) {
            if (i == excluded) continue;
            if (!out.empty()) out += ", ";
            out += schema.at(i).name;
        }
        return out.empty() ? "(none)" : out;
    };
    std::string samples;
    for (const auto& [failure, diagnosis] : profile.representatives) {
        if (!samples.empty()) samples += "\n";
        samples += "- [" + diagnosis.type_label + "] question: " + failure.query +
                   " | gold: " + failure.gold + " | predicted: " + failure.predicted;
    }
    if (samples.empty()) samples = "(none)";
    const std::map<std::string, std::string> bindings = {
        {"factor_list", factor_lines},
        {"error_type", profile.dominant_label()},
        {"num_errors", std::to_string(profile.total)},
        {"error_samples", samples},
        {"overexplored_factors",
         history.factor_count() == k ? names_of(history.overexplored()) : "(none)"},
        {"underexplored_factors",
         history.factor_count() == k ? names_of(history.underexplored()) : "(none)"},
    };
    const std::string rendered = render("factor_selection", bindings, opts);

    std::string prompt_text = rendered;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string reply = trim(call(architect, prompt_text, opts).text);
        std::size_t index = schema.index_of(reply);
        if (index != 0 && index != excluded) return index;
        log_note(opts, "factor selection reply \"" + reply + "\" did not match, " +
                           (attempt == 0 ? "retrying" : "falling back"));
        prompt_text = rendered + "\n\nYour previous reply \"" + reply +
                      "\" did not exactly match a factor name. Output ONLY one factor name "
                      "from the list, with no extra text.";
    }

    std::size_t fallback = offered.front();
    for (std::size_t i : offered) {
        const int last = history.factor_count() == k ? history.stats(i).last_selected_step
                                                     : -1;
        const int best = history.factor_count() == k ? history.stats(fallback).last_selected_step
                                                     : -1;
        if (last < best) fallback = i;
    }
    log_note(opts, "factor selection fell back to " + schema.at(fallback).name);
    return fallback;
}

} // namespace apsf
