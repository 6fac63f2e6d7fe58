#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "apsf/factor.hpp"
#include "apsf/gateway.hpp"
#include "apsf/history.hpp"
#include "apsf/scoring.hpp"

namespace apsf {

struct TaskContext {
    std::string task_description;
    std::string task_type;
    std::string output_format;
    std::string constraints;
    std::vector<Example> exemplars;
};

struct StructureProposal {
    std::string complexity_note;
    std::string template_text;
    FactorizedPrompt prompt;
    std::vector<std::string> warnings;
};

struct CandidateSet {
    std::size_t factor_index = 0;
    std::vector<std::string> candidates; // distinct after trimming, 1..N
};

struct Diagnosis {
    std::string essence;
    std::string type_label; // never empty; degrades to "unclassified"
    std::string mechanism;
    std::string impact;
    std::string suggestion;
};

struct ErrorProfile {
    std::map<std::string, int> label_counts; // trimmed, lowercased labels
    std::vector<std::pair<FailureCase, Diagnosis>> representatives;
    int total = 0;

    // Most frequent label; ties break lexicographically. "none" when empty.
    std::string dominant_label() const;
};

struct ArchitectOptions {
    std::string templates_dir; // override directory; builtins when empty
    DecodingParams params = default_params(Tag::Architect);
    TokenLedger* ledger = nullptr;
    int step = 0;
    int structure_retries = 3;
    std::function<void(const std::string&)> log;
};

// Formatting helpers shared by the meta-prompt bindings.
std::string example_block(const std::vector<Example>& exemplars);
std::string factor_list_text(const FactorSchema& schema);
std::string error_summary_text(const ErrorProfile& profile);

// Parses a four-section structure reply: complexity note, instruction
// template, "Name: role" lines, and quoted boundary substrings. Section
// shape problems raise StructureParseError; boundary problems keep
// their own kinds (SubstringNotFound, OverlappingBoundaries, ...).
StructureProposal parse_structure_reply(const std::string& reply);

// Parses a reply into the five labeled diagnosis fields. Returns false
// when the Error Type line is missing or empty.
bool parse_diagnosis_reply(const std::string& reply, Diagnosis& out,
                           std::vector<std::string>* warnings = nullptr);

StructureProposal discover_structure(const TaskContext& ctx, Backend& architect,
                                     const ArchitectOptions& opts = {});

StructureProposal analyze_initial_prompt(const std::string& p_init, const TaskContext& ctx,
                                         Backend& architect, const ArchitectOptions& opts = {});

CandidateSet propose_edits(const FactorizedPrompt& prompt, std::size_t k,
                           const std::string& error_summary, const EmpiricalScore& score,
                           int n, const std::string& dataset_name, const std::string& task_type,
                           Backend& architect, const ArchitectOptions& opts = {});

// Unfrozen variant: each candidate rewrites all K factor texts at once.
std::vector<std::vector<std::string>> propose_whole_edits(
    const FactorizedPrompt& prompt, const std::string& error_summary,
    const EmpiricalScore& score, int n, const std::string& dataset_name,
    const std::string& task_type, Backend& architect, const ArchitectOptions& opts = {});

Diagnosis diagnose_failure(const FailureCase& f, Backend& architect,
                           const ArchitectOptions& opts = {});

ErrorProfile build_error_profile(const std::vector<std::pair<FailureCase, Diagnosis>>& diagnoses,
                                 int r = 3);

std::size_t select_factor(const FactorSchema& schema, const ErrorProfile& profile,
                          const SelectionHistory& history, Backend& architect,
                          const ArchitectOptions& opts = {});

} // namespace apsf
