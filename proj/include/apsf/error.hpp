#pragma once

#include <stdexcept>
#include <string>

namespace apsf {

enum class ErrorKind {
    IndexOutOfRange,
    EmptyCandidate,
    SubstringNotFound,
    OverlappingBoundaries,
    DuplicateName,
    InvalidFactor,
    UnknownMode,
    BackendFailure,
    EndpointError,
    FixtureMiss,
    FixtureLeftover,
    StructureParseError,
    CandidateParseError,
    MissingProfile,
    CorruptCheckpoint,
    TooSmall,
    TooLarge,
    SpecError,
    SpecMismatch,
    TemplateError,
    DatasetError,
    ConfigError,
};

const char* to_string(ErrorKind kind);

// Single exception type for the whole library; kind() distinguishes the
// failure classes the callers branch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace apsf
