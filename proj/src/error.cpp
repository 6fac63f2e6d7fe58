#include "apsf/error.hpp"

namespace apsf {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::EmptyCandidate: return "EmptyCandidate";
    case ErrorKind::SubstringNotFound: return "SubstringNotFound";
    case ErrorKind::OverlappingBoundaries: return "OverlappingBoundaries";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::InvalidFactor: return "InvalidFactor";
    case ErrorKind::UnknownMode: return "UnknownMode";
    case ErrorKind::BackendFailure: return "BackendFailure";
    case ErrorKind::EndpointError: return "EndpointError";
    case ErrorKind::FixtureMiss: return "FixtureMiss";
    case ErrorKind::FixtureLeftover: return "FixtureLeftover";
    case ErrorKind::StructureParseError: return "StructureParseError";
    case ErrorKind::CandidateParseError: return "CandidateParseError";
    case ErrorKind::MissingProfile: return "MissingProfile";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::SpecError: return "SpecError";
    case ErrorKind::SpecMismatch: return "SpecMismatch";
    case ErrorKind::TemplateError: return "TemplateError";
    case ErrorKind::DatasetError: return "DatasetError";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace apsf
