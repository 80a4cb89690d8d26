#include "engage/error.hpp"

namespace engage {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedJson: return "MalformedJson";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::EmptyModality: return "EmptyModality";
    case ErrorKind::ZeroViews: return "ZeroViews";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::InvalidWeights: return "InvalidWeights";
    case ErrorKind::InvalidRecord: return "InvalidRecord";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::EmptyPhrase: return "EmptyPhrase";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::WrongArity: return "WrongArity";
    case ErrorKind::UnknownCluster: return "UnknownCluster";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptySpace: return "EmptySpace";
    case ErrorKind::DegenerateVal: return "DegenerateVal";
    case ErrorKind::EmptyReference: return "EmptyReference";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFew: return "TooFew";
    case ErrorKind::WeightSumZero: return "WeightSumZero";
    case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorKind::MissingSubScores: return "MissingSubScores";
    case ErrorKind::Io: return "Io";
    case ErrorKind::FormatVersion: return "FormatVersion";
    case ErrorKind::RemoteUnavailable: return "RemoteUnavailable";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  return kind == ErrorKind::InvariantViolation ? 3 : 2;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(message) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace engage
