#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace engage {

enum class ErrorKind {
  // corpus
  MalformedJson,
  SchemaViolation,
  EmptyModality,
  ZeroViews,
  EmptyCorpus,
  TooFewRecords,
  InvalidWeights,
  InvalidRecord,
  // embed
  MissingEmbedding,
  EmptyPhrase,
  // shared
  DimensionMismatch,
  // cluster
  TooFewPoints,
  // features
  WrongArity,
  UnknownCluster,
  // gbt
  InvalidConfig,
  // tune
  EmptySpace,
  DegenerateVal,
  // explain
  EmptyReference,
  // score
  LengthMismatch,
  TooFew,
  WeightSumZero,
  ScoreOutOfRange,
  MissingSubScores,
  // cli / artifact
  Io,
  FormatVersion,
  RemoteUnavailable,
  InvariantViolation,
};

std::string_view to_string(ErrorKind kind);

// Exit code mapping used by the CLI: 2 for data errors, 3 for invariant
// violations.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

// Non-fatal diagnostics accumulated by an operation.
struct Warnings {
  std::vector<std::string> messages;

  void add(std::string message) { messages.push_back(std::move(message)); }
  bool empty() const { return messages.empty(); }
};

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->add(std::move(message));
}

}  // namespace engage
