#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "engage/corpus.hpp"
#include "engage/sources.hpp"

namespace engage {

// Canonical JSONL form of a record (stable key order).
nlohmann::ordered_json record_to_json(const VideoRecord& record);

// Reads a canonical record. Engagement is taken as stored.
VideoRecord record_from_json(const nlohmann::json& doc);

std::vector<VideoRecord> read_corpus(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<VideoRecord>& records);
void write_corpus(const std::string& path, const std::vector<VideoRecord>& records);

struct DroppedRecord {
  std::size_t line = 0;  // 1-based
  std::string id;
  std::string reason;
};

struct IngestReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::vector<DroppedRecord> dropped;
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
};

struct IngestOptions {
  NormalizationScheme scheme = NormalizationScheme::MinMax;
  DescriptorSource* descriptors = nullptr;  // used when a line has no vlm_raw
  MetadataSource* metadata = nullptr;       // used when a line has no views
  double max_failure_fraction = 0.5;
};

struct IngestResult {
  std::vector<VideoRecord> records;
  IngestReport report;
};

// Parses raw or canonical lines, filters descriptors against corpus
// frequencies and labels engagement. Per-record failures are collected;
// throws EmptyCorpus when more than max_failure_fraction of lines fail.
IngestResult ingest(const std::vector<std::string>& lines, const IngestOptions& options);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace engage
