#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "engage/error.hpp"

namespace engage {

inline constexpr std::size_t kDescriptorsPerModality = 5;
inline constexpr std::size_t kMaxCandidatesPerModality = 20;
inline constexpr double kMaxDurationSeconds = 90.0;

enum class Modality { Audio, Visual };

std::string_view to_string(Modality m);

// Phrase lists exactly as the descriptor model wrote them.
struct DescriptorCandidates {
  std::vector<std::string> audio;
  std::vector<std::string> visual;
};

// Five normalized phrases per modality.
struct DescriptorSet {
  std::array<std::string, kDescriptorsPerModality> audio;
  std::array<std::string, kDescriptorsPerModality> visual;

  const std::array<std::string, kDescriptorsPerModality>& of(Modality m) const {
    return m == Modality::Audio ? audio : visual;
  }
  bool operator==(const DescriptorSet&) const = default;
};

struct EngagementLabel {
  double raw_ratio = 0.0;
  double normalized = 0.0;
};

struct VideoRecord {
  std::string id;
  std::string title;
  double duration_s = 0.0;
  std::uint64_t views = 0;
  std::uint64_t likes = 0;
  std::string category;
  std::string upload_date;
  // Verbatim descriptor-model response; empty when descriptors were supplied
  // directly.
  std::string vlm_raw;
  DescriptorSet descriptors;
  EngagementLabel engagement;
};

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

// Corpus-wide occurrence counts of normalized phrases, per modality.
struct PhraseFrequency {
  std::map<std::string, std::size_t> audio;
  std::map<std::string, std::size_t> visual;

  const std::map<std::string, std::size_t>& of(Modality m) const {
    return m == Modality::Audio ? audio : visual;
  }
  void add(const DescriptorCandidates& candidates);
};

enum class NormalizationScheme { MinMax, Quantile };

std::string_view to_string(NormalizationScheme s);
NormalizationScheme parse_normalization_scheme(std::string_view name);

// Accepts {"audio": [...], "video": [...]} with 1..20 string entries per
// list. Throws MalformedJson or SchemaViolation.
DescriptorCandidates parse_vlm_response(std::string_view raw);

// Lowercases ASCII, trims edge whitespace and punctuation, and collapses
// internal whitespace runs. Internal punctuation is kept.
std::string normalize_phrase(std::string_view phrase);

// Keeps the five most frequent candidates per modality (ties broken
// lexicographically). Exactly five candidates are returned as given. Short
// lists are padded with the most frequent phrase and a warning is emitted.
DescriptorSet filter_top5(const DescriptorCandidates& candidates,
                          const PhraseFrequency& corpus_freq,
                          Warnings* warnings = nullptr);

double compute_engagement(std::uint64_t likes, std::uint64_t views);

std::vector<double> normalize_engagement(
    std::span<const double> ratios,
    NormalizationScheme scheme = NormalizationScheme::MinMax,
    Warnings* warnings = nullptr);

// Deterministic shuffle, then a contiguous cut with train = floor(0.7 n),
// val = floor(0.15 n) and test taking the remainder.
DatasetSplit split_dataset(const std::vector<std::string>& ids,
                           std::uint64_t seed);

DescriptorCandidates to_candidates(const DescriptorSet& set);

}  // namespace engage
