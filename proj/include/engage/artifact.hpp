#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "engage/cluster.hpp"
#include "engage/embed.hpp"
#include "engage/config.hpp"
#include "engage/corpus.hpp"
#include "engage/explain.hpp"
#include "engage/features.hpp"
#include "engage/gbt.hpp"
#include "engage/pca.hpp"
#include "engage/score.hpp"

namespace engage {

inline constexpr int kArtifactFormatVersion = 1;

// Embedding reduction and clustering of one modality.
struct ModalityModel {
  Modality modality = Modality::Audio;
  bool pca_enabled = true;
  PcaModel pca;  // empty when disabled
  ClusterModel clusters;
  std::vector<ClusterSummary> summary;
  // Corpus descriptor occurrences per cluster (before smoothing).
  std::vector<std::size_t> occurrences;
};

// Training-set distribution of one cluster's weighted count; backs the
// heuristic auto-rater.
struct RatingTable {
  std::vector<double> values;        // distinct, ascending
  std::vector<std::size_t> counts;   // videos per value
  std::size_t total = 0;

  // Mid-quantile of x scaled to [0, 10].
  double rate(double x) const;
};

RatingTable make_rating_table(std::vector<double> samples);

struct StageSeeds {
  std::uint64_t split = 0;
  std::uint64_t kmeans_audio = 0;
  std::uint64_t kmeans_visual = 0;
  std::uint64_t gbt = 0;
  std::uint64_t tune = 0;
};

struct ModelArtifact {
  int format_version = kArtifactFormatVersion;
  PipelineConfig config;
  std::string corpus_fingerprint;  // hex FNV-1a of the canonical corpus
  std::string config_fingerprint;  // hex FNV-1a of the canonical config
  StageSeeds seeds;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;

  ModalityModel audio;
  ModalityModel visual;
  PhraseFrequency phrase_freq;
  ClusterShares shares;
  FeatureLayout full_layout;  // both modalities
  ModalityMask modality = ModalityMask::Both;
  FrequencyWeighting weighting = FrequencyWeighting::Share;

  GbtEnsemble ensemble;  // trained on the masked layout
  int tuned_best_trial = -1;
  ClusterWeights weights;
  std::vector<RatingTable> ratings;  // one per cluster of the masked layout

  MetricReport test_metrics;            // GBT predictions
  MetricReport evaluator_test_metrics;  // E = sum w_i f_i

  const ModalityModel& of(Modality m) const { return m == Modality::Audio ? audio : visual; }
  FeatureLayout layout() const { return weights.layout; }
};

nlohmann::ordered_json to_json(const ModelArtifact& artifact);
// Throws FormatVersion on a version mismatch and InvariantViolation when a
// stored model breaks its invariants.
ModelArtifact artifact_from_json(const nlohmann::json& doc);

std::string serialize_artifact(const ModelArtifact& artifact);
ModelArtifact deserialize_artifact(const std::string& text);

void save_artifact(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::string& path);

void validate(const ModelArtifact& artifact);

nlohmann::ordered_json to_json(const PcaModel& m);
PcaModel pca_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const ClusterModel& m);
ClusterModel cluster_model_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const ModalityModel& m);
ModalityModel modality_model_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const GbtEnsemble& e);
GbtEnsemble ensemble_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const std::vector<ClusterSummary>& summary);

std::string hex64(std::uint64_t v);

}  // namespace engage
