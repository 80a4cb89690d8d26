#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "engage/corpus.hpp"
#include "engage/features.hpp"
#include "engage/gbt.hpp"
#include "engage/tune.hpp"

namespace engage {

// Every tunable default of a pipeline run. All randomness derives from
// `seed` through named substreams.
struct PipelineConfig {
  std::uint64_t seed = 42;

  std::string embedding_provider = "hashing";
  std::string embeddings_path;  // CSV table for the precomputed provider

  bool pca_enabled = true;
  int pca_dims = 128;

  int audio_k = 10;
  int visual_k = 10;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  int kmeans_n_init = 5;

  NormalizationScheme normalization = NormalizationScheme::MinMax;
  FrequencyWeighting frequency_weighting = FrequencyWeighting::Share;
  ModalityMask modality = ModalityMask::Both;

  GbtConfig gbt;  // gbt.seed is replaced by the "gbt" substream

  bool tune_enabled = false;
  int tune_trials = 50;
  bool parallel_warmup = false;
  bool average_trials = false;
  SearchSpace search_space;

  std::size_t describe_top_m = 5;

  void validate() const;
};

nlohmann::ordered_json to_json(const GbtConfig& c);
GbtConfig gbt_config_from_json(const nlohmann::json& doc, GbtConfig base = {});

nlohmann::ordered_json to_json(const SearchSpace& s);
SearchSpace search_space_from_json(const nlohmann::json& doc, SearchSpace base = {});

nlohmann::ordered_json to_json(const PipelineConfig& c);
// Overrides the defaults with the keys present in `doc`; unknown keys are
// rejected with InvalidConfig.
PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {});
PipelineConfig load_config(const std::string& path);

nlohmann::json read_json_file(const std::string& path);

}  // namespace engage
