#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "engage/artifact.hpp"
#include "engage/config.hpp"
#include "engage/embed.hpp"
#include "engage/tune.hpp"

namespace engage {

// Sorted unique normalized phrases of one modality.
std::vector<std::string> vocabulary(const std::vector<VideoRecord>& records, Modality m);

// Candidate phrase counts, from vlm_raw when present, else the stored
// descriptors.
PhraseFrequency corpus_phrase_frequency(const std::vector<VideoRecord>& records);

std::string corpus_fingerprint(const std::vector<VideoRecord>& records);
std::string config_fingerprint(const PipelineConfig& config);

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& config);

// PCA (optional) and k-means over a modality's vocabulary. Summary and
// occurrence tables are left empty.
ModalityModel fit_modality(const std::vector<std::string>& vocab, Modality m, const PipelineConfig& config,
                           const EmbeddingProvider& provider, Warnings* warnings = nullptr);

// Embeds, reduces and assigns phrases, memoizing per phrase.
class PhraseAssigner {
 public:
  PhraseAssigner(const ModalityModel& audio, const ModalityModel& visual, const EmbeddingProvider& provider)
      : audio_(audio), visual_(visual), provider_(provider) {}

  ClusterAssignment assign(Modality m, const std::string& phrase);
  std::vector<ClusterAssignment> assign_all(Modality m, const std::array<std::string, kDescriptorsPerModality>& phrases);

 private:
  const ModalityModel& audio_;
  const ModalityModel& visual_;
  const EmbeddingProvider& provider_;
  std::map<std::string, ClusterAssignment> cache_[2];
};

struct ClusterStage {
  ModalityModel audio;
  ModalityModel visual;
  bool from_cache = false;
};

// Fits both modalities, reusing `<cache_dir>/clusters-<hash>.json` when the
// vocabulary, provider and clustering settings are unchanged. An empty
// cache_dir disables caching.
ClusterStage run_cluster_stage(const std::vector<VideoRecord>& records, const PipelineConfig& config,
                               const EmbeddingProvider& provider, const std::string& cache_dir = {},
                               Warnings* warnings = nullptr);

// Fills the summary and occurrence tables from the corpus.
void summarize_clusters(ClusterStage& stage, const std::vector<VideoRecord>& records, PhraseAssigner& assigner,
                        std::size_t top_m);

struct FeatureTable {
  FeatureLayout layout;  // masked
  std::vector<std::string> ids;
  std::vector<VideoFeatureVector> features;  // restricted to the mask
  Matrix x;
  std::vector<double> y;
};

FeatureTable build_feature_table(const std::vector<VideoRecord>& records, const FeatureLayout& full,
                                 const ClusterShares& shares, ModalityMask mask, FrequencyWeighting weighting,
                                 PhraseAssigner& assigner);

struct SplitData {
  DatasetSplit split;
  std::vector<std::size_t> train, val, test;  // row indices into the table
  Matrix train_x, val_x, test_x;
  std::vector<double> train_y, val_y, test_y;
};

SplitData split_table(const FeatureTable& table, std::uint64_t split_seed);

StageSeeds stage_seeds(std::uint64_t root);

// Everything up to the split, shared by train and tune.
struct PreparedData {
  PipelineConfig config;
  StageSeeds seeds;
  std::unique_ptr<EmbeddingProvider> provider;
  ClusterStage clusters;
  PhraseFrequency phrase_freq;
  ClusterShares shares;
  FeatureLayout full_layout;
  FeatureTable table;
  SplitData split;
};

PreparedData prepare(const std::vector<VideoRecord>& records, const PipelineConfig& config,
                     const std::string& cache_dir = {}, Warnings* warnings = nullptr);

struct PredictionRow {
  std::string id;
  std::string split;  // train, val, test, or all
  double target = 0.0;
  double prediction = 0.0;
  double evaluator = 0.0;
};

void write_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows);

struct TrainOptions {
  std::string cache_dir;
  std::function<void(const TrialRecord&)> on_trial;  // called in trial order
  Warnings* warnings = nullptr;
};

struct TrainOutcome {
  ModelArtifact artifact;
  TrainTrace trace;
  std::optional<TuneResult> tuning;
  std::vector<PredictionRow> predictions;
  bool cluster_cache_hit = false;
};

TrainOutcome train_pipeline(const std::vector<VideoRecord>& records, const PipelineConfig& config,
                            const TrainOptions& options = {});

TuneResult tune_pipeline(const PreparedData& data, const TuneOptions& options,
                         const TrialObserver& observer = {});

// Retrains with the model's clusters, split seed and GBT config on the given
// modality mask and reports test metrics.
MetricReport run_ablation(const ModelArtifact& model, const std::vector<VideoRecord>& records, ModalityMask mask,
                          Warnings* warnings = nullptr);

struct EvaluationReport {
  MetricReport model;      // GBT predictions
  MetricReport evaluator;  // E
  std::vector<PredictionRow> rows;

  nlohmann::ordered_json to_json() const;
};

// Frozen-model evaluation. With test_only the model's own split of the
// corpus is reproduced and only the test rows are scored.
EvaluationReport evaluate_model(const ModelArtifact& model, const std::vector<VideoRecord>& records,
                                bool test_only = false);

struct JudgeInput {
  std::string video_id;
  DescriptorCandidates candidates;
  std::optional<std::vector<double>> sub_scores;
};

// Accepts {"video_id", "descriptors": {"audio", "visual"}} or {"video_id",
// "vlm_raw"} or a bare descriptor-model response {"audio", "video"}; an
// optional "sub_scores" list of five values rides along.
JudgeInput parse_judge_input(const nlohmann::json& doc);

struct JudgeReport {
  std::string video_id;
  DescriptorSet descriptors;
  double evaluator = 0.0;   // E
  double prediction = 0.0;  // GBT
  bool auto_rated = false;
  std::optional<JudgeResult> judge;
  std::vector<std::string> cluster_names;  // a3, v7, ... per contribution

  nlohmann::ordered_json to_json() const;
};

JudgeReport judge_video(const ModelArtifact& model, const JudgeInput& input, bool auto_rate,
                        Warnings* warnings = nullptr);

std::vector<ImportanceRow> importance_rows(const ModelArtifact& model);

}  // namespace engage
