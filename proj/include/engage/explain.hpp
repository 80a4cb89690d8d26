#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "engage/cluster.hpp"
#include "engage/features.hpp"
#include "engage/gbt.hpp"

namespace engage {

struct ShapAttribution {
  double base_value = 0.0;   // phi_0
  std::vector<double> phi;   // one per feature
};

// Path-dependent (cover-weighted) TreeSHAP for a single tree.
std::vector<double> tree_shap(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                              int n_features);

// Cover-weighted mean leaf value of a tree.
double expected_value(const RegressionTree& tree);

ShapAttribution tree_shap(const GbtEnsemble& ensemble, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Mean |phi_j| over the reference rows.
std::vector<double> feature_importance(const GbtEnsemble& ensemble, const Matrix& reference);

inline constexpr std::size_t kTopClusters = 5;

// Evaluator weights. Feature-level weights drive E = sum w_i f_i; cluster
// level weights add up the indicator and weighted-count columns of each
// cluster and drive the judge score.
struct ClusterWeights {
  FeatureLayout layout;
  std::vector<double> importance;          // one per feature, mean |SHAP|
  std::vector<double> weights;             // one per feature, sum to 1
  std::vector<double> cluster_importance;  // one per cluster
  std::vector<double> cluster_weights;     // one per cluster, sum to 1
  std::vector<int> top5;                   // cluster indices, descending weight
};

ClusterWeights make_cluster_weights(const std::vector<double>& importance, const FeatureLayout& layout,
                                    Warnings* warnings = nullptr);

ClusterWeights global_importance(const GbtEnsemble& ensemble, const Matrix& reference,
                                 const FeatureLayout& layout, Warnings* warnings = nullptr);

void validate(const ClusterWeights& weights);

struct ImportanceRow {
  int rank = 0;
  int cluster = 0;
  std::string name;   // a3, v7, ...
  std::string label;  // dominant phrase
  double importance = 0.0;
  double percent = 0.0;
};

// Clusters ranked by descending weight (ties by index).
std::vector<ImportanceRow> report_importance(const ClusterWeights& weights,
                                             const std::vector<ClusterSummary>& audio_summary,
                                             const std::vector<ClusterSummary>& visual_summary);

nlohmann::ordered_json importance_to_json(const std::vector<ImportanceRow>& rows);
std::string importance_to_text(const std::vector<ImportanceRow>& rows);

}  // namespace engage
