#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "engage/explain.hpp"
#include "engage/features.hpp"

namespace engage {

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double spearman = 0.0;
  double kendall_tau_b = 0.0;
  double pairwise_accuracy = 0.0;
  std::size_t n = 0;

  nlohmann::ordered_json to_json() const;
  bool operator==(const MetricReport&) const = default;
};

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> v);

double spearman(std::span<const double> predictions, std::span<const double> targets);

struct PairCounts {
  double concordant = 0.0;
  double discordant = 0.0;
  double tied_targets = 0.0;      // pairs tied in targets (any prediction)
  double tied_predictions = 0.0;  // pairs tied in predictions (any target)
  double tied_both = 0.0;
  double total = 0.0;
};

// O(n log n) pair counting (merge-sort inversion count).
PairCounts count_pairs(std::span<const double> predictions, std::span<const double> targets);

double kendall_tau_b(std::span<const double> predictions, std::span<const double> targets);

// Concordant pairs over pairs with distinct targets; prediction ties earn
// half credit.
double pairwise_accuracy(std::span<const double> predictions, std::span<const double> targets);

MetricReport compute_metrics(std::span<const double> predictions, std::span<const double> targets);

// E = sum_i w_i f_i over all 4k feature columns.
double evaluate_engagement(const ClusterWeights& weights, const VideoFeatureVector& features);
double evaluate_engagement(std::span<const double> weights, const Vector& features);

inline constexpr double kMaxSubScore = 10.0;

struct JudgeContribution {
  int cluster = 0;
  std::string label;
  double weight = 0.0;
  double score = 0.0;
  double share = 0.0;   // weight / sum of weights
  double points = 0.0;  // share * score; the points add up to S
};

struct JudgeResult {
  double score = 0.0;  // S in [0, 10]
  std::vector<JudgeContribution> contributions;
};

// Weighted mean of five 0-10 sub-scores.
JudgeResult judge_score(std::span<const double> weights, std::span<const double> sub_scores);

}  // namespace engage
