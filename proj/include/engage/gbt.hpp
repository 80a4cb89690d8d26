#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "engage/error.hpp"
#include "engage/matrix.hpp"

namespace engage {

// A candidate split must beat the current best gain by more than this to
// replace it; the first (feature, threshold) in scan order wins ties.
inline constexpr double kGainTieTolerance = 1e-12;

struct GbtConfig {
  int n_estimators = 500;
  int max_depth = 6;
  double learning_rate = 0.05;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double colsample = 1.0;
  double reg_lambda = 1.0;
  std::uint64_t seed = 0;
  // 0 disables early stopping on the validation trace.
  int early_stopping_rounds = 0;

  // Throws InvalidConfig.
  void validate() const;
  bool operator==(const GbtConfig&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate already applied
  double cover = 0.0;  // hessian sum (row count under squared error)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Routes left iff x[feature] < threshold.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct GbtEnsemble {
  double base_score = 0.0;
  int n_features = 0;
  std::vector<RegressionTree> trees;
  GbtConfig config;
};

struct TrainTrace {
  std::vector<double> train_rmse;  // after each round
  std::vector<double> val_rmse;    // empty without a validation set
};

struct TrainResult {
  GbtEnsemble ensemble;
  TrainTrace trace;
};

// Second-order boosting with squared error (gradient = prediction - target,
// hessian = 1) and exact greedy splits at midpoints of consecutive distinct
// values.
TrainResult train(const Matrix& features, std::span<const double> targets, const GbtConfig& config,
                  const Matrix* val_features = nullptr, std::span<const double> val_targets = {},
                  Warnings* warnings = nullptr);

double predict(const GbtEnsemble& ensemble, const Eigen::Ref<const Eigen::RowVectorXd>& x);
std::vector<double> predict_rows(const GbtEnsemble& ensemble, const Matrix& rows);

void validate(const GbtEnsemble& ensemble);

}  // namespace engage
