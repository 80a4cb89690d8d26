#include "engage/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "engage/rng.hpp"

namespace engage {

void GbtConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
  if (n_estimators < 1) bad("n_estimators must be >= 1");
  if (max_depth < 1 || max_depth > 16) bad("max_depth must be in [1, 16]");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate must be in (0, 1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) bad("subsample must be in (0, 1]");
  if (!(colsample > 0.0 && colsample <= 1.0)) bad("colsample must be in (0, 1]");
  if (!(reg_lambda >= 0.0)) bad("reg_lambda must be >= 0");
  if (!(min_child_weight >= 0.0)) bad("min_child_weight must be >= 0");
  if (early_stopping_rounds < 0) bad("early_stopping_rounds must be >= 0");
}

int RegressionTree::leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return i;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return nodes[leaf_index(x)].value;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) continue;
    d[n.left] = d[i] + 1;
    d[n.right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

namespace {

// Per-feature sorted distinct values and each row's index into them.
struct BinnedColumns {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint32_t>> bins;  // [feature][row]
};

BinnedColumns bin_columns(const Matrix& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  BinnedColumns b;
  b.values.resize(p);
  b.bins.resize(p);
  for (Eigen::Index f = 0; f < p; ++f) {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) col[i] = x(i, f);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto& bins = b.bins[f];
    bins.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      bins[i] = static_cast<std::uint32_t>(
          std::lower_bound(sorted.begin(), sorted.end(), col[i]) - sorted.begin());
    }
    b.values[f] = std::move(sorted);
  }
  return b;
}

double midpoint(double a, double b) {
  double m = a + (b - a) * 0.5;
  if (!(m > a)) m = b;
  return m;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  std::uint32_t left_last_bin = 0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const BinnedColumns& binned, const std::vector<double>& grad,
              const GbtConfig& config, std::vector<int> features)
      : x_(x), binned_(binned), grad_(grad), config_(config), features_(std::move(features)) {}

  RegressionTree build(std::vector<int> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int> rows, int depth) {
    double g = 0.0;
    for (int r : rows) g += grad_[r];
    const double h = static_cast<double>(rows.size());
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].cover = h;

    Split best;
    if (depth < config_.max_depth && rows.size() >= 2) best = find_split(rows, g, h);
    if (best.feature < 0) {
      tree_.nodes[id].value = -g / (h + config_.reg_lambda) * config_.learning_rate;
      return id;
    }
    std::vector<int> left;
    std::vector<int> right;
    const auto& bins = binned_.bins[best.feature];
    for (int r : rows) (bins[r] <= best.left_last_bin ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[id].feature = best.feature;
    tree_.nodes[id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  Split find_split(const std::vector<int>& rows, double g, double h) {
    const double lambda = config_.reg_lambda;
    const double parent = g * g / (h + lambda);
    Split best;
    for (int f : features_) {
      const auto& values = binned_.values[f];
      if (values.size() < 2) continue;
      const auto& bins = binned_.bins[f];
      hist_g_.assign(values.size(), 0.0);
      hist_h_.assign(values.size(), 0.0);
      for (int r : rows) {
        hist_g_[bins[r]] += grad_[r];
        hist_h_[bins[r]] += 1.0;
      }
      double gl = 0.0;
      double hl = 0.0;
      std::int64_t prev = -1;
      for (std::size_t b = 0; b < values.size(); ++b) {
        if (hist_h_[b] == 0.0) continue;
        if (prev >= 0) {
          const double gr = g - gl;
          const double hr = h - hl;
          if (hl >= config_.min_child_weight && hr >= config_.min_child_weight) {
            const double gain =
                0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
            if (gain > best.gain + kGainTieTolerance) {
              best.feature = f;
              best.gain = gain;
              best.left_last_bin = static_cast<std::uint32_t>(prev);
              best.threshold = midpoint(values[prev], values[b]);
            }
          }
        }
        gl += hist_g_[b];
        hl += hist_h_[b];
        prev = static_cast<std::int64_t>(b);
      }
    }
    return best;
  }

  const Matrix& x_;
  const BinnedColumns& binned_;
  const std::vector<double>& grad_;
  const GbtConfig& config_;
  std::vector<int> features_;
  RegressionTree tree_;
  std::vector<double> hist_g_;
  std::vector<double> hist_h_;
};

double rmse(const std::vector<double>& pred, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

std::vector<int> sample_indices(int n, double fraction, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  if (fraction >= 1.0) return idx;
  const int m = std::max(1, static_cast<int>(std::lround(fraction * n)));
  for (int i = 0; i < m; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TrainResult train(const Matrix& features, std::span<const double> targets, const GbtConfig& config,
                  const Matrix* val_features, std::span<const double> val_targets,
                  Warnings* warnings) {
  config.validate();
  const auto n = features.rows();
  const auto p = features.cols();
  if (n < 2) fail(ErrorKind::TooFewRecords, "training needs at least 2 rows");
  if (static_cast<std::size_t>(n) != targets.size()) {
    fail(ErrorKind::LengthMismatch, "features and targets differ in length");
  }
  const bool has_val = val_features != nullptr && val_features->rows() > 0;
  if (has_val) {
    if (val_features->cols() != p) {
      fail(ErrorKind::DimensionMismatch, "validation features have wrong width");
    }
    if (static_cast<std::size_t>(val_features->rows()) != val_targets.size()) {
      fail(ErrorKind::LengthMismatch, "validation features and targets differ in length");
    }
  }

  TrainResult result;
  GbtEnsemble& model = result.ensemble;
  model.config = config;
  model.n_features = static_cast<int>(p);
  model.base_score =
      std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(static_cast<std::size_t>(n), model.base_score);
  std::vector<double> val_pred;
  if (has_val) val_pred.assign(static_cast<std::size_t>(val_features->rows()), model.base_score);

  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  if (*lo == *hi) {
    warn(warnings, "DegenerateTargets: all training targets equal; ensemble has no trees");
    return result;
  }

  const BinnedColumns binned = bin_columns(features);
  std::vector<double> grad(static_cast<std::size_t>(n));
  double best_val = std::numeric_limits<double>::infinity();
  int best_round = -1;

  for (int t = 0; t < config.n_estimators; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) grad[i] = pred[i] - targets[i];
    Rng rng(derive_seed(config.seed, "tree", static_cast<std::uint64_t>(t)));
    std::vector<int> rows = sample_indices(static_cast<int>(n), config.subsample, rng);
    std::vector<int> cols = sample_indices(static_cast<int>(p), config.colsample, rng);

    TreeBuilder builder(features, binned, grad, config, std::move(cols));
    RegressionTree tree = builder.build(std::move(rows));
    for (Eigen::Index i = 0; i < n; ++i) pred[i] += tree.predict(features.row(i));
    result.trace.train_rmse.push_back(rmse(pred, targets));
    if (has_val) {
      for (Eigen::Index i = 0; i < val_features->rows(); ++i) {
        val_pred[i] += tree.predict(val_features->row(i));
      }
      const double v = rmse(val_pred, val_targets);
      result.trace.val_rmse.push_back(v);
      if (v < best_val) {
        best_val = v;
        best_round = t;
      }
    }
    model.trees.push_back(std::move(tree));
    if (has_val && config.early_stopping_rounds > 0 &&
        t - best_round >= config.early_stopping_rounds) {
      model.trees.resize(static_cast<std::size_t>(best_round + 1));
      result.trace.train_rmse.resize(model.trees.size());
      result.trace.val_rmse.resize(model.trees.size());
      break;
    }
  }
  return result;
}

double predict(const GbtEnsemble& ensemble, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != ensemble.n_features) {
    fail(ErrorKind::DimensionMismatch, "feature vector has " + std::to_string(x.size()) +
                                           " entries, model expects " +
                                           std::to_string(ensemble.n_features));
  }
  double out = ensemble.base_score;
  for (const auto& tree : ensemble.trees) out += tree.predict(x);
  return out;
}

std::vector<double> predict_rows(const GbtEnsemble& ensemble, const Matrix& rows) {
  if (rows.cols() != ensemble.n_features) {
    fail(ErrorKind::DimensionMismatch, "feature matrix has " + std::to_string(rows.cols()) +
                                           " columns, model expects " +
                                           std::to_string(ensemble.n_features));
  }
  std::vector<double> out(static_cast<std::size_t>(rows.rows()), ensemble.base_score);
  for (const auto& tree : ensemble.trees) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out[i] += tree.predict(rows.row(i));
  }
  return out;
}

void validate(const GbtEnsemble& ensemble) {
  ensemble.config.validate();
  auto bad = [](const std::string& what) { fail(ErrorKind::InvariantViolation, what); };
  if (ensemble.n_features < 1) bad("ensemble has no features");
  if (!std::isfinite(ensemble.base_score)) bad("non-finite base score");
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    const auto& nodes = ensemble.trees[t].nodes;
    const std::string where = "tree " + std::to_string(t) + ": ";
    if (nodes.empty()) bad(where + "no nodes");
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (!(n.cover > 0.0)) bad(where + "node cover must be positive");
      if (n.is_leaf()) {
        if (!std::isfinite(n.value)) bad(where + "non-finite leaf value");
        continue;
      }
      if (n.feature >= ensemble.n_features) bad(where + "feature index out of range");
      const auto size = static_cast<int>(nodes.size());
      if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size ||
          n.right >= size) {
        bad(where + "child index out of range");
      }
      ++parents[n.left];
      ++parents[n.right];
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (parents[i] != 1) bad(where + "node not reachable exactly once");
    }
    if (ensemble.trees[t].depth() > ensemble.config.max_depth) bad(where + "exceeds max_depth");
  }
}

}  // namespace engage
