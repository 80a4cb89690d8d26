#include "engage/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace engage {

namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(std::vector<PathElement>& path, int depth, double zero_fraction,
                 double one_fraction, int feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / (depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / (depth + 1);
  }
}

void unwind_path(std::vector<PathElement>& path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) / ((i + 1) * one);
      next_one_portion = tmp - path[i].pweight * zero * (depth - i) / (depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
  path.resize(static_cast<std::size_t>(depth));
}

double unwound_path_sum(const std::vector<PathElement>& path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next_one_portion * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero * (depth - i) / (depth + 1);
    } else if (zero != 0.0) {
      total += path[i].pweight / zero / (static_cast<double>(depth - i) / (depth + 1));
    }
  }
  return total;
}

class ShapRecursion {
 public:
  ShapRecursion(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                std::vector<double>& phi)
      : tree_(tree), x_(x), phi_(phi) {}

  void run() { recurse(0, {}, 0, 1.0, 1.0, -1); }

 private:
  void recurse(int node_id, std::vector<PathElement> path, int depth, double zero_fraction,
               double one_fraction, int feature) {
    extend_path(path, depth, zero_fraction, one_fraction, feature);
    const TreeNode& node = tree_.nodes[node_id];
    if (node.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const auto& el = path[i];
        phi_[el.feature] += w * (el.one_fraction - el.zero_fraction) * node.value;
      }
      return;
    }
    const bool go_left = x_[node.feature] < node.threshold;
    const int hot = go_left ? node.left : node.right;
    const int cold = go_left ? node.right : node.left;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    for (int i = 1; i <= depth; ++i) {
      if (path[i].feature == node.feature) {
        incoming_zero = path[i].zero_fraction;
        incoming_one = path[i].one_fraction;
        unwind_path(path, depth, i);
        --depth;
        break;
      }
    }
    const double hot_zero = tree_.nodes[hot].cover / node.cover;
    const double cold_zero = tree_.nodes[cold].cover / node.cover;
    recurse(hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, node.feature);
    recurse(cold, std::move(path), depth + 1, cold_zero * incoming_zero, 0.0, node.feature);
  }

  const RegressionTree& tree_;
  const Eigen::Ref<const Eigen::RowVectorXd>& x_;
  std::vector<double>& phi_;
};

double node_expectation(const RegressionTree& tree, int id) {
  const auto& n = tree.nodes[id];
  if (n.is_leaf()) return n.value;
  return (tree.nodes[n.left].cover * node_expectation(tree, n.left) +
          tree.nodes[n.right].cover * node_expectation(tree, n.right)) /
         n.cover;
}

}  // namespace

std::vector<double> tree_shap(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                              int n_features) {
  std::vector<double> phi(static_cast<std::size_t>(n_features), 0.0);
  if (tree.nodes.empty()) return phi;
  ShapRecursion(tree, x, phi).run();
  return phi;
}

double expected_value(const RegressionTree& tree) {
  return tree.nodes.empty() ? 0.0 : node_expectation(tree, 0);
}

ShapAttribution tree_shap(const GbtEnsemble& ensemble, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (x.size() != ensemble.n_features) {
    fail(ErrorKind::DimensionMismatch, "feature vector has " + std::to_string(x.size()) +
                                           " entries, model expects " +
                                           std::to_string(ensemble.n_features));
  }
  ShapAttribution out;
  out.base_value = ensemble.base_score;
  out.phi.assign(static_cast<std::size_t>(ensemble.n_features), 0.0);
  for (const auto& tree : ensemble.trees) {
    out.base_value += expected_value(tree);
    ShapRecursion(tree, x, out.phi).run();
  }
  return out;
}

std::vector<double> feature_importance(const GbtEnsemble& ensemble, const Matrix& reference) {
  if (reference.rows() == 0) fail(ErrorKind::EmptyReference, "reference set is empty");
  std::vector<double> total(static_cast<std::size_t>(ensemble.n_features), 0.0);
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    const auto attribution = tree_shap(ensemble, reference.row(i));
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += std::abs(attribution.phi[j]);
  }
  for (double& v : total) v /= static_cast<double>(reference.rows());
  return total;
}

namespace {

std::vector<double> normalized(const std::vector<double>& v, const char* what, Warnings* warnings) {
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  std::vector<double> out(v.size());
  if (!(sum > 0.0)) {
    warn(warnings, std::string("all ") + what + " importances are zero; using uniform weights");
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(v.size()));
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / sum;
  return out;
}

}  // namespace

ClusterWeights make_cluster_weights(const std::vector<double>& importance, const FeatureLayout& layout,
                                    Warnings* warnings) {
  if (static_cast<int>(importance.size()) != layout.size()) {
    fail(ErrorKind::DimensionMismatch, "importance vector does not match the feature layout");
  }
  if (layout.cluster_count() < static_cast<int>(kTopClusters)) {
    fail(ErrorKind::InvalidConfig, "need at least 5 clusters in total for a top-5 ranking");
  }
  ClusterWeights w;
  w.layout = layout;
  w.importance = importance;
  w.weights = normalized(importance, "feature", warnings);
  w.cluster_importance.assign(static_cast<std::size_t>(layout.cluster_count()), 0.0);
  for (int j = 0; j < layout.size(); ++j) w.cluster_importance[layout.cluster_of(j)] += importance[j];
  w.cluster_weights = normalized(w.cluster_importance, "cluster", nullptr);

  std::vector<int> order(w.cluster_weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return w.cluster_weights[a] > w.cluster_weights[b]; });
  w.top5.assign(order.begin(), order.begin() + kTopClusters);
  return w;
}

ClusterWeights global_importance(const GbtEnsemble& ensemble, const Matrix& reference,
                                 const FeatureLayout& layout, Warnings* warnings) {
  if (ensemble.n_features != layout.size()) {
    fail(ErrorKind::DimensionMismatch, "ensemble width does not match the feature layout");
  }
  return make_cluster_weights(feature_importance(ensemble, reference), layout, warnings);
}

void validate(const ClusterWeights& w) {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvariantViolation, what); };
  const FeatureLayout& layout = w.layout;
  if (layout.audio_k < 0 || layout.visual_k < 0 ||
      layout.cluster_count() < static_cast<int>(kTopClusters) ||
      static_cast<int>(w.weights.size()) != layout.size() ||
      w.importance.size() != w.weights.size() ||
      static_cast<int>(w.cluster_weights.size()) != layout.cluster_count() ||
      w.cluster_importance.size() != w.cluster_weights.size() || w.top5.size() != kTopClusters) {
    bad("cluster weights have inconsistent shapes");
  }
  for (const auto* v : {&w.weights, &w.cluster_weights}) {
    double sum = 0.0;
    for (double x : *v) {
      if (!(x >= 0.0)) bad("negative or non-finite weight");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("weights do not sum to 1");
  }
  for (std::size_t i = 0; i < w.top5.size(); ++i) {
    if (w.top5[i] < 0 || w.top5[i] >= layout.cluster_count()) bad("top5 index out of range");
    if (i > 0 && w.cluster_weights[w.top5[i]] > w.cluster_weights[w.top5[i - 1]]) {
      bad("top5 not sorted by descending weight");
    }
  }
}

std::vector<ImportanceRow> report_importance(const ClusterWeights& weights,
                                             const std::vector<ClusterSummary>& audio_summary,
                                             const std::vector<ClusterSummary>& visual_summary) {
  const FeatureLayout& layout = weights.layout;
  std::vector<int> order(weights.cluster_weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return weights.cluster_weights[a] > weights.cluster_weights[b];
  });
  std::vector<ImportanceRow> rows;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int c = order[r];
    const auto& summaries =
        layout.modality_of_cluster(c) == Modality::Audio ? audio_summary : visual_summary;
    const int local = layout.local_id(c);
    ImportanceRow row;
    row.rank = static_cast<int>(r) + 1;
    row.cluster = c;
    row.name = layout.cluster_name(c);
    row.label = local < static_cast<int>(summaries.size()) ? summaries[local].label() : "";
    row.importance = weights.cluster_importance[c];
    row.percent = 100.0 * weights.cluster_weights[c];
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json importance_to_json(const std::vector<ImportanceRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    out.push_back({{"rank", r.rank},
                   {"cluster", r.name},
                   {"label", r.label},
                   {"importance", r.importance},
                   {"percent", r.percent}});
  }
  return out;
}

std::string importance_to_text(const std::vector<ImportanceRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::ostringstream out;
  char buf[64];
  out << "rank  cluster  " << "label" << std::string(width - 5, ' ') << "  shap %\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%4d  %-7s  ", r.rank, r.name.c_str());
    out << buf << r.label << std::string(width - r.label.size(), ' ');
    std::snprintf(buf, sizeof(buf), "  %6.2f\n", r.percent);
    out << buf;
  }
  return out.str();
}

}  // namespace engage
