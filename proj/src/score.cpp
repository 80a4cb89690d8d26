#include "engage/score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace engage {

nlohmann::ordered_json MetricReport::to_json() const {
  return {{"mae", mae},
          {"rmse", rmse},
          {"r2", r2},
          {"spearman", spearman},
          {"kendall_tau_b", kendall_tau_b},
          {"pairwise_accuracy", pairwise_accuracy},
          {"n", n}};
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::LengthMismatch, "predictions and targets differ in length");
  }
  if (a.size() < 2) fail(ErrorKind::TooFew, "metrics need at least 2 samples");
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Number of tied pairs among runs of equal values in an already sorted
// sequence.
template <typename Eq>
double tied_pairs(std::size_t n, Eq equal) {
  double ties = 0.0;
  std::size_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      ties += 0.5 * static_cast<double>(run) * static_cast<double>(run - 1);
      run = 1;
    }
  }
  ties += 0.5 * static_cast<double>(run) * static_cast<double>(run - 1);
  return ties;
}

// Sorts v and returns the number of strict inversions.
double merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0.0;
  const std::size_t mid = lo + (hi - lo) / 2;
  double swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<double>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> predictions, std::span<const double> targets) {
  check_pair(predictions, targets);
  return pearson(average_ranks(predictions), average_ranks(targets));
}

// Knight's algorithm: sort by (target, prediction), count ties, then count
// prediction inversions with a merge sort.
PairCounts count_pairs(std::span<const double> predictions, std::span<const double> targets) {
  check_pair(predictions, targets);
  const std::size_t n = targets.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (targets[a] != targets[b]) return targets[a] < targets[b];
    return predictions[a] < predictions[b];
  });
  PairCounts c;
  c.total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  c.tied_targets = tied_pairs(n, [&](std::size_t i, std::size_t j) {
    return targets[order[i]] == targets[order[j]];
  });
  c.tied_both = tied_pairs(n, [&](std::size_t i, std::size_t j) {
    return targets[order[i]] == targets[order[j]] && predictions[order[i]] == predictions[order[j]];
  });
  std::vector<double> pred(n);
  for (std::size_t i = 0; i < n; ++i) pred[i] = predictions[order[i]];
  std::vector<double> buf(n);
  c.discordant = merge_count(pred, buf, 0, n);
  c.tied_predictions = tied_pairs(n, [&](std::size_t i, std::size_t j) { return pred[i] == pred[j]; });
  c.concordant = c.total - c.tied_targets - c.tied_predictions + c.tied_both - c.discordant;
  return c;
}

double kendall_tau_b(std::span<const double> predictions, std::span<const double> targets) {
  const PairCounts c = count_pairs(predictions, targets);
  const double denom = (c.total - c.tied_targets) * (c.total - c.tied_predictions);
  if (!(denom > 0.0)) return 0.0;
  return (c.concordant - c.discordant) / std::sqrt(denom);
}

double pairwise_accuracy(std::span<const double> predictions, std::span<const double> targets) {
  const PairCounts c = count_pairs(predictions, targets);
  const double comparable = c.total - c.tied_targets;
  if (!(comparable > 0.0)) return 0.0;
  return (c.concordant + 0.5 * (c.tied_predictions - c.tied_both)) / comparable;
}

MetricReport compute_metrics(std::span<const double> predictions, std::span<const double> targets) {
  check_pair(predictions, targets);
  MetricReport m;
  m.n = targets.size();
  const double n = static_cast<double>(m.n);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double d = predictions[i] - targets[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double ss_tot = 0.0;
  for (double t : targets) ss_tot += (t - mean) * (t - mean);
  m.r2 = ss_tot > 0.0 ? 1.0 - sq_sum / ss_tot : (sq_sum == 0.0 ? 1.0 : 0.0);
  m.spearman = spearman(predictions, targets);

  const PairCounts c = count_pairs(predictions, targets);
  const double denom = (c.total - c.tied_targets) * (c.total - c.tied_predictions);
  m.kendall_tau_b = denom > 0.0 ? (c.concordant - c.discordant) / std::sqrt(denom) : 0.0;
  const double comparable = c.total - c.tied_targets;
  m.pairwise_accuracy =
      comparable > 0.0 ? (c.concordant + 0.5 * (c.tied_predictions - c.tied_both)) / comparable : 0.0;
  return m;
}

double evaluate_engagement(std::span<const double> weights, const Vector& features) {
  if (static_cast<Eigen::Index>(weights.size()) != features.size()) {
    fail(ErrorKind::DimensionMismatch, "weights have " + std::to_string(weights.size()) +
                                           " entries, features have " +
                                           std::to_string(features.size()));
  }
  double e = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) e += weights[i] * features[static_cast<Eigen::Index>(i)];
  return e;
}

double evaluate_engagement(const ClusterWeights& weights, const VideoFeatureVector& features) {
  return evaluate_engagement(weights.weights, features.dense());
}

JudgeResult judge_score(std::span<const double> weights, std::span<const double> sub_scores) {
  if (weights.size() != kTopClusters || sub_scores.size() != kTopClusters) {
    fail(ErrorKind::WrongArity, "judge score needs exactly 5 weights and 5 sub-scores");
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::InvalidWeights, "judge weights must be >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) fail(ErrorKind::WeightSumZero, "judge weights sum to zero");
  for (double s : sub_scores) {
    if (!(s >= 0.0 && s <= kMaxSubScore)) {
      fail(ErrorKind::ScoreOutOfRange, "sub-score " + std::to_string(s) + " outside [0, 10]");
    }
  }
  JudgeResult r;
  double total = 0.0;
  for (std::size_t i = 0; i < kTopClusters; ++i) {
    JudgeContribution c;
    c.cluster = static_cast<int>(i);
    c.weight = weights[i];
    c.score = sub_scores[i];
    c.share = weights[i] / wsum;
    c.points = weights[i] * sub_scores[i] / wsum;
    total += weights[i] * sub_scores[i];
    r.contributions.push_back(c);
  }
  const auto [lo, hi] = std::minmax_element(sub_scores.begin(), sub_scores.end());
  // A weighted mean never leaves [min s, max s]; clamping absorbs rounding.
  r.score = std::clamp(total / wsum, *lo, *hi);
  return r;
}

}  // namespace engage
