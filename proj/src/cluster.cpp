#include "engage/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "engage/rng.hpp"

namespace engage {

namespace {

struct LloydState {
  Matrix centroids;
  std::vector<int> labels;
  std::vector<double> sq_dist;
  std::vector<double> trace;
  double inertia = 0.0;
  int iterations = 0;
};

int nearest(const Matrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x,
            double& best_sq) {
  int best = 0;
  best_sq = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_sq) {
      best_sq = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double assign_all(const Matrix& points, LloydState& s) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double d = 0.0;
    s.labels[i] = nearest(s.centroids, points.row(i), d);
    s.sq_dist[i] = d;
    inertia += d;
  }
  return inertia;
}

// Greedy k-means++: each step draws several D^2-weighted candidates and
// keeps the one that lowers the potential the most.
Matrix seed_plus_plus(const Matrix& points, int k, Rng& rng) {
  const auto n = points.rows();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  chosen[first] = true;
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();

  std::vector<double> candidate_d2(static_cast<std::size_t>(n));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) {
      // Remaining points coincide with chosen centers.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      const auto pick = free[rng.below(free.size())];
      centroids.row(c) = points.row(pick);
      chosen[pick] = true;
      continue;
    }
    Eigen::Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    std::vector<double> best_d2;
    for (int t = 0; t < trials; ++t) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      Eigen::Index pick = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && r < acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = n - 1; i >= 0 && pick < 0; --i) {
          if (d2[i] > 0.0) pick = i;
        }
      }
      double potential = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        candidate_d2[i] = std::min(d2[i], (points.row(i) - points.row(pick)).squaredNorm());
        potential += candidate_d2[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best = pick;
        best_d2 = candidate_d2;
      }
    }
    centroids.row(c) = points.row(best);
    chosen[best] = true;
    d2 = std::move(best_d2);
  }
  return centroids;
}

LloydState run_lloyd(const Matrix& points, const KMeansOptions& opt, std::uint64_t seed) {
  const auto n = points.rows();
  Rng rng(seed);
  LloydState s;
  s.centroids = seed_plus_plus(points, opt.k, rng);
  s.labels.assign(static_cast<std::size_t>(n), 0);
  s.sq_dist.assign(static_cast<std::size_t>(n), 0.0);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    s.inertia = assign_all(points, s);
    s.trace.push_back(s.inertia);
    s.iterations = iter + 1;

    Matrix sums = Matrix::Zero(opt.k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(opt.k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(s.labels[i]) += points.row(i);
      ++counts[s.labels[i]];
    }
    Matrix next = s.centroids;
    std::vector<double> residual = s.sq_dist;
    for (int c = 0; c < opt.k; ++c) {
      if (counts[c] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      auto far = std::max_element(residual.begin(), residual.end()) - residual.begin();
      next.row(c) = points.row(far);
      residual[far] = -1.0;
    }
    double shift = 0.0;
    for (int c = 0; c < opt.k; ++c) {
      shift = std::max(shift, (next.row(c) - s.centroids.row(c)).norm());
    }
    s.centroids = std::move(next);
    if (shift < opt.tol) break;
  }
  // Labels must refer to the final centroids.
  s.inertia = assign_all(points, s);
  s.trace.push_back(s.inertia);
  return s;
}

}  // namespace

ClusterModel fit_kmeans(const Matrix& points, const KMeansOptions& options, Modality modality) {
  if (options.k < 1) fail(ErrorKind::InvalidConfig, "k must be positive");
  if (options.max_iter < 1) fail(ErrorKind::InvalidConfig, "max_iter must be >= 1");
  if (!(options.tol >= 0.0)) fail(ErrorKind::InvalidConfig, "tol must be >= 0");
  if (options.n_init < 1) fail(ErrorKind::InvalidConfig, "n_init must be >= 1");
  if (points.rows() < options.k) {
    fail(ErrorKind::TooFewPoints, std::to_string(points.rows()) + " points for k = " +
                                      std::to_string(options.k));
  }
  LloydState best;
  bool have = false;
  for (int r = 0; r < options.n_init; ++r) {
    const std::uint64_t seed = r == 0 ? options.seed : derive_seed(options.seed, "restart", r);
    LloydState s = run_lloyd(points, options, seed);
    if (!have || s.inertia < best.inertia) {
      best = std::move(s);
      have = true;
    }
  }
  ClusterModel model;
  model.modality = modality;
  model.k = options.k;
  model.centroids = std::move(best.centroids);
  model.inertia = best.inertia;
  model.seed = options.seed;
  model.iterations = best.iterations;
  model.inertia_trace = std::move(best.trace);
  return model;
}

ClusterAssignment assign(const ClusterModel& model, const Vector& vector, std::string phrase) {
  if (vector.size() != model.centroids.cols()) {
    fail(ErrorKind::DimensionMismatch, "vector has " + std::to_string(vector.size()) +
                                           " dims, centroids have " +
                                           std::to_string(model.centroids.cols()));
  }
  double sq = 0.0;
  const int id = nearest(model.centroids, vector.transpose(), sq);
  return {std::move(phrase), model.modality, id, std::sqrt(sq)};
}

std::string ClusterSummary::label() const {
  return top_phrases.empty() ? std::string("(empty)") : top_phrases.front().first;
}

std::vector<ClusterSummary> describe_clusters(const ClusterModel& model,
                                              const std::vector<ClusterAssignment>& assignments,
                                              std::size_t top_m) {
  std::vector<std::map<std::string, std::size_t>> members(static_cast<std::size_t>(model.k));
  std::vector<ClusterSummary> out(static_cast<std::size_t>(model.k));
  for (int c = 0; c < model.k; ++c) out[c].cluster_id = c;
  for (const auto& a : assignments) {
    if (a.cluster_id < 0 || a.cluster_id >= model.k) {
      fail(ErrorKind::UnknownCluster, "assignment to cluster " + std::to_string(a.cluster_id));
    }
    ++members[a.cluster_id][a.phrase];
    ++out[a.cluster_id].count;
  }
  for (int c = 0; c < model.k; ++c) {
    std::vector<std::pair<std::string, std::size_t>> ranked(members[c].begin(), members[c].end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > top_m) ranked.resize(top_m);
    out[c].top_phrases = std::move(ranked);
  }
  return out;
}

void validate(const ClusterModel& model) {
  if (model.k < 1 || model.centroids.rows() != model.k || model.centroids.cols() < 1) {
    fail(ErrorKind::InvariantViolation, "cluster model centroid count does not match k");
  }
  if (!model.centroids.allFinite()) {
    fail(ErrorKind::InvariantViolation, "cluster model has non-finite centroids");
  }
  if (!(model.inertia >= 0.0)) fail(ErrorKind::InvariantViolation, "negative inertia");
}

}  // namespace engage
