#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "engage/corpus.hpp"
#include "engage/matrix.hpp"

namespace engage {

struct KMeansOptions {
  int k = 10;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;
  // Independent k-means++ restarts; the fit with the lowest inertia wins.
  int n_init = 1;
};

struct ClusterModel {
  Modality modality = Modality::Audio;
  int k = 0;
  Matrix centroids;  // k x d
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  // Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_trace;
};

struct ClusterAssignment {
  std::string phrase;
  Modality modality = Modality::Audio;
  int cluster_id = 0;
  double distance = 0.0;
};

// k-means++ seeding followed by Lloyd iterations until the largest centroid
// shift drops below tol. Empty clusters are re-seeded at the point farthest
// from its centroid.
ClusterModel fit_kmeans(const Matrix& points, const KMeansOptions& options,
                        Modality modality = Modality::Audio);

// Nearest centroid; ties go to the lowest id.
ClusterAssignment assign(const ClusterModel& model, const Vector& vector,
                         std::string phrase = {});

struct ClusterSummary {
  int cluster_id = 0;
  std::size_t count = 0;
  std::vector<std::pair<std::string, std::size_t>> top_phrases;

  // Most frequent phrase, or "(empty)".
  std::string label() const;
};

std::vector<ClusterSummary> describe_clusters(const ClusterModel& model,
                                              const std::vector<ClusterAssignment>& assignments,
                                              std::size_t top_m = 5);

void validate(const ClusterModel& model);

}  // namespace engage
