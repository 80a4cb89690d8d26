#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "engage/cluster.hpp"
#include "engage/matrix.hpp"

namespace engage {

enum class ModalityMask { Audio, Visual, Both };
enum class FrequencyWeighting { Share, Inverse };

std::string_view to_string(ModalityMask m);
ModalityMask parse_modality_mask(std::string_view name);
std::string_view to_string(FrequencyWeighting w);
FrequencyWeighting parse_frequency_weighting(std::string_view name);

// Corpus-wide share of descriptor occurrences per cluster, one vector per
// modality, each summing to 1.
struct ClusterShares {
  std::vector<double> audio;
  std::vector<double> visual;

  const std::vector<double>& of(Modality m) const {
    return m == Modality::Audio ? audio : visual;
  }
};

// Shares from raw occurrence counts with one pseudo-occurrence per cluster,
// so a cluster unseen in the corpus keeps a positive share.
ClusterShares compute_cluster_shares(std::span<const std::size_t> audio_counts,
                                     std::span<const std::size_t> visual_counts);

// Column layout with C = audio_k + visual_k clusters:
//   [0, audio_k)          audio indicators
//   [audio_k, C)          visual indicators
//   [C, C + audio_k)      audio weighted counts
//   [C + audio_k, 2C)     visual weighted counts
struct FeatureLayout {
  int audio_k = 10;
  int visual_k = 10;

  int size() const { return 2 * cluster_count(); }
  int cluster_count() const { return audio_k + visual_k; }
  // Cluster index in [0, C): audio clusters first.
  int cluster_of(int feature) const { return feature % cluster_count(); }
  Modality modality_of_cluster(int cluster) const {
    return cluster < audio_k ? Modality::Audio : Modality::Visual;
  }
  int local_id(int cluster) const { return cluster < audio_k ? cluster : cluster - audio_k; }
  int cluster_index(Modality m, int local) const { return m == Modality::Audio ? local : audio_k + local; }
  std::string feature_name(int feature) const;
  std::string cluster_name(int cluster) const;
  bool operator==(const FeatureLayout&) const = default;
};

struct VideoFeatureVector {
  std::vector<double> indicators;       // C
  std::vector<double> weighted_counts;  // C
  std::vector<int> counts;              // C raw counts before weighting
  ModalityMask mask = ModalityMask::Both;

  Vector dense() const;
};

VideoFeatureVector build_features(std::span<const ClusterAssignment> audio,
                                  std::span<const ClusterAssignment> visual,
                                  const ClusterShares& shares, ModalityMask mask,
                                  FrequencyWeighting weighting = FrequencyWeighting::Share);

// Layout of the active modality only: a masked-out modality contributes no
// columns.
FeatureLayout masked_layout(const FeatureLayout& full, ModalityMask mask);

// Drops the columns of the inactive modality; identity for Both.
VideoFeatureVector restrict_features(const VideoFeatureVector& f, const FeatureLayout& full,
                                     ModalityMask mask);

void write_features_csv(const std::string& path, const FeatureLayout& layout,
                        const std::vector<std::string>& ids, const Matrix& features);

}  // namespace engage
