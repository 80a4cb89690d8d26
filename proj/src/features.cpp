#include "engage/features.hpp"

#include <cmath>
#include <fstream>

namespace engage {

std::string_view to_string(ModalityMask m) {
  switch (m) {
    case ModalityMask::Audio: return "audio";
    case ModalityMask::Visual: return "visual";
    case ModalityMask::Both: return "both";
  }
  return "both";
}

ModalityMask parse_modality_mask(std::string_view name) {
  if (name == "audio") return ModalityMask::Audio;
  if (name == "visual") return ModalityMask::Visual;
  if (name == "both") return ModalityMask::Both;
  fail(ErrorKind::InvalidConfig, "unknown modality '" + std::string(name) + "'");
}

std::string_view to_string(FrequencyWeighting w) {
  return w == FrequencyWeighting::Share ? "share" : "inverse";
}

FrequencyWeighting parse_frequency_weighting(std::string_view name) {
  if (name == "share") return FrequencyWeighting::Share;
  if (name == "inverse") return FrequencyWeighting::Inverse;
  fail(ErrorKind::InvalidConfig, "unknown frequency weighting '" + std::string(name) + "'");
}

ClusterShares compute_cluster_shares(std::span<const std::size_t> audio_counts,
                                     std::span<const std::size_t> visual_counts) {
  auto shares = [](std::span<const std::size_t> counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c) + 1.0;
    std::vector<double> out;
    out.reserve(counts.size());
    for (auto c : counts) out.push_back((static_cast<double>(c) + 1.0) / total);
    return out;
  };
  return {shares(audio_counts), shares(visual_counts)};
}

std::string FeatureLayout::feature_name(int feature) const {
  const int cluster = cluster_of(feature);
  return (feature < cluster_count() ? "ind_" : "cnt_") + cluster_name(cluster);
}

std::string FeatureLayout::cluster_name(int cluster) const {
  return (cluster < audio_k ? "a" : "v") + std::to_string(local_id(cluster));
}

Vector VideoFeatureVector::dense() const {
  const auto half = static_cast<Eigen::Index>(indicators.size());
  Vector v(2 * half);
  for (Eigen::Index j = 0; j < half; ++j) {
    v[j] = indicators[j];
    v[half + j] = weighted_counts[j];
  }
  return v;
}

namespace {

std::vector<double> cluster_multipliers(const std::vector<double>& shares,
                                        FrequencyWeighting weighting) {
  if (weighting == FrequencyWeighting::Share) return shares;
  double total = 0.0;
  for (double s : shares) total += 1.0 / s;
  std::vector<double> out;
  out.reserve(shares.size());
  for (double s : shares) out.push_back((1.0 / s) / total);
  return out;
}

}  // namespace

VideoFeatureVector build_features(std::span<const ClusterAssignment> audio,
                                  std::span<const ClusterAssignment> visual,
                                  const ClusterShares& shares, ModalityMask mask,
                                  FrequencyWeighting weighting) {
  if (audio.size() != kDescriptorsPerModality || visual.size() != kDescriptorsPerModality) {
    fail(ErrorKind::WrongArity, "expected 5 audio and 5 visual assignments, got " +
                                    std::to_string(audio.size()) + " and " +
                                    std::to_string(visual.size()));
  }
  const int ka = static_cast<int>(shares.audio.size());
  const int kv = static_cast<int>(shares.visual.size());
  if (ka < 1 || kv < 1) fail(ErrorKind::InvalidWeights, "cluster shares must be non-empty");
  for (const auto* s : {&shares.audio, &shares.visual}) {
    double total = 0.0;
    for (double v : *s) {
      if (!(v > 0.0)) fail(ErrorKind::InvalidWeights, "cluster shares must be positive");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      fail(ErrorKind::InvalidWeights, "cluster shares must sum to 1");
    }
  }

  const int c_total = ka + kv;
  VideoFeatureVector f;
  f.mask = mask;
  f.indicators.assign(c_total, 0.0);
  f.weighted_counts.assign(c_total, 0.0);
  f.counts.assign(c_total, 0);

  auto fill = [&](std::span<const ClusterAssignment> list, Modality modality, int offset, int k) {
    const auto mult = cluster_multipliers(shares.of(modality), weighting);
    for (const auto& a : list) {
      if (a.cluster_id < 0 || a.cluster_id >= k) {
        fail(ErrorKind::UnknownCluster, "cluster id " + std::to_string(a.cluster_id) +
                                            " outside [0, " + std::to_string(k) + ")");
      }
      ++f.counts[offset + a.cluster_id];
    }
    const bool active = mask == ModalityMask::Both ||
                        (modality == Modality::Audio) == (mask == ModalityMask::Audio);
    if (!active) return;
    for (int c = 0; c < k; ++c) {
      const int n = f.counts[offset + c];
      if (n == 0) continue;
      f.indicators[offset + c] = 1.0;
      f.weighted_counts[offset + c] = n * mult[c];
    }
  };
  fill(audio, Modality::Audio, 0, ka);
  fill(visual, Modality::Visual, ka, kv);
  return f;
}

FeatureLayout masked_layout(const FeatureLayout& full, ModalityMask mask) {
  switch (mask) {
    case ModalityMask::Audio: return {full.audio_k, 0};
    case ModalityMask::Visual: return {0, full.visual_k};
    case ModalityMask::Both: break;
  }
  return full;
}

VideoFeatureVector restrict_features(const VideoFeatureVector& f, const FeatureLayout& full,
                                     ModalityMask mask) {
  if (static_cast<int>(f.indicators.size()) != full.cluster_count()) {
    fail(ErrorKind::DimensionMismatch, "feature vector does not match the layout");
  }
  if (mask == ModalityMask::Both) return f;
  const int begin = mask == ModalityMask::Audio ? 0 : full.audio_k;
  const int end = mask == ModalityMask::Audio ? full.audio_k : full.cluster_count();
  VideoFeatureVector out;
  out.mask = mask;
  out.indicators.assign(f.indicators.begin() + begin, f.indicators.begin() + end);
  out.weighted_counts.assign(f.weighted_counts.begin() + begin, f.weighted_counts.begin() + end);
  out.counts.assign(f.counts.begin() + begin, f.counts.begin() + end);
  return out;
}

void write_features_csv(const std::string& path, const FeatureLayout& layout,
                        const std::vector<std::string>& ids, const Matrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "video_id";
  for (int j = 0; j < layout.size(); ++j) out << ',' << layout.feature_name(j);
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < features.cols(); ++j) out << ',' << features(i, j);
    out << '\n';
  }
}

}  // namespace engage
