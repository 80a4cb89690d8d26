#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "engage/corpus.hpp"

namespace engage {

inline constexpr int kSyntheticThemes = 10;  // per modality

struct SyntheticTheme {
  Modality modality = Modality::Audio;
  int index = 0;  // global: audio themes 0..9, visual themes 10..19
  std::string name;
  std::vector<std::string> phrases;  // normalized
};

// The fixed phrase pool: ten audio and ten visual themes whose phrases
// share a multi-word core, so they group tightly under the hashing
// embedder.
const std::vector<SyntheticTheme>& synthetic_themes();

// 20 weights, audio themes first. The largest five are v0, v1, a0, v4, a1;
// visual weights dominate audio ones.
std::vector<double> default_planted_weights();

struct SyntheticCorpus {
  std::vector<VideoRecord> records;
  std::vector<double> planted_weights;
  std::map<std::string, int> phrase_theme[2];  // [modality] normalized phrase -> global theme

  int theme_of(Modality m, const std::string& phrase) const;
  // Global theme indices of the five largest planted weights.
  std::vector<int> planted_top5() const;
};

// Each video draws five themes per modality uniformly with replacement and
// one phrase per draw. Engagement ratio = 0.02 + 0.1 * sigmoid(sum_i w_i c_i
// - mean + eps) with c_i the theme counts and eps ~ N(0, noise_sd). Labels
// are min-max normalized.
SyntheticCorpus generate_synthetic_corpus(std::size_t n_videos, const std::vector<double>& planted_weights,
                                          double noise_sd, std::uint64_t seed);

}  // namespace engage
