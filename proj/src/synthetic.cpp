#include "engage/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "engage/rng.hpp"

namespace engage {

namespace {

struct ThemeSeed {
  const char* core;
  std::array<const char*, 6> variants;
};

constexpr ThemeSeed kAudioSeeds[kSyntheticThemes] = {
    {"energetic music", {"upbeat", "bass-heavy", "driving", "pumping", "high-energy", "fast-tempo"}},
    {"voice narration", {"clear", "calm", "confident", "explanatory", "friendly", "articulate"}},
    {"sound effects", {"whoosh", "ding", "pop", "swoosh", "click", "impact"}},
    {"ambient background noise", {"quiet", "natural", "outdoor", "room", "distant", "faint"}},
    {"trending audio clip", {"viral", "meme", "remixed", "popular", "catchy", "looping"}},
    {"dramatic orchestral score", {"cinematic", "swelling", "epic", "suspenseful", "brooding", "grand"}},
    {"audience laughter track", {"canned", "scattered", "roaring", "sudden", "warm", "rolling"}},
    {"long silent pause", {"awkward", "deliberate", "brief", "complete", "uneasy", "sudden-stop"}},
    {"interview dialogue exchange", {"casual", "heated", "candid", "rapid", "unscripted", "two-person"}},
    {"rhythmic drum beat", {"tribal", "electronic", "syncopated", "marching", "hip-hop", "steady-pulse"}},
};

constexpr ThemeSeed kVisualSeeds[kSyntheticThemes] = {
    {"fast jump cuts", {"rapid", "rhythmic", "frequent", "snappy", "beat-synced", "quick-fire"}},
    {"on-screen text overlay", {"bold", "captioned", "bullet", "animated-word", "highlighted", "subtitle"}},
    {"bright saturated scene", {"colorful", "high-contrast", "vivid", "sunny", "neon", "glossy"}},
    {"static camera shot", {"locked-off", "unmoving", "long-take", "tripod", "fixed-angle", "still"}},
    {"close-up facial expression", {"reaction", "surprised", "emotive", "tight", "smiling", "wide-eyed"}},
    {"animated infographic chart", {"motion-graphic", "data", "cartoon", "map-based", "stat", "3d"}},
    {"aerial drone footage", {"sweeping", "overhead", "coastal", "mountain", "city", "soaring"}},
    {"split screen comparison", {"side-by-side", "before-after", "dual", "mirrored", "stacked", "versus"}},
    {"hands-on product demonstration", {"unboxing", "tactile", "step-by-step", "tabletop", "detailed", "live"}},
    {"whiteboard sketch drawing", {"marker", "hand-drawn", "doodle", "diagram", "scribbled", "erasable"}},
};

std::vector<std::string> theme_phrases(const ThemeSeed& seed) {
  std::vector<std::string> out{seed.core};
  for (const char* v : seed.variants) {
    out.push_back(std::string(v) + " " + seed.core);
    out.push_back(std::string(seed.core) + ", " + v);
  }
  return out;
}

std::string title_case(const std::string& s) {
  std::string out = s;
  bool start = true;
  for (char& c : out) {
    if (start && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    start = c == ' ';
  }
  return out;
}

}  // namespace

const std::vector<SyntheticTheme>& synthetic_themes() {
  static const std::vector<SyntheticTheme> themes = [] {
    std::vector<SyntheticTheme> t;
    for (int i = 0; i < kSyntheticThemes; ++i) {
      t.push_back({Modality::Audio, i, kAudioSeeds[i].core, theme_phrases(kAudioSeeds[i])});
    }
    for (int i = 0; i < kSyntheticThemes; ++i) {
      t.push_back({Modality::Visual, kSyntheticThemes + i, kVisualSeeds[i].core,
                   theme_phrases(kVisualSeeds[i])});
    }
    return t;
  }();
  return themes;
}

std::vector<double> default_planted_weights() {
  return {// audio
          0.90, 0.60, 0.10, 0.05, 0.12, 0.08, 0.04, 0.10, 0.06, 0.09,
          // visual
          1.20, 1.00, 0.07, 0.11, 0.75, 0.05, 0.09, 0.04, 0.12, 0.06};
}

int SyntheticCorpus::theme_of(Modality m, const std::string& phrase) const {
  const auto& map = phrase_theme[m == Modality::Audio ? 0 : 1];
  auto it = map.find(phrase);
  return it == map.end() ? -1 : it->second;
}

std::vector<int> SyntheticCorpus::planted_top5() const {
  std::vector<int> order(planted_weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(planted_weights[a]) > std::abs(planted_weights[b]);
  });
  order.resize(std::min<std::size_t>(5, order.size()));
  return order;
}

SyntheticCorpus generate_synthetic_corpus(std::size_t n_videos, const std::vector<double>& planted_weights,
                                          double noise_sd, std::uint64_t seed) {
  if (planted_weights.size() != 2 * kSyntheticThemes) {
    fail(ErrorKind::InvalidWeights, "planted weights must cover all 20 themes");
  }
  for (double w : planted_weights) {
    if (!std::isfinite(w)) fail(ErrorKind::InvalidWeights, "planted weights must be finite");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    fail(ErrorKind::InvalidWeights, "noise_sd must be a finite value >= 0");
  }
  if (n_videos == 0) fail(ErrorKind::EmptyCorpus, "n_videos must be positive");

  const auto& themes = synthetic_themes();
  SyntheticCorpus corpus;
  corpus.planted_weights = planted_weights;
  for (const auto& t : themes) {
    for (const auto& p : t.phrases) corpus.phrase_theme[t.modality == Modality::Audio ? 0 : 1][p] = t.index;
  }

  // Each theme count has mean 5 / 10 per video.
  const double center = 0.5 * std::accumulate(planted_weights.begin(), planted_weights.end(), 0.0);
  static const char* kCategories[] = {"science", "history", "technology", "finance", "health", "travel"};

  Rng rng(seed);
  std::vector<double> ratios;
  ratios.reserve(n_videos);
  for (std::size_t v = 0; v < n_videos; ++v) {
    VideoRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "syn%06zu", v);
    r.id = id;
    r.title = "Synthetic short " + std::to_string(v);
    r.category = kCategories[rng.below(std::size(kCategories))];
    r.duration_s = static_cast<double>(rng.integer(10, 90));

    double z = -center;
    nlohmann::json raw;
    for (int m = 0; m < 2; ++m) {
      auto& slots = m == 0 ? r.descriptors.audio : r.descriptors.visual;
      nlohmann::json display = nlohmann::json::array();
      for (auto& slot : slots) {
        const auto& theme = themes[m * kSyntheticThemes + static_cast<int>(rng.below(kSyntheticThemes))];
        slot = theme.phrases[rng.below(theme.phrases.size())];
        z += planted_weights[theme.index];
        display.push_back(title_case(slot));
      }
      raw[m == 0 ? "audio" : "video"] = display;
    }
    r.vlm_raw = raw.dump();
    z += noise_sd * rng.normal();
    const double ratio = 0.02 + 0.1 / (1.0 + std::exp(-z));
    r.views = static_cast<std::uint64_t>(std::llround(std::exp(rng.uniform(std::log(2e4), std::log(2e6)))));
    r.likes = static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(r.views)));
    ratios.push_back(compute_engagement(r.likes, r.views));
    corpus.records.push_back(std::move(r));
  }
  const auto normalized = normalize_engagement(ratios);
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    corpus.records[i].engagement = {ratios[i], normalized[i]};
  }
  return corpus;
}

}  // namespace engage
