#include "engage/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "engage/rng.hpp"

namespace engage {

using nlohmann::json;

std::string_view to_string(Modality m) {
  return m == Modality::Audio ? "audio" : "visual";
}

std::string_view to_string(NormalizationScheme s) {
  return s == NormalizationScheme::MinMax ? "minmax" : "quantile";
}

NormalizationScheme parse_normalization_scheme(std::string_view name) {
  if (name == "minmax") return NormalizationScheme::MinMax;
  if (name == "quantile") return NormalizationScheme::Quantile;
  fail(ErrorKind::InvalidConfig,
       "unknown normalization scheme '" + std::string(name) + "'");
}

void PhraseFrequency::add(const DescriptorCandidates& candidates) {
  for (const auto& p : candidates.audio) {
    auto n = normalize_phrase(p);
    if (!n.empty()) ++audio[n];
  }
  for (const auto& p : candidates.visual) {
    auto n = normalize_phrase(p);
    if (!n.empty()) ++visual[n];
  }
}

namespace {

std::vector<std::string> read_phrase_list(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    fail(ErrorKind::SchemaViolation, std::string("missing key \"") + key + "\"");
  }
  if (!it->is_array()) {
    fail(ErrorKind::SchemaViolation, std::string("\"") + key + "\" is not a list");
  }
  if (it->empty()) {
    fail(ErrorKind::SchemaViolation, std::string("\"") + key + "\" is empty");
  }
  if (it->size() > kMaxCandidatesPerModality) {
    fail(ErrorKind::SchemaViolation,
         std::string("\"") + key + "\" has more than 20 entries");
  }
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& entry : *it) {
    if (!entry.is_string()) {
      fail(ErrorKind::SchemaViolation,
           std::string("non-string entry in \"") + key + "\"");
    }
    out.push_back(entry.get<std::string>());
  }
  return out;
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
         (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
}

std::vector<std::string> select_top(const std::vector<std::string>& raw,
                                    const std::map<std::string, std::size_t>& freq,
                                    Modality modality, Warnings* warnings) {
  std::vector<std::string> phrases;
  for (const auto& p : raw) {
    auto n = normalize_phrase(p);
    if (!n.empty()) phrases.push_back(std::move(n));
  }
  if (phrases.empty()) {
    fail(ErrorKind::EmptyModality,
         std::string("no usable ") + std::string(to_string(modality)) +
             " descriptors");
  }
  if (phrases.size() == kDescriptorsPerModality) return phrases;

  std::sort(phrases.begin(), phrases.end());
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());
  auto count = [&](const std::string& p) {
    auto it = freq.find(p);
    return it == freq.end() ? std::size_t{0} : it->second;
  };
  std::stable_sort(phrases.begin(), phrases.end(),
                   [&](const std::string& a, const std::string& b) {
                     return count(a) > count(b);
                   });
  if (phrases.size() > kDescriptorsPerModality) {
    phrases.resize(kDescriptorsPerModality);
  } else if (phrases.size() < kDescriptorsPerModality) {
    warn(warnings, std::string(to_string(modality)) + " list padded from " +
                       std::to_string(phrases.size()) + " to 5 phrases");
    const std::string top = phrases.front();
    while (phrases.size() < kDescriptorsPerModality) phrases.push_back(top);
  }
  return phrases;
}

}  // namespace

namespace {

// Raw line breaks and tabs inside string literals become spaces; model
// output wrapped across lines is otherwise rejected by a strict parser.
std::string soften_string_controls(std::string_view raw) {
  std::string out(raw);
  bool in_string = false;
  bool escaped = false;
  for (char& c : out) {
    if (!in_string) {
      in_string = c == '"';
      continue;
    }
    if (escaped) {
      escaped = false;
    } else if (c == '\\') {
      escaped = true;
    } else if (c == '"') {
      in_string = false;
    } else if (c == '\n' || c == '\r' || c == '\t') {
      c = ' ';
    }
  }
  return out;
}

}  // namespace

DescriptorCandidates parse_vlm_response(std::string_view raw) {
  const std::string text = soften_string_controls(raw);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::MalformedJson, "response is not valid JSON");
  if (!doc.is_object()) fail(ErrorKind::SchemaViolation, "response is not a JSON object");
  DescriptorCandidates out;
  out.audio = read_phrase_list(doc, "audio");
  out.visual = read_phrase_list(doc, "video");
  return out;
}

std::string normalize_phrase(std::string_view phrase) {
  std::size_t begin = 0;
  std::size_t end = phrase.size();
  auto trimmable = [](unsigned char c) { return is_space(c) || is_punct(c); };
  while (begin < end && trimmable(static_cast<unsigned char>(phrase[begin]))) ++begin;
  while (end > begin && trimmable(static_cast<unsigned char>(phrase[end - 1]))) --end;

  std::string out;
  out.reserve(end - begin);
  bool pending_space = false;
  for (std::size_t i = begin; i < end; ++i) {
    auto c = static_cast<unsigned char>(phrase[i]);
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

DescriptorSet filter_top5(const DescriptorCandidates& candidates,
                          const PhraseFrequency& corpus_freq,
                          Warnings* warnings) {
  DescriptorSet set;
  auto audio = select_top(candidates.audio, corpus_freq.audio, Modality::Audio, warnings);
  auto visual = select_top(candidates.visual, corpus_freq.visual, Modality::Visual, warnings);
  std::move(audio.begin(), audio.end(), set.audio.begin());
  std::move(visual.begin(), visual.end(), set.visual.begin());
  return set;
}

double compute_engagement(std::uint64_t likes, std::uint64_t views) {
  if (views == 0) fail(ErrorKind::ZeroViews, "views = 0");
  return static_cast<double>(likes) / static_cast<double>(views);
}

std::vector<double> normalize_engagement(std::span<const double> ratios,
                                         NormalizationScheme scheme,
                                         Warnings* warnings) {
  if (ratios.empty()) fail(ErrorKind::EmptyCorpus, "no engagement values");
  const auto [lo_it, hi_it] = std::minmax_element(ratios.begin(), ratios.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(ratios.size(), 0.5);
  if (!(hi > lo)) {
    warn(warnings, "constant engagement across corpus; all labels set to 0.5");
    return out;
  }
  if (scheme == NormalizationScheme::MinMax) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      out[i] = (ratios[i] - lo) / range;
    }
    return out;
  }
  // Quantile: average rank of ties scaled to [0, 1].
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ratios[a] < ratios[b]; });
  const double denom = static_cast<double>(ratios.size() - 1);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && ratios[order[j + 1]] == ratios[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t t = i; t <= j; ++t) out[order[t]] = rank / denom;
    i = j + 1;
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<std::string>& ids, std::uint64_t seed) {
  if (ids.size() < 10) {
    fail(ErrorKind::TooFewRecords,
         "need at least 10 records to split, got " + std::to_string(ids.size()));
  }
  std::vector<std::string> shuffled = ids;
  Rng rng(seed);
  rng.shuffle(shuffled);
  const std::size_t n = shuffled.size();
  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_val = n * 15 / 100;
  DatasetSplit split;
  split.seed = seed;
  split.train_ids.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.val_ids.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  split.test_ids.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return split;
}

DescriptorCandidates to_candidates(const DescriptorSet& set) {
  DescriptorCandidates c;
  c.audio.assign(set.audio.begin(), set.audio.end());
  c.visual.assign(set.visual.begin(), set.visual.end());
  return c;
}

}  // namespace engage
