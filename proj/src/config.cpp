#include "engage/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace engage {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& doc, std::initializer_list<const char*> known, const std::string& where) {
  if (!doc.is_object()) fail(ErrorKind::InvalidConfig, where + " must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!names.count(it.key())) fail(ErrorKind::InvalidConfig, "unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidConfig, std::string("bad value for '") + key + "': " + ex.what());
  }
}

template <typename R>
void read_range(const json& doc, const char* key, R& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_array() || it->size() != 2) {
    fail(ErrorKind::InvalidConfig, std::string("'") + key + "' must be a [lo, hi] pair");
  }
  try {
    out.lo = (*it)[0].get<decltype(out.lo)>();
    out.hi = (*it)[1].get<decltype(out.hi)>();
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidConfig, std::string("bad range for '") + key + "': " + ex.what());
  }
}

}  // namespace

ordered_json to_json(const GbtConfig& c) {
  return {{"n_estimators", c.n_estimators},
          {"max_depth", c.max_depth},
          {"learning_rate", c.learning_rate},
          {"min_child_weight", c.min_child_weight},
          {"subsample", c.subsample},
          {"colsample", c.colsample},
          {"reg_lambda", c.reg_lambda},
          {"seed", c.seed},
          {"early_stopping_rounds", c.early_stopping_rounds}};
}

GbtConfig gbt_config_from_json(const json& doc, GbtConfig c) {
  reject_unknown(doc,
                 {"n_estimators", "max_depth", "learning_rate", "min_child_weight", "subsample",
                  "colsample", "reg_lambda", "seed", "early_stopping_rounds"},
                 "gbt");
  read(doc, "n_estimators", c.n_estimators);
  read(doc, "max_depth", c.max_depth);
  read(doc, "learning_rate", c.learning_rate);
  read(doc, "min_child_weight", c.min_child_weight);
  read(doc, "subsample", c.subsample);
  read(doc, "colsample", c.colsample);
  read(doc, "reg_lambda", c.reg_lambda);
  read(doc, "seed", c.seed);
  read(doc, "early_stopping_rounds", c.early_stopping_rounds);
  return c;
}

ordered_json to_json(const SearchSpace& s) {
  return {{"learning_rate", {s.learning_rate.lo, s.learning_rate.hi}},
          {"max_depth", {s.max_depth.lo, s.max_depth.hi}},
          {"n_estimators", {s.n_estimators.lo, s.n_estimators.hi}},
          {"min_child_weight", {s.min_child_weight.lo, s.min_child_weight.hi}},
          {"subsample", {s.subsample.lo, s.subsample.hi}},
          {"colsample", {s.colsample.lo, s.colsample.hi}},
          {"reg_lambda", {s.reg_lambda.lo, s.reg_lambda.hi}}};
}

SearchSpace search_space_from_json(const json& doc, SearchSpace s) {
  reject_unknown(doc,
                 {"learning_rate", "max_depth", "n_estimators", "min_child_weight", "subsample",
                  "colsample", "reg_lambda"},
                 "search_space");
  read_range(doc, "learning_rate", s.learning_rate);
  read_range(doc, "max_depth", s.max_depth);
  read_range(doc, "n_estimators", s.n_estimators);
  read_range(doc, "min_child_weight", s.min_child_weight);
  read_range(doc, "subsample", s.subsample);
  read_range(doc, "colsample", s.colsample);
  read_range(doc, "reg_lambda", s.reg_lambda);
  return s;
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
  if (embedding_provider != "hashing" && embedding_provider != "precomputed") {
    bad("embedding_provider must be 'hashing' or 'precomputed'");
  }
  if (pca_dims < 1) bad("pca_dims must be >= 1");
  if (audio_k < 1 || visual_k < 1) bad("cluster counts must be >= 1");
  if (audio_k + visual_k < 5) bad("at least 5 clusters in total are needed for the top-5 ranking");
  if (kmeans_max_iter < 1 || kmeans_n_init < 1 || !(kmeans_tol >= 0.0)) bad("invalid k-means settings");
  if (tune_trials < 1) bad("tune_trials must be >= 1");
  gbt.validate();
  try {
    search_space.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

ordered_json to_json(const PipelineConfig& c) {
  ordered_json doc;
  doc["seed"] = c.seed;
  doc["embedding"] = {{"provider", c.embedding_provider}, {"path", c.embeddings_path}};
  doc["pca"] = {{"enabled", c.pca_enabled}, {"dims", c.pca_dims}};
  doc["kmeans"] = {{"audio_k", c.audio_k},
                   {"visual_k", c.visual_k},
                   {"max_iter", c.kmeans_max_iter},
                   {"tol", c.kmeans_tol},
                   {"n_init", c.kmeans_n_init}};
  doc["normalization"] = std::string(to_string(c.normalization));
  doc["frequency_weighting"] = std::string(to_string(c.frequency_weighting));
  doc["modality"] = std::string(to_string(c.modality));
  doc["gbt"] = to_json(c.gbt);
  doc["tune"] = {{"enabled", c.tune_enabled},
                 {"trials", c.tune_trials},
                 {"parallel_warmup", c.parallel_warmup},
                 {"average_trials", c.average_trials}};
  doc["search_space"] = to_json(c.search_space);
  doc["describe_top_m"] = c.describe_top_m;
  return doc;
}

PipelineConfig config_from_json(const json& doc, PipelineConfig c) {
  reject_unknown(doc,
                 {"seed", "embedding", "pca", "kmeans", "normalization", "frequency_weighting", "modality",
                  "gbt", "tune", "search_space", "describe_top_m"},
                 "config");
  read(doc, "seed", c.seed);
  if (doc.contains("embedding")) {
    const auto& e = doc["embedding"];
    reject_unknown(e, {"provider", "path"}, "embedding");
    read(e, "provider", c.embedding_provider);
    read(e, "path", c.embeddings_path);
  }
  if (doc.contains("pca")) {
    const auto& p = doc["pca"];
    reject_unknown(p, {"enabled", "dims"}, "pca");
    read(p, "enabled", c.pca_enabled);
    read(p, "dims", c.pca_dims);
  }
  if (doc.contains("kmeans")) {
    const auto& k = doc["kmeans"];
    reject_unknown(k, {"audio_k", "visual_k", "max_iter", "tol", "n_init"}, "kmeans");
    read(k, "audio_k", c.audio_k);
    read(k, "visual_k", c.visual_k);
    read(k, "max_iter", c.kmeans_max_iter);
    read(k, "tol", c.kmeans_tol);
    read(k, "n_init", c.kmeans_n_init);
  }
  std::string name;
  if (doc.contains("normalization")) {
    read(doc, "normalization", name);
    c.normalization = parse_normalization_scheme(name);
  }
  if (doc.contains("frequency_weighting")) {
    read(doc, "frequency_weighting", name);
    c.frequency_weighting = parse_frequency_weighting(name);
  }
  if (doc.contains("modality")) {
    read(doc, "modality", name);
    c.modality = parse_modality_mask(name);
  }
  if (doc.contains("gbt")) c.gbt = gbt_config_from_json(doc["gbt"], c.gbt);
  if (doc.contains("tune")) {
    const auto& t = doc["tune"];
    reject_unknown(t, {"enabled", "trials", "parallel_warmup", "average_trials"}, "tune");
    read(t, "enabled", c.tune_enabled);
    read(t, "trials", c.tune_trials);
    read(t, "parallel_warmup", c.parallel_warmup);
    read(t, "average_trials", c.average_trials);
  }
  if (doc.contains("search_space")) c.search_space = search_space_from_json(doc["search_space"], c.search_space);
  read(doc, "describe_top_m", c.describe_top_m);
  c.validate();
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json doc = json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::MalformedJson, path + " is not valid JSON");
  return doc;
}

PipelineConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

}  // namespace engage
