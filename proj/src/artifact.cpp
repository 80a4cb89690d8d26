#include "engage/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace engage {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json vec_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vec_from(const json& doc) {
  Vector v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) v[static_cast<Eigen::Index>(i)] = doc[i].get<double>();
  return v;
}

ordered_json mat_json(const Matrix& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix mat_from(const json& doc, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(doc.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(doc[0].size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = doc[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorKind::InvariantViolation, "ragged matrix in artifact");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Modality parse_modality(const std::string& name) {
  if (name == "audio") return Modality::Audio;
  if (name == "visual") return Modality::Visual;
  fail(ErrorKind::SchemaViolation, "unknown modality '" + name + "'");
}

ordered_json metrics_json(const MetricReport& m) { return m.to_json(); }

MetricReport metrics_from(const json& doc) {
  MetricReport m;
  m.mae = doc.at("mae").get<double>();
  m.rmse = doc.at("rmse").get<double>();
  m.r2 = doc.at("r2").get<double>();
  m.spearman = doc.at("spearman").get<double>();
  m.kendall_tau_b = doc.at("kendall_tau_b").get<double>();
  m.pairwise_accuracy = doc.at("pairwise_accuracy").get<double>();
  m.n = doc.at("n").get<std::size_t>();
  return m;
}

ordered_json freq_json(const std::map<std::string, std::size_t>& freq) {
  ordered_json out = ordered_json::object();
  for (const auto& [phrase, n] : freq) out[phrase] = n;
  return out;
}

std::map<std::string, std::size_t> freq_from(const json& doc) {
  std::map<std::string, std::size_t> out;
  for (auto it = doc.begin(); it != doc.end(); ++it) out[it.key()] = it.value().get<std::size_t>();
  return out;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double RatingTable::rate(double x) const {
  if (total == 0) return 0.0;
  double below = 0.0;
  double equal = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < x) below += static_cast<double>(counts[i]);
    else if (values[i] == x) equal += static_cast<double>(counts[i]);
  }
  const double q = (below + 0.5 * equal) / static_cast<double>(total);
  return std::clamp(kMaxSubScore * q, 0.0, kMaxSubScore);
}

RatingTable make_rating_table(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  RatingTable t;
  t.total = samples.size();
  for (double s : samples) {
    if (t.values.empty() || t.values.back() != s) {
      t.values.push_back(s);
      t.counts.push_back(0);
    }
    ++t.counts.back();
  }
  return t;
}

ordered_json to_json(const PcaModel& m) {
  return {{"mean", vec_json(m.mean)},
          {"components", mat_json(m.components)},
          {"explained_variance", vec_json(m.explained_variance)}};
}

PcaModel pca_from_json(const json& doc) {
  PcaModel m;
  m.mean = vec_from(doc.at("mean"));
  m.components = mat_from(doc.at("components"), m.mean.size());
  m.explained_variance = vec_from(doc.at("explained_variance"));
  return m;
}

ordered_json to_json(const ClusterModel& m) {
  ordered_json trace = ordered_json::array();
  for (double v : m.inertia_trace) trace.push_back(v);
  return {{"modality", std::string(to_string(m.modality))},
          {"k", m.k},
          {"seed", m.seed},
          {"iterations", m.iterations},
          {"inertia", m.inertia},
          {"inertia_trace", trace},
          {"centroids", mat_json(m.centroids)}};
}

ClusterModel cluster_model_from_json(const json& doc) {
  ClusterModel m;
  m.modality = parse_modality(doc.at("modality").get<std::string>());
  m.k = doc.at("k").get<int>();
  m.seed = doc.at("seed").get<std::uint64_t>();
  m.iterations = doc.at("iterations").get<int>();
  m.inertia = doc.at("inertia").get<double>();
  m.inertia_trace = doc.at("inertia_trace").get<std::vector<double>>();
  m.centroids = mat_from(doc.at("centroids"));
  return m;
}

ordered_json to_json(const std::vector<ClusterSummary>& summary) {
  ordered_json out = ordered_json::array();
  for (const auto& s : summary) {
    ordered_json top = ordered_json::array();
    for (const auto& [phrase, n] : s.top_phrases) top.push_back({{"phrase", phrase}, {"count", n}});
    out.push_back({{"cluster", s.cluster_id}, {"label", s.label()}, {"count", s.count}, {"top_phrases", top}});
  }
  return out;
}

namespace {

std::vector<ClusterSummary> summary_from(const json& doc) {
  std::vector<ClusterSummary> out;
  for (const auto& s : doc) {
    ClusterSummary c;
    c.cluster_id = s.at("cluster").get<int>();
    c.count = s.at("count").get<std::size_t>();
    for (const auto& p : s.at("top_phrases")) {
      c.top_phrases.emplace_back(p.at("phrase").get<std::string>(), p.at("count").get<std::size_t>());
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

ordered_json to_json(const ModalityModel& m) {
  ordered_json doc;
  doc["modality"] = std::string(to_string(m.modality));
  doc["pca_enabled"] = m.pca_enabled;
  if (m.pca_enabled) doc["pca"] = to_json(m.pca);
  doc["clusters"] = to_json(m.clusters);
  doc["summary"] = to_json(m.summary);
  doc["occurrences"] = m.occurrences;
  return doc;
}

ModalityModel modality_model_from_json(const json& doc) {
  ModalityModel m;
  m.modality = parse_modality(doc.at("modality").get<std::string>());
  m.pca_enabled = doc.at("pca_enabled").get<bool>();
  if (m.pca_enabled) m.pca = pca_from_json(doc.at("pca"));
  m.clusters = cluster_model_from_json(doc.at("clusters"));
  m.summary = summary_from(doc.at("summary"));
  m.occurrences = doc.at("occurrences").get<std::vector<std::size_t>>();
  return m;
}

ordered_json to_json(const GbtEnsemble& e) {
  ordered_json trees = ordered_json::array();
  for (const auto& t : e.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"value", n.value}, {"cover", n.cover}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"cover", n.cover}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return {{"base_score", e.base_score}, {"n_features", e.n_features}, {"config", to_json(e.config)}, {"trees", trees}};
}

GbtEnsemble ensemble_from_json(const json& doc) {
  GbtEnsemble e;
  e.base_score = doc.at("base_score").get<double>();
  e.n_features = doc.at("n_features").get<int>();
  e.config = gbt_config_from_json(doc.at("config"));
  for (const auto& t : doc.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t) {
      TreeNode node;
      node.cover = n.at("cover").get<double>();
      if (n.contains("feature")) {
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      } else {
        node.value = n.at("value").get<double>();
      }
      tree.nodes.push_back(node);
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

ordered_json to_json(const ModelArtifact& a) {
  ordered_json doc;
  doc["format_version"] = a.format_version;
  doc["fingerprints"] = {{"corpus", a.corpus_fingerprint}, {"config", a.config_fingerprint}};
  doc["provenance"] = {{"root_seed", a.config.seed},
                       {"seeds",
                        {{"split", a.seeds.split},
                         {"kmeans_audio", a.seeds.kmeans_audio},
                         {"kmeans_visual", a.seeds.kmeans_visual},
                         {"gbt", a.seeds.gbt},
                         {"tune", a.seeds.tune}}},
                       {"split_sizes", {{"train", a.n_train}, {"val", a.n_val}, {"test", a.n_test}}},
                       {"tuned_best_trial", a.tuned_best_trial}};
  doc["config"] = to_json(a.config);
  doc["modality"] = std::string(to_string(a.modality));
  doc["frequency_weighting"] = std::string(to_string(a.weighting));
  doc["layout"] = {{"audio_k", a.full_layout.audio_k}, {"visual_k", a.full_layout.visual_k}};
  doc["audio"] = to_json(a.audio);
  doc["visual"] = to_json(a.visual);
  doc["phrase_frequency"] = {{"audio", freq_json(a.phrase_freq.audio)}, {"visual", freq_json(a.phrase_freq.visual)}};
  doc["shares"] = {{"audio", a.shares.audio}, {"visual", a.shares.visual}};
  doc["ensemble"] = to_json(a.ensemble);

  const auto& w = a.weights;
  doc["weights"] = {{"layout", {{"audio_k", w.layout.audio_k}, {"visual_k", w.layout.visual_k}}},
                    {"importance", w.importance},
                    {"weights", w.weights},
                    {"cluster_importance", w.cluster_importance},
                    {"cluster_weights", w.cluster_weights},
                    {"top5", w.top5}};
  ordered_json ratings = ordered_json::array();
  for (const auto& r : a.ratings) {
    ratings.push_back({{"values", r.values}, {"counts", r.counts}, {"total", r.total}});
  }
  doc["ratings"] = ratings;
  doc["metrics"] = {{"test", metrics_json(a.test_metrics)}, {"evaluator_test", metrics_json(a.evaluator_test_metrics)}};
  return doc;
}

ModelArtifact artifact_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    fail(ErrorKind::FormatVersion, "not a model artifact (no format_version)");
  }
  const int version = doc.at("format_version").get<int>();
  if (version != kArtifactFormatVersion) {
    fail(ErrorKind::FormatVersion, "artifact format version " + std::to_string(version) +
                                       " is not supported (expected " +
                                       std::to_string(kArtifactFormatVersion) + ")");
  }
  ModelArtifact a;
  try {
    a.format_version = version;
    a.corpus_fingerprint = doc.at("fingerprints").at("corpus").get<std::string>();
    a.config_fingerprint = doc.at("fingerprints").at("config").get<std::string>();
    const auto& prov = doc.at("provenance");
    const auto& seeds = prov.at("seeds");
    a.seeds.split = seeds.at("split").get<std::uint64_t>();
    a.seeds.kmeans_audio = seeds.at("kmeans_audio").get<std::uint64_t>();
    a.seeds.kmeans_visual = seeds.at("kmeans_visual").get<std::uint64_t>();
    a.seeds.gbt = seeds.at("gbt").get<std::uint64_t>();
    a.seeds.tune = seeds.at("tune").get<std::uint64_t>();
    a.n_train = prov.at("split_sizes").at("train").get<std::size_t>();
    a.n_val = prov.at("split_sizes").at("val").get<std::size_t>();
    a.n_test = prov.at("split_sizes").at("test").get<std::size_t>();
    a.tuned_best_trial = prov.at("tuned_best_trial").get<int>();
    a.config = config_from_json(doc.at("config"));
    a.modality = parse_modality_mask(doc.at("modality").get<std::string>());
    a.weighting = parse_frequency_weighting(doc.at("frequency_weighting").get<std::string>());
    a.full_layout = {doc.at("layout").at("audio_k").get<int>(), doc.at("layout").at("visual_k").get<int>()};
    a.audio = modality_model_from_json(doc.at("audio"));
    a.visual = modality_model_from_json(doc.at("visual"));
    a.phrase_freq.audio = freq_from(doc.at("phrase_frequency").at("audio"));
    a.phrase_freq.visual = freq_from(doc.at("phrase_frequency").at("visual"));
    a.shares.audio = doc.at("shares").at("audio").get<std::vector<double>>();
    a.shares.visual = doc.at("shares").at("visual").get<std::vector<double>>();
    a.ensemble = ensemble_from_json(doc.at("ensemble"));
    const auto& w = doc.at("weights");
    a.weights.layout = {w.at("layout").at("audio_k").get<int>(), w.at("layout").at("visual_k").get<int>()};
    a.weights.importance = w.at("importance").get<std::vector<double>>();
    a.weights.weights = w.at("weights").get<std::vector<double>>();
    a.weights.cluster_importance = w.at("cluster_importance").get<std::vector<double>>();
    a.weights.cluster_weights = w.at("cluster_weights").get<std::vector<double>>();
    a.weights.top5 = w.at("top5").get<std::vector<int>>();
    for (const auto& r : doc.at("ratings")) {
      RatingTable t;
      t.values = r.at("values").get<std::vector<double>>();
      t.counts = r.at("counts").get<std::vector<std::size_t>>();
      t.total = r.at("total").get<std::size_t>();
      a.ratings.push_back(std::move(t));
    }
    a.test_metrics = metrics_from(doc.at("metrics").at("test"));
    a.evaluator_test_metrics = metrics_from(doc.at("metrics").at("evaluator_test"));
  } catch (const json::exception& ex) {
    fail(ErrorKind::SchemaViolation, std::string("malformed artifact: ") + ex.what());
  }
  validate(a);
  return a;
}

void validate(const ModelArtifact& a) {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvariantViolation, "artifact: " + what); };
  const FeatureLayout masked = masked_layout(a.full_layout, a.modality);
  if (a.audio.modality != Modality::Audio || a.visual.modality != Modality::Visual) bad("modality models swapped");
  for (const ModalityModel* m : {&a.audio, &a.visual}) {
    const int k = m->modality == Modality::Audio ? a.full_layout.audio_k : a.full_layout.visual_k;
    if (m->clusters.k != k || m->clusters.centroids.rows() != k) bad("centroid count does not match the layout");
    if (m->occurrences.size() != static_cast<std::size_t>(k) || m->summary.size() != static_cast<std::size_t>(k)) {
      bad("per-cluster tables do not match the layout");
    }
    const int dim = m->pca_enabled ? m->pca.k() : kEmbeddingDim;
    if (m->clusters.centroids.cols() != dim) bad("centroid dimension does not match the reduction");
    if (m->pca_enabled) {
      if (m->pca.input_dim() != kEmbeddingDim) bad("PCA input dimension is not the embedding dimension");
      validate(m->pca);
    }
    validate(m->clusters);
  }
  if (a.shares.audio.size() != static_cast<std::size_t>(a.full_layout.audio_k) ||
      a.shares.visual.size() != static_cast<std::size_t>(a.full_layout.visual_k)) {
    bad("cluster shares do not match the layout");
  }
  for (const auto* s : {&a.shares.audio, &a.shares.visual}) {
    double sum = 0.0;
    for (double v : *s) {
      if (!(v > 0.0)) bad("non-positive cluster share");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("cluster shares do not sum to 1");
  }
  if (!(a.weights.layout == masked)) bad("weight layout does not match the modality mask");
  validate(a.weights);
  if (a.ensemble.n_features != masked.size()) bad("ensemble width does not match the feature layout");
  validate(a.ensemble);
  if (a.ratings.size() != static_cast<std::size_t>(masked.cluster_count())) bad("rating tables do not match the layout");
  for (const auto& r : a.ratings) {
    std::size_t total = 0;
    if (r.values.size() != r.counts.size()) bad("rating table is ragged");
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      if (i > 0 && !(r.values[i] > r.values[i - 1])) bad("rating table values not ascending");
      total += r.counts[i];
    }
    if (total != r.total) bad("rating table counts do not add up");
  }
}

std::string serialize_artifact(const ModelArtifact& artifact) { return to_json(artifact).dump(1) + "\n"; }

ModelArtifact deserialize_artifact(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::MalformedJson, "model artifact is not valid JSON");
  return artifact_from_json(doc);
}

void save_artifact(const std::string& path, const ModelArtifact& artifact) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << serialize_artifact(artifact);
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

ModelArtifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_artifact(ss.str());
}

}  // namespace engage
