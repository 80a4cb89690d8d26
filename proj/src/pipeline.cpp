#include "engage/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "engage/ingest.hpp"
#include "engage/rng.hpp"

namespace engage {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Runs one stage and prefixes its errors with the stage name.
template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.message());
  }
}

int modality_index(Modality m) { return m == Modality::Audio ? 0 : 1; }

Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<double> select(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

}  // namespace

std::vector<std::string> vocabulary(const std::vector<VideoRecord>& records, Modality m) {
  std::set<std::string> unique;
  for (const auto& r : records) {
    for (const auto& p : r.descriptors.of(m)) unique.insert(p);
  }
  return {unique.begin(), unique.end()};
}

PhraseFrequency corpus_phrase_frequency(const std::vector<VideoRecord>& records) {
  PhraseFrequency freq;
  for (const auto& r : records) {
    if (!r.vlm_raw.empty()) {
      try {
        freq.add(parse_vlm_response(r.vlm_raw));
        continue;
      } catch (const Error&) {
      }
    }
    freq.add(to_candidates(r.descriptors));
  }
  return freq;
}

std::string corpus_fingerprint(const std::vector<VideoRecord>& records) {
  std::ostringstream out;
  write_corpus(out, records);
  return hex64(fnv1a64(out.str()));
}

std::string config_fingerprint(const PipelineConfig& config) { return hex64(fnv1a64(to_json(config).dump())); }

std::unique_ptr<EmbeddingProvider> make_provider(const PipelineConfig& config) {
  return make_provider(config.embedding_provider, config.embeddings_path);
}

StageSeeds stage_seeds(std::uint64_t root) {
  StageSeeds s;
  s.split = derive_seed(root, "split");
  s.kmeans_audio = derive_seed(root, "kmeans", 0);
  s.kmeans_visual = derive_seed(root, "kmeans", 1);
  s.gbt = derive_seed(root, "gbt");
  s.tune = derive_seed(root, "tune");
  return s;
}

ModalityModel fit_modality(const std::vector<std::string>& vocab, Modality m, const PipelineConfig& config,
                           const EmbeddingProvider& provider, Warnings* warnings) {
  ModalityModel model;
  model.modality = m;
  model.pca_enabled = config.pca_enabled;
  Matrix points = embed_all(vocab, provider);
  if (config.pca_enabled) {
    if (points.rows() < 2) fail(ErrorKind::TooFewPoints, "PCA needs at least 2 distinct phrases");
    const int k = std::min<int>(config.pca_dims, static_cast<int>(points.rows()) - 1);
    if (k < config.pca_dims) {
      warn(warnings, std::string(to_string(m)) + " PCA dimension capped at " + std::to_string(k) + " by " +
                         std::to_string(points.rows()) + " distinct phrases");
    }
    model.pca = fit_pca(points, k, warnings);
    points = transform_pca(model.pca, points);
  }
  KMeansOptions options;
  options.k = m == Modality::Audio ? config.audio_k : config.visual_k;
  const StageSeeds seeds = stage_seeds(config.seed);
  options.seed = m == Modality::Audio ? seeds.kmeans_audio : seeds.kmeans_visual;
  options.max_iter = config.kmeans_max_iter;
  options.tol = config.kmeans_tol;
  options.n_init = config.kmeans_n_init;
  model.clusters = fit_kmeans(points, options, m);
  return model;
}

ClusterAssignment PhraseAssigner::assign(Modality m, const std::string& phrase) {
  auto& cache = cache_[modality_index(m)];
  auto it = cache.find(phrase);
  if (it != cache.end()) return it->second;
  const ModalityModel& model = m == Modality::Audio ? audio_ : visual_;
  Vector v = embed_phrase(phrase, provider_).vector;
  if (model.pca_enabled) v = transform_pca(model.pca, v);
  ClusterAssignment a = engage::assign(model.clusters, v, phrase);
  a.modality = m;
  cache.emplace(phrase, a);
  return a;
}

std::vector<ClusterAssignment> PhraseAssigner::assign_all(
    Modality m, const std::array<std::string, kDescriptorsPerModality>& phrases) {
  std::vector<ClusterAssignment> out;
  out.reserve(phrases.size());
  for (const auto& p : phrases) out.push_back(assign(m, p));
  return out;
}

ClusterStage run_cluster_stage(const std::vector<VideoRecord>& records, const PipelineConfig& config,
                               const EmbeddingProvider& provider, const std::string& cache_dir,
                               Warnings* warnings) {
  const auto audio_vocab = vocabulary(records, Modality::Audio);
  const auto visual_vocab = vocabulary(records, Modality::Visual);

  std::string cache_path;
  if (!cache_dir.empty()) {
    ordered_json key;
    key["provider"] = config.embedding_provider;
    if (config.embedding_provider == "precomputed") key["table"] = file_digest(config.embeddings_path);
    key["seed"] = config.seed;
    key["pca"] = {config.pca_enabled, config.pca_dims};
    key["kmeans"] = {config.audio_k, config.visual_k, config.kmeans_max_iter, config.kmeans_tol,
                     config.kmeans_n_init};
    key["audio"] = audio_vocab;
    key["visual"] = visual_vocab;
    cache_path = (std::filesystem::path(cache_dir) / ("clusters-" + hex64(fnv1a64(key.dump())) + ".json")).string();
    std::ifstream in(cache_path, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      json doc = json::parse(ss.str(), nullptr, false);
      if (!doc.is_discarded()) {
        try {
          ClusterStage cached;
          cached.audio = modality_model_from_json(doc.at("audio"));
          cached.visual = modality_model_from_json(doc.at("visual"));
          cached.from_cache = true;
          return cached;
        } catch (const std::exception&) {
          warn(warnings, "ignoring unreadable cache entry " + cache_path);
        }
      }
    }
  }

  ClusterStage out;
  out.audio = fit_modality(audio_vocab, Modality::Audio, config, provider, warnings);
  out.visual = fit_modality(visual_vocab, Modality::Visual, config, provider, warnings);

  if (!cache_path.empty()) {
    std::filesystem::create_directories(cache_dir);
    ModalityModel a = out.audio, v = out.visual;
    a.summary.assign(static_cast<std::size_t>(a.clusters.k), {});
    v.summary.assign(static_cast<std::size_t>(v.clusters.k), {});
    ordered_json doc = {{"audio", to_json(a)}, {"visual", to_json(v)}};
    const std::string tmp = cache_path + ".tmp";
    {
      std::ofstream cache_out(tmp, std::ios::binary);
      cache_out << doc.dump() << '\n';
    }
    std::filesystem::rename(tmp, cache_path);
  }
  return out;
}

void summarize_clusters(ClusterStage& stage, const std::vector<VideoRecord>& records, PhraseAssigner& assigner,
                        std::size_t top_m) {
  for (ModalityModel* m : {&stage.audio, &stage.visual}) {
    std::vector<ClusterAssignment> occurrences;
    occurrences.reserve(records.size() * kDescriptorsPerModality);
    m->occurrences.assign(static_cast<std::size_t>(m->clusters.k), 0);
    for (const auto& r : records) {
      for (const auto& p : r.descriptors.of(m->modality)) {
        occurrences.push_back(assigner.assign(m->modality, p));
        ++m->occurrences[static_cast<std::size_t>(occurrences.back().cluster_id)];
      }
    }
    m->summary = describe_clusters(m->clusters, occurrences, top_m);
  }
}

FeatureTable build_feature_table(const std::vector<VideoRecord>& records, const FeatureLayout& full,
                                 const ClusterShares& shares, ModalityMask mask, FrequencyWeighting weighting,
                                 PhraseAssigner& assigner) {
  FeatureTable t;
  t.layout = masked_layout(full, mask);
  t.x.resize(static_cast<Eigen::Index>(records.size()), t.layout.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto a = assigner.assign_all(Modality::Audio, r.descriptors.audio);
    const auto v = assigner.assign_all(Modality::Visual, r.descriptors.visual);
    VideoFeatureVector f = restrict_features(build_features(a, v, shares, mask, weighting), full, mask);
    t.x.row(static_cast<Eigen::Index>(i)) = f.dense().transpose();
    t.ids.push_back(r.id);
    t.y.push_back(r.engagement.normalized);
    t.features.push_back(std::move(f));
  }
  return t;
}

SplitData split_table(const FeatureTable& table, std::uint64_t split_seed) {
  SplitData s;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (!row_of.emplace(table.ids[i], i).second) {
      fail(ErrorKind::InvalidRecord, "duplicate video id '" + table.ids[i] + "'");
    }
  }
  s.split = split_dataset(table.ids, split_seed);
  auto rows = [&](const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(row_of.at(id));
    return out;
  };
  s.train = rows(s.split.train_ids);
  s.val = rows(s.split.val_ids);
  s.test = rows(s.split.test_ids);
  s.train_x = select_rows(table.x, s.train);
  s.val_x = select_rows(table.x, s.val);
  s.test_x = select_rows(table.x, s.test);
  s.train_y = select(table.y, s.train);
  s.val_y = select(table.y, s.val);
  s.test_y = select(table.y, s.test);
  return s;
}

PreparedData prepare(const std::vector<VideoRecord>& records, const PipelineConfig& config,
                     const std::string& cache_dir, Warnings* warnings) {
  PreparedData d;
  stage("config", [&] { config.validate(); });
  d.config = config;
  d.seeds = stage_seeds(config.seed);
  if (records.empty()) fail(ErrorKind::EmptyCorpus, "corpus has no records");
  d.provider = stage("embed", [&] { return make_provider(config); });
  d.clusters = stage("cluster", [&] { return run_cluster_stage(records, config, *d.provider, cache_dir, warnings); });
  PhraseAssigner assigner(d.clusters.audio, d.clusters.visual, *d.provider);
  stage("cluster", [&] { summarize_clusters(d.clusters, records, assigner, config.describe_top_m); });
  d.phrase_freq = corpus_phrase_frequency(records);
  d.full_layout = {config.audio_k, config.visual_k};
  d.shares = compute_cluster_shares(d.clusters.audio.occurrences, d.clusters.visual.occurrences);
  d.table = stage("features", [&] {
    return build_feature_table(records, d.full_layout, d.shares, config.modality, config.frequency_weighting,
                               assigner);
  });
  d.split = stage("split", [&] { return split_table(d.table, d.seeds.split); });
  return d;
}

void write_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "video_id,split,target,prediction,evaluator\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.id << ',' << r.split << ',' << r.target << ',' << r.prediction << ',' << r.evaluator << '\n';
  }
}

TuneResult tune_pipeline(const PreparedData& data, const TuneOptions& options, const TrialObserver& observer) {
  GbtConfig base = data.config.gbt;
  base.seed = derive_seed(data.seeds.tune, "train");
  return stage("tune", [&] {
    return tune(data.split.train_x, data.split.train_y, data.split.val_x, data.split.val_y,
                data.config.search_space, options, base, observer);
  });
}

TrainOutcome train_pipeline(const std::vector<VideoRecord>& records, const PipelineConfig& config,
                            const TrainOptions& options) {
  Warnings* warnings = options.warnings;
  PreparedData d = prepare(records, config, options.cache_dir, warnings);
  TrainOutcome out;
  out.cluster_cache_hit = d.clusters.from_cache;
  const SplitData& s = d.split;

  GbtConfig gbt_config = config.gbt;
  std::vector<std::vector<double>> trial_importance;
  if (config.tune_enabled) {
    TuneOptions topt;
    topt.n_trials = config.tune_trials;
    topt.seed = d.seeds.tune;
    topt.parallel_warmup = config.parallel_warmup;
    std::mutex mu;
    trial_importance.assign(static_cast<std::size_t>(config.tune_trials), {});
    TrialObserver observer;
    if (config.average_trials) {
      observer = [&](int index, const TrainResult& result) {
        auto imp = feature_importance(result.ensemble, s.val_x);
        std::lock_guard<std::mutex> lock(mu);
        trial_importance[static_cast<std::size_t>(index)] = std::move(imp);
      };
    }
    out.tuning = tune_pipeline(d, topt, observer);
    if (options.on_trial) {
      for (const auto& t : out.tuning->trials) options.on_trial(t);
    }
    gbt_config = out.tuning->best;
  } else if (config.average_trials) {
    warn(warnings, "average_trials has no effect without tuning");
  }
  gbt_config.seed = d.seeds.gbt;

  TrainResult trained = stage("gbt", [&] {
    return train(s.train_x, s.train_y, gbt_config, &s.val_x, s.val_y, warnings);
  });
  out.trace = trained.trace;

  ClusterWeights weights = stage("explain", [&] {
    if (config.tune_enabled && config.average_trials) {
      std::vector<double> mean(static_cast<std::size_t>(d.table.layout.size()), 0.0);
      for (const auto& imp : trial_importance) {
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += imp[j];
      }
      for (double& v : mean) v /= static_cast<double>(trial_importance.size());
      return make_cluster_weights(mean, d.table.layout, warnings);
    }
    return global_importance(trained.ensemble, s.val_x, d.table.layout, warnings);
  });

  ModelArtifact& a = out.artifact;
  a.config = config;
  a.corpus_fingerprint = corpus_fingerprint(records);
  a.config_fingerprint = config_fingerprint(config);
  a.seeds = d.seeds;
  a.n_train = s.train.size();
  a.n_val = s.val.size();
  a.n_test = s.test.size();
  a.audio = d.clusters.audio;
  a.visual = d.clusters.visual;
  a.phrase_freq = d.phrase_freq;
  a.shares = d.shares;
  a.full_layout = d.full_layout;
  a.modality = config.modality;
  a.weighting = config.frequency_weighting;
  a.ensemble = std::move(trained.ensemble);
  a.tuned_best_trial = out.tuning ? out.tuning->best_index : -1;
  a.weights = std::move(weights);

  for (int c = 0; c < d.table.layout.cluster_count(); ++c) {
    std::vector<double> samples;
    samples.reserve(s.train.size());
    for (auto row : s.train) samples.push_back(d.table.features[row].weighted_counts[static_cast<std::size_t>(c)]);
    a.ratings.push_back(make_rating_table(std::move(samples)));
  }

  std::vector<double> pred = predict_rows(a.ensemble, d.table.x);
  std::vector<std::string> split_of(d.table.ids.size());
  for (auto r : s.train) split_of[r] = "train";
  for (auto r : s.val) split_of[r] = "val";
  for (auto r : s.test) split_of[r] = "test";
  for (std::size_t i = 0; i < d.table.ids.size(); ++i) {
    out.predictions.push_back({d.table.ids[i], split_of[i], d.table.y[i], pred[i],
                               evaluate_engagement(a.weights, d.table.features[i])});
  }
  std::vector<double> test_pred, test_e;
  for (auto r : s.test) {
    test_pred.push_back(out.predictions[r].prediction);
    test_e.push_back(out.predictions[r].evaluator);
  }
  stage("score", [&] {
    a.test_metrics = compute_metrics(test_pred, s.test_y);
    a.evaluator_test_metrics = compute_metrics(test_e, s.test_y);
  });
  stage("artifact", [&] { validate(a); });
  return out;
}

MetricReport run_ablation(const ModelArtifact& model, const std::vector<VideoRecord>& records, ModalityMask mask,
                          Warnings* warnings) {
  auto provider = make_provider(model.config);
  PhraseAssigner assigner(model.audio, model.visual, *provider);
  FeatureTable table = stage("features", [&] {
    return build_feature_table(records, model.full_layout, model.shares, mask, model.weighting, assigner);
  });
  SplitData s = stage("split", [&] { return split_table(table, model.seeds.split); });
  TrainResult trained = stage("gbt", [&] {
    return train(s.train_x, s.train_y, model.ensemble.config, &s.val_x, s.val_y, warnings);
  });
  return stage("score", [&] { return compute_metrics(predict_rows(trained.ensemble, s.test_x), s.test_y); });
}

ordered_json EvaluationReport::to_json() const {
  return {{"model", model.to_json()}, {"evaluator", evaluator.to_json()}};
}

EvaluationReport evaluate_model(const ModelArtifact& model, const std::vector<VideoRecord>& records,
                                bool test_only) {
  auto provider = make_provider(model.config);
  PhraseAssigner assigner(model.audio, model.visual, *provider);
  FeatureTable table = stage("features", [&] {
    return build_feature_table(records, model.full_layout, model.shares, model.modality, model.weighting,
                               assigner);
  });
  std::vector<std::size_t> rows(table.ids.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::string label = "all";
  if (test_only) {
    rows = stage("split", [&] { return split_table(table, model.seeds.split); }).test;
    label = "test";
  }
  EvaluationReport report;
  std::vector<double> pred, e, y;
  for (auto r : rows) {
    const double p = predict(model.ensemble, table.x.row(static_cast<Eigen::Index>(r)));
    const double ev = evaluate_engagement(model.weights, table.features[r]);
    report.rows.push_back({table.ids[r], label, table.y[r], p, ev});
    pred.push_back(p);
    e.push_back(ev);
    y.push_back(table.y[r]);
  }
  stage("score", [&] {
    report.model = compute_metrics(pred, y);
    report.evaluator = compute_metrics(e, y);
  });
  return report;
}

JudgeInput parse_judge_input(const json& doc) {
  if (!doc.is_object()) fail(ErrorKind::SchemaViolation, "judge input must be a JSON object");
  JudgeInput in;
  try {
    if (doc.contains("video_id")) in.video_id = doc.at("video_id").get<std::string>();
    if (doc.contains("descriptors")) {
      const auto& d = doc.at("descriptors");
      in.candidates.audio = d.at("audio").get<std::vector<std::string>>();
      in.candidates.visual = d.at(d.contains("visual") ? "visual" : "video").get<std::vector<std::string>>();
    } else if (doc.contains("vlm_raw")) {
      in.candidates = parse_vlm_response(doc.at("vlm_raw").get<std::string>());
    } else if (doc.contains("audio") && doc.contains("video")) {
      in.candidates = parse_vlm_response(doc.dump());
    } else {
      fail(ErrorKind::SchemaViolation, "judge input has no descriptors");
    }
    if (doc.contains("sub_scores")) {
      const auto& s = doc.at("sub_scores");
      if (!s.is_array() || s.size() != kTopClusters) {
        fail(ErrorKind::SchemaViolation, "sub_scores must be a list of 5 numbers");
      }
      in.sub_scores = s.get<std::vector<double>>();
    }
  } catch (const json::exception& ex) {
    fail(ErrorKind::SchemaViolation, std::string("malformed judge input: ") + ex.what());
  }
  if (in.candidates.audio.empty() || in.candidates.visual.empty()) {
    fail(ErrorKind::EmptyModality, "judge input needs audio and visual descriptors");
  }
  return in;
}

ordered_json JudgeReport::to_json() const {
  ordered_json doc;
  doc["video_id"] = video_id;
  doc["descriptors"] = {{"audio", descriptors.audio}, {"visual", descriptors.visual}};
  doc["E"] = evaluator;
  doc["prediction"] = prediction;
  if (judge) {
    doc["S"] = judge->score;
    doc["auto_rated"] = auto_rated;
    ordered_json contributions = ordered_json::array();
    for (std::size_t i = 0; i < judge->contributions.size(); ++i) {
      const auto& c = judge->contributions[i];
      contributions.push_back({{"cluster", cluster_names.at(i)},
                               {"label", c.label},
                               {"weight", c.weight},
                               {"score", c.score},
                               {"share", c.share},
                               {"points", c.points}});
    }
    doc["contributions"] = contributions;
  }
  return doc;
}

JudgeReport judge_video(const ModelArtifact& model, const JudgeInput& input, bool auto_rate, Warnings* warnings) {
  JudgeReport report;
  report.video_id = input.video_id;
  report.descriptors = filter_top5(input.candidates, model.phrase_freq, warnings);
  auto provider = make_provider(model.config);
  PhraseAssigner assigner(model.audio, model.visual, *provider);
  const auto a = assigner.assign_all(Modality::Audio, report.descriptors.audio);
  const auto v = assigner.assign_all(Modality::Visual, report.descriptors.visual);
  const VideoFeatureVector f = restrict_features(build_features(a, v, model.shares, model.modality, model.weighting),
                                                 model.full_layout, model.modality);
  report.evaluator = evaluate_engagement(model.weights, f);
  report.prediction = predict(model.ensemble, f.dense().transpose());

  std::vector<double> scores;
  if (input.sub_scores) {
    scores = *input.sub_scores;
  } else if (auto_rate) {
    report.auto_rated = true;
    for (int c : model.weights.top5) {
      scores.push_back(model.ratings[static_cast<std::size_t>(c)].rate(f.weighted_counts[static_cast<std::size_t>(c)]));
    }
  } else {
    return report;
  }
  std::vector<double> w;
  for (int c : model.weights.top5) w.push_back(model.weights.cluster_weights[static_cast<std::size_t>(c)]);
  JudgeResult result = judge_score(w, scores);
  const auto rows = importance_rows(model);
  for (std::size_t i = 0; i < result.contributions.size(); ++i) {
    const int c = model.weights.top5[i];
    result.contributions[i].cluster = c;
    for (const auto& r : rows) {
      if (r.cluster == c) {
        result.contributions[i].label = r.label;
        report.cluster_names.push_back(r.name);
      }
    }
  }
  report.judge = std::move(result);
  return report;
}

std::vector<ImportanceRow> importance_rows(const ModelArtifact& model) {
  const FeatureLayout& layout = model.weights.layout;
  static const std::vector<ClusterSummary> none;
  const auto& audio = layout.audio_k > 0 ? model.audio.summary : none;
  const auto& visual = layout.visual_k > 0 ? model.visual.summary : none;
  return report_importance(model.weights, audio, visual);
}

}  // namespace engage
