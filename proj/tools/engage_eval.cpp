// engage-eval: command-line front end for the engagement pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "engage/artifact.hpp"
#include "engage/config.hpp"
#include "engage/embed.hpp"
#include "engage/ingest.hpp"
#include "engage/pipeline.hpp"
#include "engage/sources.hpp"
#include "engage/synthetic.hpp"

namespace {

using namespace engage;
using nlohmann::json;
using nlohmann::ordered_json;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string modality;
  std::optional<int> trials;
  bool auto_rate = false;
  bool no_pca = false;
  bool parallel_warmup = false;
  bool average_trials = false;
  bool quiet = false;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (!g.modality.empty()) c.modality = parse_modality_mask(g.modality);
  if (g.trials) c.tune_trials = *g.trials;
  if (g.no_pca) c.pca_enabled = false;
  if (g.parallel_warmup) c.parallel_warmup = true;
  if (g.average_trials) c.average_trials = true;
  c.validate();
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

void flush_warnings(const Warnings& w, const Globals& g) {
  if (g.quiet) return;
  for (const auto& m : w.messages) std::cerr << "warning: " << m << '\n';
}

ordered_json trial_json(const TrialRecord& t, double best_so_far) {
  return {{"trial", t.index},
          {"warmup", t.warmup},
          {"val_rmse", t.val_rmse},
          {"best_so_far", best_so_far},
          {"wall_seconds", t.wall_seconds},
          {"config", to_json(t.config)}};
}

std::string trial_log(const std::vector<TrialRecord>& trials) {
  std::string out;
  double best = 0.0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    best = i == 0 ? trials[i].val_rmse : std::min(best, trials[i].val_rmse);
    out += trial_json(trials[i], best).dump() + "\n";
  }
  return out;
}

std::string summary_text(const ModalityModel& m) {
  std::ostringstream out;
  out << to_string(m.modality) << " clusters (k=" << m.clusters.k << ")\n";
  for (const auto& s : m.summary) {
    char head[64];
    std::snprintf(head, sizeof head, "  %c%-3d %6zu  ", m.modality == Modality::Audio ? 'a' : 'v', s.cluster_id,
                  s.count);
    out << head;
    for (std::size_t i = 0; i < s.top_phrases.size(); ++i) {
      out << (i ? "; " : "") << s.top_phrases[i].first << " (" << s.top_phrases[i].second << ")";
    }
    out << '\n';
  }
  return out.str();
}

ordered_json summary_json(const ModalityModel& a, const ModalityModel& v) {
  return {{"audio", to_json(a.summary)}, {"visual", to_json(v.summary)}};
}

int run(int argc, char** argv) {
  CLI::App app{"Engagement prediction pipeline: descriptors, clusters, boosted trees and SHAP weights"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Root seed (overrides the config)");
  app.add_option("--modality", g.modality, "Modality mask")->check(CLI::IsMember({"audio", "visual", "both"}));
  app.add_option("--trials", g.trials, "Tuning trials")->check(CLI::PositiveNumber);
  app.add_flag("--auto-rate", g.auto_rate, "Judge with the heuristic quantile rater");
  app.add_flag("--no-pca", g.no_pca, "Cluster raw embeddings");
  app.add_flag("--parallel-warmup", g.parallel_warmup, "Run tuning warm-up trials concurrently");
  app.add_flag("--average-trials", g.average_trials, "Average SHAP importance over tuning trials");
  app.add_flag("-q,--quiet", g.quiet, "Suppress warnings");

  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic corpus");
  std::size_t synth_n = 2000;
  double synth_noise = 0.05;
  std::string synth_out;
  synth->add_option("--n", synth_n, "Number of videos")->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  synth->add_option("--out", synth_out, "Output JSONL")->required();
  synth->callback([&] {
    action = [&] {
      const auto c = resolve_config(g);
      auto corpus = generate_synthetic_corpus(synth_n, default_planted_weights(), synth_noise, c.seed);
      write_corpus(synth_out, corpus.records);
    };
  });

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse, filter and label a raw or canonical corpus");
  std::string in_path, out_path, report_path, fixtures, metadata_fixtures;
  bool remote = false;
  ingest_cmd->add_option("--in", in_path, "Input JSONL")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", out_path, "Canonical JSONL output")->required();
  ingest_cmd->add_option("--report", report_path, "Ingestion report JSON");
  ingest_cmd->add_option("--fixtures", fixtures, "Directory of recorded descriptor responses")
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--metadata-fixtures", metadata_fixtures, "Directory of recorded metadata")
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_flag("--remote", remote,
                       "Fetch missing descriptors/metadata from ENGAGE_DESCRIPTOR_* / ENGAGE_METADATA_* endpoints");
  ingest_cmd->callback([&] {
    action = [&] {
      const auto c = resolve_config(g);
      IngestOptions opt;
      opt.scheme = c.normalization;
      std::unique_ptr<DescriptorSource> ds;
      std::unique_ptr<MetadataSource> ms;
      if (!fixtures.empty()) {
        ds = std::make_unique<FixtureDescriptorSource>(fixtures);
      } else if (remote) {
        ds = std::make_unique<RemoteDescriptorSource>(endpoint_from_env("ENGAGE_DESCRIPTOR"));
      }
      if (!metadata_fixtures.empty()) {
        ms = std::make_unique<FixtureMetadataSource>(metadata_fixtures);
      } else if (remote) {
        ms = std::make_unique<RemoteMetadataSource>(endpoint_from_env("ENGAGE_METADATA"));
      }
      opt.descriptors = ds.get();
      opt.metadata = ms.get();
      auto result = ingest(read_lines(in_path), opt);
      write_corpus(out_path, result.records);
      const std::string report = result.report.to_json().dump(2) + "\n";
      if (!report_path.empty()) {
        write_text(report_path, report);
      } else if (!g.quiet) {
        std::cerr << "ingested " << result.report.kept << " of " << result.report.total << " records, dropped "
                  << result.report.dropped.size() << '\n';
      }
    };
  });

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Write embeddings of the corpus vocabulary as CSV");
  std::string corpus_path;
  embed_cmd->add_option("--corpus", corpus_path, "Canonical corpus")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", out_path, "CSV output")->required();
  embed_cmd->callback([&] {
    action = [&] {
      const auto c = resolve_config(g);
      const auto records = read_corpus(corpus_path);
      auto provider = make_provider(c);
      std::set<std::string> all;
      for (auto m : {Modality::Audio, Modality::Visual}) {
        for (auto& p : vocabulary(records, m)) all.insert(p);
      }
      std::vector<std::string> phrases(all.begin(), all.end());
      write_embeddings_csv(out_path, phrases, embed_all(phrases, *provider));
    };
  });

  // cluster
  auto* cluster_cmd = app.add_subcommand("cluster", "Fit PCA and k-means per modality");
  std::string cache_dir;
  cluster_cmd->add_option("--corpus", corpus_path, "Canonical corpus")->required()->check(CLI::ExistingFile);
  cluster_cmd->add_option("--out", out_path, "Cluster models JSON")->required();
  cluster_cmd->add_option("--cache-dir", cache_dir, "Stage cache directory");
  cluster_cmd->callback([&] {
    action = [&] {
      const auto c = resolve_config(g);
      const auto records = read_corpus(corpus_path);
      auto provider = make_provider(c);
      Warnings w;
      auto stage = run_cluster_stage(records, c, *provider, cache_dir, &w);
      PhraseAssigner assigner(stage.audio, stage.visual, *provider);
      summarize_clusters(stage, records, assigner, c.describe_top_m);
      flush_warnings(w, g);
      ordered_json doc = {{"config", to_json(c)}, {"audio", to_json(stage.audio)}, {"visual", to_json(stage.visual)}};
      write_text(out_path, doc.dump(1) + "\n");
    };
  });

  // describe
  auto* describe_cmd = app.add_subcommand("describe", "Summarize clusters by their most frequent phrases");
  std::string model_path, clusters_path, format = "text";
  auto* describe_group = describe_cmd->add_option_group("source");
  describe_group->add_option("--model", model_path, "Model artifact")->check(CLI::ExistingFile);
  describe_group->add_option("--clusters", clusters_path, "Output of the cluster command")
      ->check(CLI::ExistingFile);
  describe_group->require_option(1);
  describe_cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  describe_cmd->callback([&] {
    action = [&] {
      ModalityModel a, v;
      if (!model_path.empty()) {
        auto m = load_artifact(model_path);
        a = m.audio;
        v = m.visual;
      } else {
        auto doc = read_json_file(clusters_path);
        a = modality_model_from_json(doc.at("audio"));
        v = modality_model_from_json(doc.at("visual"));
      }
      if (format == "json") {
        std::cout << summary_json(a, v).dump(2) << '\n';
      } else {
        std::cout << summary_text(a) << summary_text(v);
      }
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Run the full pipeline and write a model artifact");
  std::string metrics_path, predictions_path, features_path, trial_log_path;
  bool tune_flag = false;
  train_cmd->add_option("--corpus", corpus_path, "Canonical corpus")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "Model artifact")->required();
  train_cmd->add_option("--metrics", metrics_path, "Test metric report JSON");
  train_cmd->add_option("--predictions", predictions_path, "Per-video predictions CSV");
  train_cmd->add_option("--features", features_path, "Feature matrix CSV");
  train_cmd->add_option("--cache-dir", cache_dir, "Stage cache directory");
  train_cmd->add_flag("--tune", tune_flag, "Tune hyperparameters before the final fit");
  train_cmd->add_option("--trial-log", trial_log_path, "Tuning trial log JSONL");
  train_cmd->callback([&] {
    action = [&] {
      auto c = resolve_config(g);
      if (tune_flag) c.tune_enabled = true;
      const auto records = read_corpus(corpus_path);
      Warnings w;
      TrainOptions opt;
      opt.cache_dir = cache_dir;
      opt.warnings = &w;
      auto outcome = train_pipeline(records, c, opt);
      flush_warnings(w, g);
      save_artifact(out_path, outcome.artifact);
      ordered_json report = {{"test", outcome.artifact.test_metrics.to_json()},
                             {"evaluator_test", outcome.artifact.evaluator_test_metrics.to_json()},
                             {"trees", outcome.artifact.ensemble.trees.size()},
                             {"cluster_cache_hit", outcome.cluster_cache_hit}};
      const std::string text = report.dump(2) + "\n";
      if (!metrics_path.empty()) write_text(metrics_path, text);
      if (!g.quiet) std::cout << text;
      if (!predictions_path.empty()) write_predictions_csv(predictions_path, outcome.predictions);
      if (!trial_log_path.empty() && outcome.tuning) write_text(trial_log_path, trial_log(outcome.tuning->trials));
      if (!features_path.empty()) {
        auto provider = make_provider(c);
        PhraseAssigner assigner(outcome.artifact.audio, outcome.artifact.visual, *provider);
        auto table = build_feature_table(records, outcome.artifact.full_layout, outcome.artifact.shares,
                                         c.modality, c.frequency_weighting, assigner);
        write_features_csv(features_path, table.layout, table.ids, table.x);
      }
    };
  });

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "Search GBT hyperparameters on the validation split");
  std::string space_path, best_path;
  tune_cmd->add_option("--corpus", corpus_path, "Canonical corpus")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--trial-log", trial_log_path, "Trial log JSONL")->required();
  tune_cmd->add_option("--space", space_path, "Search space JSON")->check(CLI::ExistingFile);
  tune_cmd->add_option("--best", best_path, "Best GBT config JSON");
  tune_cmd->add_option("--cache-dir", cache_dir, "Stage cache directory");
  tune_cmd->callback([&] {
    action = [&] {
      auto c = resolve_config(g);
      if (!space_path.empty()) c.search_space = search_space_from_json(read_json_file(space_path), c.search_space);
      const auto records = read_corpus(corpus_path);
      Warnings w;
      auto data = prepare(records, c, cache_dir, &w);
      TuneOptions opt;
      opt.n_trials = c.tune_trials;
      opt.seed = data.seeds.tune;
      opt.parallel_warmup = c.parallel_warmup;
      auto result = tune_pipeline(data, opt);
      flush_warnings(w, g);
      write_text(trial_log_path, trial_log(result.trials));
      ordered_json best = {{"best_trial", result.best_index},
                           {"val_rmse", result.trials[static_cast<std::size_t>(result.best_index)].val_rmse},
                           {"gbt", to_json(result.best)}};
      if (!best_path.empty()) write_text(best_path, best.dump(2) + "\n");
      if (!g.quiet) std::cout << best.dump(2) << '\n';
    };
  });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a corpus with a frozen model");
  std::string split = "all";
  eval_cmd->add_option("--model", model_path, "Model artifact")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", corpus_path, "Canonical corpus")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", split, "all, or test to reuse the model's split")
      ->check(CLI::IsMember({"all", "test"}));
  eval_cmd->add_option("--out", out_path, "Metric report JSON (default stdout)");
  eval_cmd->add_option("--predictions", predictions_path, "Per-video predictions CSV");
  eval_cmd->callback([&] {
    action = [&] {
      auto model = load_artifact(model_path);
      auto report = evaluate_model(model, read_corpus(corpus_path), split == "test");
      write_text(out_path, report.to_json().dump(2) + "\n");
      if (!predictions_path.empty()) write_predictions_csv(predictions_path, report.rows);
    };
  });

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Retrain on modality subsets with the model's settings");
  ablate_cmd->add_option("--model", model_path, "Model artifact")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--corpus", corpus_path, "Canonical corpus")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", out_path, "Report JSON (default stdout)");
  ablate_cmd->callback([&] {
    action = [&] {
      auto model = load_artifact(model_path);
      const auto records = read_corpus(corpus_path);
      std::vector<ModalityMask> masks = {ModalityMask::Both, ModalityMask::Visual, ModalityMask::Audio};
      if (!g.modality.empty()) masks = {parse_modality_mask(g.modality)};
      Warnings w;
      ordered_json doc;
      for (auto m : masks) doc[std::string(to_string(m))] = run_ablation(model, records, m, &w).to_json();
      flush_warnings(w, g);
      write_text(out_path, doc.dump(2) + "\n");
    };
  });

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Rank clusters by SHAP importance");
  explain_cmd->add_option("--model", model_path, "Model artifact")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  explain_cmd->callback([&] {
    action = [&] {
      auto rows = importance_rows(load_artifact(model_path));
      if (format == "json") {
        std::cout << importance_to_json(rows).dump(2) << '\n';
      } else {
        std::cout << importance_to_text(rows);
      }
    };
  });

  // judge
  auto* judge_cmd = app.add_subcommand("judge", "Score one video from its descriptors");
  std::string input_path, scores_path;
  judge_cmd->add_option("--model", model_path, "Model artifact")->required()->check(CLI::ExistingFile);
  judge_cmd->add_option("--input", input_path, "Descriptor JSON")->required()->check(CLI::ExistingFile);
  judge_cmd->add_option("--scores", scores_path, "Sub-score JSON {video_id, sub_scores}")
      ->check(CLI::ExistingFile);
  judge_cmd->add_option("--out", out_path, "Judge report JSON (default stdout)");
  judge_cmd->callback([&] {
    action = [&] {
      auto model = load_artifact(model_path);
      JudgeInput input = parse_judge_input(read_json_file(input_path));
      if (!scores_path.empty()) {
        auto doc = read_json_file(scores_path);
        if (!doc.is_object() || !doc.contains("sub_scores") || !doc["sub_scores"].is_array() ||
            doc["sub_scores"].size() != kTopClusters) {
          fail(ErrorKind::SchemaViolation, "sub-score file must hold a list of 5 sub_scores");
        }
        try {
          input.sub_scores = doc["sub_scores"].get<std::vector<double>>();
        } catch (const json::exception& ex) {
          fail(ErrorKind::SchemaViolation, std::string("bad sub_scores: ") + ex.what());
        }
      }
      if (!input.sub_scores && !g.auto_rate) {
        fail(ErrorKind::MissingSubScores, "no sub_scores given; pass --scores or --auto-rate");
      }
      Warnings w;
      auto report = judge_video(model, input, g.auto_rate, &w);
      flush_warnings(w, g);
      write_text(out_path, report.to_json().dump(2) + "\n");
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  action();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const engage::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return engage::exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: SchemaViolation: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: Io: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
