// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "engage/artifact.hpp"
#include "engage/ingest.hpp"
#include "engage/pipeline.hpp"
#include "engage/rng.hpp"
#include "engage/synthetic.hpp"
#include "oracles.hpp"

using namespace engage;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Shared n=2000 planted run, reused by several criteria.
struct PlantedRun {
  SyntheticCorpus corpus;
  TrainOutcome outcome;
  double seconds = 0.0;
};

PlantedRun& planted_run() {
  static PlantedRun run = [] {
    PlantedRun r;
    const auto start = std::chrono::steady_clock::now();
    r.corpus = generate_synthetic_corpus(2000, default_planted_weights(), 0.05, 2024);
    r.outcome = train_pipeline(r.corpus.records, PipelineConfig{});
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }();
  return run;
}

// Global planted theme of each cluster, by majority over the vocabulary
// phrases assigned to it.
std::map<int, int> cluster_themes(const ModelArtifact& model, const SyntheticCorpus& corpus) {
  auto provider = make_provider(model.config);
  PhraseAssigner assigner(model.audio, model.visual, *provider);
  const FeatureLayout layout = model.layout();
  std::map<int, std::map<int, int>> votes;
  for (Modality m : {Modality::Audio, Modality::Visual}) {
    const int k = m == Modality::Audio ? layout.audio_k : layout.visual_k;
    if (k == 0) continue;
    for (const auto& phrase : vocabulary(corpus.records, m)) {
      const auto a = assigner.assign(m, phrase);
      ++votes[layout.cluster_index(m, a.cluster_id)][corpus.theme_of(m, phrase)];
    }
  }
  std::map<int, int> out;
  for (const auto& [cluster, count] : votes) {
    int best = -1, best_n = 0;
    for (const auto& [theme, n] : count) {
      if (n > best_n) {
        best = theme;
        best_n = n;
      }
    }
    out[cluster] = best;
  }
  return out;
}

std::string theme_name(int theme) {
  return (theme < kSyntheticThemes ? "a" : "v") + std::to_string(theme % kSyntheticThemes);
}

Outcome planted_recovery() {
  Outcome o;
  auto& run = planted_run();
  const auto& a = run.outcome.artifact;
  const auto themes = cluster_themes(a, run.corpus);
  std::set<int> recovered;
  std::string names;
  for (int c : a.weights.top5) {
    recovered.insert(themes.at(c));
    names += (names.empty() ? "" : ",") + theme_name(themes.at(c));
  }
  const auto planted_top = run.corpus.planted_top5();
  const std::set<int> planted(planted_top.begin(), planted_top.end());
  o.detail << "spearman=" << fmt(a.test_metrics.spearman) << " top5={" << names << "} time=" << fmt(run.seconds, 1)
           << "s ";
  o.require(a.test_metrics.spearman >= 0.90, "test spearman below 0.90");
  o.require(recovered == planted, "SHAP top-5 themes differ from the planted top-5");
  o.require(run.seconds < 300.0, "runtime above 5 minutes");
  return o;
}

Outcome ablation_ordering() {
  Outcome o;
  auto& run = planted_run();
  const auto& a = run.outcome.artifact;
  const auto both = run_ablation(a, run.corpus.records, ModalityMask::Both);
  const auto visual = run_ablation(a, run.corpus.records, ModalityMask::Visual);
  const auto audio = run_ablation(a, run.corpus.records, ModalityMask::Audio);
  o.detail << "both=" << fmt(both.spearman) << " visual=" << fmt(visual.spearman) << " audio=" << fmt(audio.spearman)
           << " ";
  o.require(both.spearman >= visual.spearman, "both < visual");
  o.require(visual.spearman >= audio.spearman, "visual < audio");
  return o;
}

bool same_tree(const RegressionTree& a, const RegressionTree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& u = a.nodes[i];
    const auto& v = b.nodes[i];
    if (u.feature != v.feature || u.left != v.left || u.right != v.right || u.cover != v.cover) return false;
    if (u.is_leaf() ? std::abs(u.value - v.value) > 1e-9 : u.threshold != v.threshold) return false;
  }
  return true;
}

Outcome gbt_oracle() {
  Outcome o;
  const std::vector<GbtConfig> configs{
      {.n_estimators = 1, .max_depth = 1, .learning_rate = 1.0, .reg_lambda = 0.0},
      {.n_estimators = 1, .max_depth = 3, .learning_rate = 0.3, .reg_lambda = 1.0},
      {.n_estimators = 1, .max_depth = 2, .learning_rate = 0.5, .min_child_weight = 2, .reg_lambda = 0.5},
  };
  constexpr int kGrid = 3;
  std::size_t datasets = 0, mismatches = 0;
  for (int p = 1; p <= 2; ++p) {
    int types = kGrid;  // y values
    for (int j = 0; j < p; ++j) types *= kGrid;
    // Non-decreasing sequences of row types enumerate every multiset once.
    std::vector<int> rows;
    std::function<void(int)> extend = [&](int first) {
      if (rows.size() == 1) {
        // A single row is rejected before any tree is grown.
        try {
          train(Matrix::Zero(1, p), std::vector<double>{1.0}, configs[0]);
          ++mismatches;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::TooFewRecords) ++mismatches;
        }
      }
      if (rows.size() >= 2) {
        const int n = static_cast<int>(rows.size());
        Matrix x(n, p);
        std::vector<double> y;
        for (int i = 0; i < n; ++i) {
          int t = rows[static_cast<std::size_t>(i)];
          y.push_back(t % kGrid);
          t /= kGrid;
          for (int j = 0; j < p; ++j) {
            x(i, j) = t % kGrid;
            t /= kGrid;
          }
        }
        const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
        for (const auto& c : configs) {
          ++datasets;
          const auto r = train(x, y, c);
          const auto expected = oracle::BruteForceTree(x, y, c).build();
          bool ok;
          if (constant) {
            ok = r.ensemble.trees.empty() && expected.nodes.size() == 1 && expected.nodes[0].value == 0.0;
          } else {
            ok = r.ensemble.trees.size() == 1 && same_tree(r.ensemble.trees[0], expected);
          }
          if (!ok) ++mismatches;
        }
      }
      if (rows.size() == 6) return;
      for (int t = first; t < types; ++t) {
        rows.push_back(t);
        extend(t);
        rows.pop_back();
      }
    };
    extend(0);
  }
  o.detail << "datasets=" << datasets << " mismatches=" << mismatches << " ";
  o.require(mismatches == 0, "trained tree differs from the brute-force tree");
  return o;
}

Outcome treeshap_oracle() {
  Outcome o;
  Rng rng(404);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int p = 1 + static_cast<int>(rng.below(4));
    const auto tree = oracle::random_tree(rng, p, 1 + static_cast<int>(rng.below(3)));
    Eigen::RowVectorXd x(p);
    for (int j = 0; j < p; ++j) x[j] = rng.uniform();
    const auto phi = tree_shap(tree, x, p);
    const auto expected = oracle::shapley(tree, x, p);
    for (int j = 0; j < p; ++j) worst = std::max(worst, std::abs(phi[j] - expected[j]));
  }
  const auto& ensemble = planted_run().outcome.artifact.ensemble;
  double worst_local = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::RowVectorXd x(ensemble.n_features);
    const int half = ensemble.n_features / 2;
    for (int j = 0; j < half; ++j) x[j] = static_cast<double>(rng.below(2));
    for (int j = half; j < ensemble.n_features; ++j) x[j] = 0.5 * rng.uniform();
    const auto a = tree_shap(ensemble, x);
    const double total = std::accumulate(a.phi.begin(), a.phi.end(), a.base_value);
    worst_local = std::max(worst_local, std::abs(total - predict(ensemble, x)));
  }
  o.detail << "max|phi-shapley|=" << worst << " max local error=" << worst_local << " ";
  o.require(worst <= 1e-8, "TreeSHAP differs from exhaustive Shapley values");
  o.require(worst_local < 1e-6, "local accuracy violated");
  return o;
}

Outcome table_arithmetic() {
  Outcome o;
  const std::vector<double> top{12.4, 10.7, 9.1, 7.6, 6.9};
  const double top_sum = std::accumulate(top.begin(), top.end(), 0.0);
  // Fifteen more clusters share the remainder evenly, each below 6.9%.
  std::vector<double> importance(40, 0.0);
  for (int c = 0; c < 5; ++c) importance[static_cast<std::size_t>(c)] = top[static_cast<std::size_t>(c)];
  for (int c = 5; c < 20; ++c) importance[static_cast<std::size_t>(c)] = (100.0 - top_sum) / 15.0;
  const auto w = make_cluster_weights(importance, FeatureLayout{});
  double share = 0.0;
  for (int c : w.top5) share += w.cluster_weights[static_cast<std::size_t>(c)];
  const auto s = judge_score(top, std::vector<double>{10, 0, 0, 0, 0}).score;
  o.detail << "top5=" << fmt(100 * share, 1) << "% remainder=" << fmt(100 - 100 * share, 1) << "% S=" << fmt(s) << " ";
  o.require(std::abs(top_sum - 46.7) < 1e-9, "table sum is not 46.7");
  o.require(std::abs(100 * share - 46.7) < 1e-9, "top-5 share is not 46.7%");
  o.require(std::lround(100 - 100 * share) == 53, "remainder is not about 53%");
  o.require(w.top5 == std::vector<int>{0, 1, 2, 3, 4}, "top-5 order differs from the table");
  o.require(std::abs(s - 2.655) <= 0.001, "judge score is not 2.655");
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng(606);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(199);
    const int levels = t % 2 == 0 ? 0 : 2 + static_cast<int>(rng.below(8));
    std::vector<double> y, p;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(levels ? static_cast<double>(rng.below(levels)) : rng.normal());
      p.push_back(t % 3 == 0 ? static_cast<double>(rng.below(5)) : rng.normal());
    }
    const auto m = compute_metrics(p, y);
    worst = std::max({worst, std::abs(m.spearman - oracle::spearman(p, y)),
                      std::abs(m.kendall_tau_b - oracle::kendall_tau_b(p, y)),
                      std::abs(m.pairwise_accuracy - oracle::pairwise_accuracy(p, y))});
  }
  std::vector<double> y;
  for (int i = 0; i < 100; ++i) y.push_back(rng.normal());
  std::vector<double> rev;
  for (double v : y) rev.push_back(-3 * v);
  const auto id = compute_metrics(y, y);
  const auto re = compute_metrics(rev, y);
  o.detail << "max deviation=" << worst << " ";
  o.require(worst <= 1e-12, "metrics differ from the pair-enumeration oracles");
  o.require(id.spearman == 1.0 && id.kendall_tau_b == 1.0 && id.pairwise_accuracy == 1.0, "identity not exact");
  o.require(re.spearman == -1.0 && re.kendall_tau_b == -1.0 && re.pairwise_accuracy == 0.0, "reversal not exact");
  return o;
}

bool monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) return false;
  }
  return true;
}

Outcome determinism() {
  Outcome o;
  const auto dir = std::filesystem::path(ENGAGE_TEST_SCRATCH_DIR) / "acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto& run = planted_run();
  const auto second = train_pipeline(run.corpus.records, PipelineConfig{});
  save_artifact((dir / "a.json").string(), run.outcome.artifact);
  save_artifact((dir / "b.json").string(), second.artifact);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  o.require(slurp(dir / "a.json") == slurp(dir / "b.json"), "artifacts differ");

  int traces = 0;
  bool ok = true;
  for (const ModelArtifact* a : std::array<const ModelArtifact*, 2>{&run.outcome.artifact, &second.artifact}) {
    for (const ModalityModel* m : {&a->audio, &a->visual}) {
      ok = ok && monotone(m->clusters.inertia_trace);
      ++traces;
    }
  }
  auto provider = make_provider(PipelineConfig{});
  for (Modality m : {Modality::Audio, Modality::Visual}) {
    const Matrix points = embed_all(vocabulary(run.corpus.records, m), *provider);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto model = fit_kmeans(points, {.k = 10, .seed = seed}, m);
      ok = ok && monotone(model.inertia_trace);
      ++traces;
    }
  }
  o.detail << "bytes=" << std::filesystem::file_size(dir / "a.json") << " inertia traces=" << traces << " ";
  o.require(ok, "an inertia trace increases");
  return o;
}

Outcome formula_bounds() {
  Outcome o;
  Rng rng(808);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> w(5), s(5);
    for (int i = 0; i < 5; ++i) {
      w[static_cast<std::size_t>(i)] = rng.uniform() * std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
      s[static_cast<std::size_t>(i)] = rng.below(10) == 0 ? static_cast<double>(rng.below(11)) : 10 * rng.uniform();
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) continue;
    const double v = judge_score(w, s).score;
    if (v < *std::min_element(s.begin(), s.end()) || v > *std::max_element(s.begin(), s.end())) ++violations;
  }
  const auto& a = planted_run().outcome.artifact;
  const auto& records = planted_run().corpus.records;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Vector f(a.ensemble.n_features), g(a.ensemble.n_features);
    for (int j = 0; j < f.size(); ++j) {
      f[j] = rng.uniform();
      g[j] = rng.uniform();
    }
    const double alpha = 2.0;
    const double ef = evaluate_engagement(a.weights.weights, f);
    const double eg = evaluate_engagement(a.weights.weights, g);
    worst = std::max(worst, std::abs(evaluate_engagement(a.weights.weights, Vector(alpha * f)) - alpha * ef));
    worst = std::max(worst, std::abs(evaluate_engagement(a.weights.weights, Vector(f + g)) - (ef + eg)));
  }
  o.detail << "bound violations=" << violations << " max linearity error=" << worst << " videos=" << records.size()
           << " ";
  o.require(violations == 0, "judge score left [min s, max s]");
  o.require(worst <= 1e-12, "E is not linear");
  return o;
}

std::string vlm_json(const VideoRecord& r) {
  nlohmann::json doc;
  doc["audio"] = std::vector<std::string>(r.descriptors.audio.begin(), r.descriptors.audio.end());
  doc["video"] = std::vector<std::string>(r.descriptors.visual.begin(), r.descriptors.visual.end());
  return doc.dump();
}

Outcome ingestion_robustness() {
  Outcome o;
  const auto corpus = generate_synthetic_corpus(1000, default_planted_weights(), 0.05, 99);
  Rng rng(909);
  std::vector<std::size_t> order(1000);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const std::set<std::size_t> bad(order.begin(), order.begin() + 50);
  std::vector<std::string> lines;
  std::set<std::string> bad_ids;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& r = corpus.records[i];
    std::string raw = vlm_json(r);
    if (bad.count(i)) {
      bad_ids.insert(r.id);
      switch (i % 5) {
        case 0: raw = raw.substr(0, raw.size() / 2); break;                   // truncated
        case 1: raw = R"({"audio": ["hum"], "vid": ["pan"]})"; break;          // missing key
        case 2: raw = R"({"audio": [], "video": []})"; break;                  // empty lists
        case 3: raw = R"({"audio": ["hum", 4], "video": ["pan"]})"; break;     // non-string entry
        default: raw = "Sure! Here are the descriptors you asked for."; break;  // prose
      }
    }
    nlohmann::ordered_json doc;
    doc["id"] = r.id;
    doc["duration_s"] = r.duration_s;
    doc["views"] = r.views;
    doc["likes"] = r.likes;
    doc["vlm_raw"] = raw;
    lines.push_back(doc.dump());
  }
  const auto result = ingest(lines, IngestOptions{});
  std::set<std::string> dropped;
  bool reasons = true;
  for (const auto& d : result.report.dropped) {
    dropped.insert(d.id);
    reasons = reasons && (d.reason.find("MalformedJson") != std::string::npos ||
                          d.reason.find("SchemaViolation") != std::string::npos);
  }
  o.detail << "kept=" << result.report.kept << " dropped=" << result.report.dropped.size() << " ";
  o.require(result.records.size() == 950 && result.report.kept == 950, "kept count is not 950");
  o.require(dropped == bad_ids, "dropped set differs from the malformed set");
  o.require(reasons, "drop reasons do not name the parse failure");
  o.require(result.report.to_json()["dropped"].size() == 50, "report does not list the drops");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 planted-model recovery", planted_recovery},
      {"2 ablation ordering", ablation_ordering},
      {"3 GBT oracle equivalence", gbt_oracle},
      {"4 TreeSHAP oracle equivalence", treeshap_oracle},
      {"5 importance table arithmetic", table_arithmetic},
      {"6 metric oracles", metric_oracles},
      {"7 determinism", determinism},
      {"8 formula bounds", formula_bounds},
      {"9 ingestion robustness", ingestion_robustness},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s: %s(%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
