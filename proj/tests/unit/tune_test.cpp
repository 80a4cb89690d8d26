#include <doctest.h>

#include <cmath>

#include "engage/pipeline.hpp"
#include "engage/tune.hpp"
#include "fixtures.hpp"

using namespace engage;

namespace {

// Smooth objective with its minimum near learning_rate 0.1, depth 5.
double bowl(const GbtConfig& c, int) {
  const double a = std::log(c.learning_rate / 0.1);
  const double b = (c.max_depth - 5) / 3.0;
  const double d = (c.subsample - 0.8) * 2.0;
  return a * a + b * b + d * d + 0.01 * c.reg_lambda;
}

}  // namespace

TEST_CASE("a single trial returns its own config") {
  TuneOptions opt{.n_trials = 1, .seed = 3};
  auto r = tune(SearchSpace{}, opt, GbtConfig{}, bowl);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.best_index == 0);
  CHECK(r.best == r.trials[0].config);
  CHECK(r.trials[0].warmup);
}

TEST_CASE("trial log invariants") {
  SearchSpace space;
  GbtConfig base;
  base.seed = 99;
  auto r = tune(space, TuneOptions{.n_trials = 40, .seed = 5}, base, bowl);
  REQUIRE(r.trials.size() == 40);
  double running = INFINITY;
  double best = INFINITY;
  int argmin = -1;
  for (int i = 0; i < 40; ++i) {
    const auto& t = r.trials[static_cast<std::size_t>(i)];
    CHECK(t.index == i);
    CHECK(t.warmup == (i < 8));
    CHECK(space.contains(t.config));
    CHECK_NOTHROW(t.config.validate());
    CHECK(t.config.seed == 99);
    CHECK(t.val_rmse >= 0.0);
    const double next = std::min(running, t.val_rmse);
    CHECK(next <= running);
    running = next;
    if (t.val_rmse < best) {
      best = t.val_rmse;
      argmin = i;
    }
  }
  CHECK(r.best_index == argmin);
  CHECK(r.best == r.trials[static_cast<std::size_t>(argmin)].config);
}

TEST_CASE("same seed reproduces the trial sequence") {
  auto a = tune(SearchSpace{}, TuneOptions{.n_trials = 25, .seed = 11}, GbtConfig{}, bowl);
  auto b = tune(SearchSpace{}, TuneOptions{.n_trials = 25, .seed = 11}, GbtConfig{}, bowl);
  auto c = tune(SearchSpace{}, TuneOptions{.n_trials = 25, .seed = 12}, GbtConfig{}, bowl);
  for (std::size_t i = 0; i < 25; ++i) CHECK(a.trials[i].config == b.trials[i].config);
  CHECK(a.best == b.best);
  CHECK(a.trials[0].config != c.trials[0].config);
}

TEST_CASE("parallel warm-up matches the sequential run") {
  auto seq = tune(SearchSpace{}, TuneOptions{.n_trials = 20, .seed = 4}, GbtConfig{}, bowl);
  auto par = tune(SearchSpace{}, TuneOptions{.n_trials = 20, .seed = 4, .parallel_warmup = true}, GbtConfig{}, bowl);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(seq.trials[i].config == par.trials[i].config);
    CHECK(seq.trials[i].val_rmse == par.trials[i].val_rmse);
  }
}

TEST_CASE("the surrogate improves on the warm-up") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = tune(SearchSpace{}, TuneOptions{.n_trials = 50, .seed = seed}, GbtConfig{}, bowl);
    double warm = INFINITY;
    for (const auto& t : r.trials) {
      if (t.warmup) warm = std::min(warm, t.val_rmse);
    }
    if (r.trials[static_cast<std::size_t>(r.best_index)].val_rmse < warm) ++wins;
  }
  CHECK(wins >= 8);
}

TEST_CASE("empty spaces and degenerate validation sets") {
  SearchSpace s;
  s.max_depth = {6, 3};
  CHECK(fixtures::kind_of([&] { s.validate(); }) == ErrorKind::EmptySpace);
  s = SearchSpace{};
  s.learning_rate = {0.0, 0.1};
  CHECK(fixtures::kind_of([&] { s.validate(); }) == ErrorKind::EmptySpace);
  s = SearchSpace{};
  s.subsample = {0.5, 1.5};
  CHECK(fixtures::kind_of([&] { tune(s, TuneOptions{}, GbtConfig{}, bowl); }) == ErrorKind::EmptySpace);

  Matrix x = Matrix::Random(8, 2);
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> flat(4, 2.0);
  Matrix vx = Matrix::Random(4, 2);
  CHECK(fixtures::kind_of([&] { tune(x, y, vx, flat, SearchSpace{}, TuneOptions{}, GbtConfig{}); }) ==
        ErrorKind::DegenerateVal);
}

TEST_CASE("tuning on the planted corpus beats the default config") {
  PipelineConfig config;
  auto data = prepare(fixtures::planted().records, config);
  const auto& s = data.split;
  GbtConfig base = config.gbt;
  base.seed = data.seeds.gbt;
  auto val_rmse = [&](const GbtConfig& c) {
    auto r = train(s.train_x, s.train_y, c);
    auto p = predict_rows(r.ensemble, s.val_x);
    double sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - s.val_y[i]) * (p[i] - s.val_y[i]);
    return std::sqrt(sq / static_cast<double>(p.size()));
  };
  auto r = tune(s.train_x, s.train_y, s.val_x, s.val_y, SearchSpace{}, TuneOptions{.n_trials = 50, .seed = 1}, base);
  CHECK(r.trials[static_cast<std::size_t>(r.best_index)].val_rmse == doctest::Approx(val_rmse(r.best)).epsilon(1e-12));
  CHECK(val_rmse(r.best) <= val_rmse(base));
}
