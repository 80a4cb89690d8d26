#include <doctest.h>

#include <cmath>

#include "engage/rng.hpp"
#include "engage/score.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace engage;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, int levels) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) {
    v.push_back(levels > 0 ? static_cast<double>(rng.below(levels)) : rng.normal());
  }
  return v;
}

}  // namespace

TEST_CASE("hand-enumerated four point example") {
  std::vector<double> y{1, 2, 3, 4};
  std::vector<double> p{1, 2, 4, 3};
  auto m = compute_metrics(p, y);
  CHECK(m.spearman == doctest::Approx(0.8));
  CHECK(m.kendall_tau_b == doctest::Approx(2.0 / 3.0));
  CHECK(m.pairwise_accuracy == doctest::Approx(5.0 / 6.0));
  CHECK(m.mae == doctest::Approx(0.5));
  CHECK(m.rmse == doctest::Approx(std::sqrt(0.5)));
  CHECK(m.r2 == doctest::Approx(1.0 - 2.0 / 5.0));
  CHECK(m.n == 4);
}

TEST_CASE("identity and reversal") {
  std::vector<double> y{0.3, 0.1, 0.9, 0.5, 0.7};
  auto id = compute_metrics(y, y);
  CHECK(id.mae == 0.0);
  CHECK(id.rmse == 0.0);
  CHECK(id.r2 == 1.0);
  CHECK(id.spearman == 1.0);
  CHECK(id.kendall_tau_b == 1.0);
  CHECK(id.pairwise_accuracy == 1.0);
  std::vector<double> rev;
  for (double v : y) rev.push_back(-v);
  auto r = compute_metrics(rev, y);
  CHECK(r.spearman == -1.0);
  CHECK(r.kendall_tau_b == -1.0);
  CHECK(r.pairwise_accuracy == 0.0);
}

TEST_CASE("pair counting agrees with the quadratic oracle") {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(199);
    const int levels = t % 3 == 0 ? 0 : 2 + static_cast<int>(rng.below(6));
    auto y = random_vector(rng, n, levels);
    auto p = random_vector(rng, n, t % 2 ? levels : 0);
    auto m = compute_metrics(p, y);
    CHECK(std::abs(m.spearman - oracle::spearman(p, y)) <= 1e-12);
    CHECK(std::abs(m.kendall_tau_b - oracle::kendall_tau_b(p, y)) <= 1e-12);
    CHECK(std::abs(m.pairwise_accuracy - oracle::pairwise_accuracy(p, y)) <= 1e-12);
    auto c = count_pairs(p, y);
    auto o = oracle::count_pairs(p, y);
    CHECK(c.concordant == o.concordant);
    CHECK(c.discordant == o.discordant);
    CHECK(c.tied_targets == o.tied_y);
    CHECK(c.tied_predictions == o.tied_x);
    CHECK(c.tied_both == o.tied_xy);
    CHECK(average_ranks(p) == oracle::mid_ranks(p));
  }
}

TEST_CASE("rank metrics ignore monotone transforms") {
  Rng rng(5);
  auto y = random_vector(rng, 80, 0);
  auto p = random_vector(rng, 80, 0);
  std::vector<double> q;
  for (double v : p) q.push_back(std::exp(3 * v) + 2);
  auto a = compute_metrics(p, y);
  auto b = compute_metrics(q, y);
  CHECK(a.spearman == b.spearman);
  CHECK(a.kendall_tau_b == b.kendall_tau_b);
  CHECK(a.pairwise_accuracy == b.pairwise_accuracy);
}

TEST_CASE("metric errors") {
  std::vector<double> a{1, 2, 3}, b{1, 2};
  CHECK(fixtures::kind_of([&] { compute_metrics(a, b); }) == ErrorKind::LengthMismatch);
  CHECK(fixtures::kind_of([&] { compute_metrics(std::vector<double>{1}, std::vector<double>{1}); }) ==
        ErrorKind::TooFew);
}

TEST_CASE("evaluator E") {
  std::vector<double> w{0.5, 0.5};
  Vector f(2);
  f << 1, 0;
  CHECK(evaluate_engagement(w, f) == 0.5);
  CHECK(evaluate_engagement(w, Vector(Vector::Zero(2))) == 0.0);
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> wt(40);
    Vector x(40);
    for (int j = 0; j < 40; ++j) {
      wt[j] = rng.uniform();
      x[j] = rng.uniform();
    }
    const double e = evaluate_engagement(wt, x);
    CHECK(std::abs(evaluate_engagement(wt, Vector(2.0 * x)) - 2.0 * e) <= 1e-12);
  }
  CHECK(fixtures::kind_of([&] { evaluate_engagement(w, Vector(Vector::Zero(3))); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("judge score") {
  const std::vector<double> w{12.4, 10.7, 9.1, 7.6, 6.9};
  auto r = judge_score(w, std::vector<double>{10, 0, 0, 0, 0});
  CHECK(std::abs(r.score - 2.655) <= 1e-3);
  CHECK(r.score == doctest::Approx(10 * 12.4 / 46.7));
  double points = 0.0;
  for (const auto& c : r.contributions) points += c.points;
  CHECK(points == doctest::Approx(r.score));
  CHECK(judge_score(w, std::vector<double>(5, 10.0)).score == 10.0);
  CHECK(judge_score(w, std::vector<double>(5, 0.0)).score == 0.0);

  Rng rng(77);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> wt(5), s(5), scaled(5);
    for (int i = 0; i < 5; ++i) {
      wt[i] = rng.uniform() + 1e-3;
      s[i] = 10 * rng.uniform();
      scaled[i] = wt[i] * 37.5;
    }
    const double v = judge_score(wt, s).score;
    CHECK(v >= *std::min_element(s.begin(), s.end()));
    CHECK(v <= *std::max_element(s.begin(), s.end()));
    CHECK(judge_score(scaled, s).score == doctest::Approx(v).epsilon(1e-12));
  }

  CHECK(fixtures::kind_of([] { judge_score(std::vector<double>(5, 0.0), std::vector<double>(5, 1.0)); }) ==
        ErrorKind::WeightSumZero);
  CHECK(fixtures::kind_of([&] { judge_score(w, std::vector<double>{1, 2, 3, 4, 10.5}); }) ==
        ErrorKind::ScoreOutOfRange);
  CHECK(fixtures::kind_of([&] { judge_score(w, std::vector<double>{1, 2, 3, 4}); }) == ErrorKind::WrongArity);
}

TEST_CASE("metric report JSON uses the field names") {
  auto m = compute_metrics(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
  auto j = m.to_json();
  for (const char* k : {"mae", "rmse", "r2", "spearman", "kendall_tau_b", "pairwise_accuracy", "n"}) {
    CHECK(j.contains(k));
  }
}
