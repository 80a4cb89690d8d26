#include "engage/tune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numbers>
#include <numeric>

#include "engage/rng.hpp"

namespace engage {

void SearchSpace::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::EmptySpace, what); };
  if (!(learning_rate.lo > 0.0 && learning_rate.lo <= learning_rate.hi && learning_rate.hi <= 1.0)) {
    bad("learning_rate range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(max_depth.lo >= 1 && max_depth.lo <= max_depth.hi && max_depth.hi <= 16)) {
    bad("max_depth range must lie in [1, 16]");
  }
  if (!(n_estimators.lo >= 1 && n_estimators.lo <= n_estimators.hi)) bad("n_estimators range is empty");
  if (!(min_child_weight.lo >= 0 && min_child_weight.lo <= min_child_weight.hi)) {
    bad("min_child_weight range is empty");
  }
  for (const auto* r : {&subsample, &colsample}) {
    if (!(r->lo > 0.0 && r->lo <= r->hi && r->hi <= 1.0)) bad("sampling ranges must lie in (0, 1]");
  }
  if (!(reg_lambda.lo >= 0.0 && reg_lambda.lo <= reg_lambda.hi)) bad("reg_lambda range is empty");
}

namespace {

double decode_real(double u, SearchSpace::Real r) { return r.lo + u * (r.hi - r.lo); }
double decode_log(double u, SearchSpace::Real r) {
  return std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo)));
}
int decode_int(double u, SearchSpace::Int r) {
  const int span = r.hi - r.lo + 1;
  return std::min(r.hi, r.lo + static_cast<int>(std::floor(u * span)));
}
double encode_real(double v, SearchSpace::Real r) { return r.hi > r.lo ? (v - r.lo) / (r.hi - r.lo) : 0.5; }
double encode_log(double v, SearchSpace::Real r) {
  return r.hi > r.lo ? (std::log(v) - std::log(r.lo)) / (std::log(r.hi) - std::log(r.lo)) : 0.5;
}
double encode_int(int v, SearchSpace::Int r) { return (v - r.lo + 0.5) / (r.hi - r.lo + 1); }

}  // namespace

GbtConfig SearchSpace::decode(const std::array<double, kDims>& u, const GbtConfig& base) const {
  GbtConfig c = base;
  c.learning_rate = std::clamp(decode_log(u[0], learning_rate), learning_rate.lo, learning_rate.hi);
  c.max_depth = decode_int(u[1], max_depth);
  c.n_estimators = decode_int(u[2], n_estimators);
  c.min_child_weight = decode_int(u[3], min_child_weight);
  c.subsample = std::clamp(decode_real(u[4], subsample), subsample.lo, subsample.hi);
  c.colsample = std::clamp(decode_real(u[5], colsample), colsample.lo, colsample.hi);
  c.reg_lambda = std::clamp(decode_real(u[6], reg_lambda), reg_lambda.lo, reg_lambda.hi);
  return c;
}

std::array<double, SearchSpace::kDims> SearchSpace::encode(const GbtConfig& c) const {
  return {encode_log(c.learning_rate, learning_rate),
          encode_int(c.max_depth, max_depth),
          encode_int(c.n_estimators, n_estimators),
          encode_int(static_cast<int>(std::lround(c.min_child_weight)), min_child_weight),
          encode_real(c.subsample, subsample),
          encode_real(c.colsample, colsample),
          encode_real(c.reg_lambda, reg_lambda)};
}

bool SearchSpace::contains(const GbtConfig& c) const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  return in(c.learning_rate, learning_rate.lo, learning_rate.hi) &&
         in(c.max_depth, max_depth.lo, max_depth.hi) &&
         in(c.n_estimators, n_estimators.lo, n_estimators.hi) &&
         in(c.min_child_weight, min_child_weight.lo, min_child_weight.hi) &&
         in(c.subsample, subsample.lo, subsample.hi) && in(c.colsample, colsample.lo, colsample.hi) &&
         in(c.reg_lambda, reg_lambda.lo, reg_lambda.hi);
}

int warmup_trials(int n_trials) { return (n_trials + 4) / 5; }

namespace {

using Point = std::array<double, SearchSpace::kDims>;

// One-dimensional Parzen estimator on [0, 1]: truncated Gaussians at the
// observations plus one uniform prior component.
class Parzen {
 public:
  explicit Parzen(std::vector<double> centers) : centers_(std::move(centers)) {
    const double m = static_cast<double>(centers_.size());
    if (centers_.size() >= 2) {
      const double mean = std::accumulate(centers_.begin(), centers_.end(), 0.0) / m;
      double var = 0.0;
      for (double c : centers_) var += (c - mean) * (c - mean);
      const double sd = std::sqrt(var / (m - 1.0));
      bandwidth_ = 1.06 * sd * std::pow(m, -0.2);
    }
    bandwidth_ = std::clamp(bandwidth_, 0.05, 0.5);
  }

  double density(double u) const {
    double total = 1.0;  // uniform prior on [0, 1]
    for (double c : centers_) {
      const double z = (u - c) / bandwidth_;
      const double mass = cdf((1.0 - c) / bandwidth_) - cdf(-c / bandwidth_);
      total += std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * bandwidth_ * mass);
    }
    return total / static_cast<double>(centers_.size() + 1);
  }

  double sample(Rng& rng) const {
    const auto pick = rng.below(centers_.size() + 1);
    if (pick == centers_.size()) return rng.uniform();
    const double c = centers_[pick];
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double u = c + bandwidth_ * rng.normal();
      if (u >= 0.0 && u <= 1.0) return u;
    }
    return std::clamp(c, 0.0, 1.0);
  }

 private:
  static double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

  std::vector<double> centers_;
  double bandwidth_ = 0.5;
};

Point uniform_point(Rng& rng) {
  Point p;
  for (double& v : p) v = rng.uniform();
  return p;
}

Point propose(const std::vector<TrialRecord>& history, const SearchSpace& space, int candidates, Rng& rng) {
  std::vector<int> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return history[a].val_rmse < history[b].val_rmse; });
  const std::size_t n_good = std::max<std::size_t>(1, history.size() / 2);

  std::vector<Parzen> good;
  std::vector<Parzen> bad;
  for (int d = 0; d < SearchSpace::kDims; ++d) {
    std::vector<double> g;
    std::vector<double> b;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const double u = space.encode(history[order[r]].config)[d];
      (r < n_good ? g : b).push_back(std::clamp(u, 0.0, 1.0));
    }
    good.emplace_back(std::move(g));
    bad.emplace_back(std::move(b));
  }

  Point best{};
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < candidates; ++c) {
    Point p;
    double score = 0.0;
    for (int d = 0; d < SearchSpace::kDims; ++d) {
      p[d] = good[d].sample(rng);
      score += std::log(good[d].density(p[d])) - std::log(bad[d].density(p[d]));
    }
    if (score > best_score) {
      best_score = score;
      best = p;
    }
  }
  return best;
}

TrialRecord run_trial(int index, const GbtConfig& config, bool warmup, const TrialObjective& objective) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord t;
  t.index = index;
  t.config = config;
  t.warmup = warmup;
  t.val_rmse = objective(config, index);
  t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

}  // namespace

TuneResult tune(const SearchSpace& space, const TuneOptions& options, const GbtConfig& base,
                const TrialObjective& objective) {
  space.validate();
  if (options.n_trials < 1) fail(ErrorKind::InvalidConfig, "n_trials must be >= 1");
  if (options.candidates < 1) fail(ErrorKind::InvalidConfig, "candidates must be >= 1");

  TuneResult result;
  const int n_warmup = std::min(options.n_trials, warmup_trials(options.n_trials));
  std::vector<GbtConfig> warm(static_cast<std::size_t>(n_warmup));
  for (int i = 0; i < n_warmup; ++i) {
    Rng rng(derive_seed(options.seed, "warmup", static_cast<std::uint64_t>(i)));
    warm[i] = space.decode(uniform_point(rng), base);
  }
  if (options.parallel_warmup && n_warmup > 1) {
    std::vector<std::future<TrialRecord>> jobs;
    for (int i = 0; i < n_warmup; ++i) {
      jobs.push_back(std::async(std::launch::async, run_trial, i, warm[i], true, std::cref(objective)));
    }
    for (auto& j : jobs) result.trials.push_back(j.get());
  } else {
    for (int i = 0; i < n_warmup; ++i) result.trials.push_back(run_trial(i, warm[i], true, objective));
  }

  for (int i = n_warmup; i < options.n_trials; ++i) {
    Rng rng(derive_seed(options.seed, "tpe", static_cast<std::uint64_t>(i)));
    const Point p = propose(result.trials, space, options.candidates, rng);
    result.trials.push_back(run_trial(i, space.decode(p, base), false, objective));
  }

  for (std::size_t i = 1; i < result.trials.size(); ++i) {
    if (result.trials[i].val_rmse < result.trials[result.best_index].val_rmse) {
      result.best_index = static_cast<int>(i);
    }
  }
  result.best = result.trials[result.best_index].config;
  return result;
}

TuneResult tune(const Matrix& train_x, std::span<const double> train_y, const Matrix& val_x,
                std::span<const double> val_y, const SearchSpace& space, const TuneOptions& options,
                const GbtConfig& base, const TrialObserver& observer) {
  if (val_y.empty()) fail(ErrorKind::DegenerateVal, "validation set is empty");
  const auto [lo, hi] = std::minmax_element(val_y.begin(), val_y.end());
  if (*lo == *hi) fail(ErrorKind::DegenerateVal, "validation targets are constant");
  auto objective = [&](const GbtConfig& config, int index) {
    TrainResult r = train(train_x, train_y, config, &val_x, val_y);
    if (observer) observer(index, r);
    const auto pred = predict_rows(r.ensemble, val_x);
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sq += (pred[i] - val_y[i]) * (pred[i] - val_y[i]);
    return std::sqrt(sq / static_cast<double>(pred.size()));
  };
  return tune(space, options, base, objective);
}

}  // namespace engage
