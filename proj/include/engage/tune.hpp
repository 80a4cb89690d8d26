#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "engage/gbt.hpp"

namespace engage {

struct SearchSpace {
  struct Real {
    double lo;
    double hi;
  };
  struct Int {
    int lo;
    int hi;
  };
  Real learning_rate{0.01, 0.3};  // sampled log-uniformly
  Int max_depth{3, 10};
  Int n_estimators{100, 800};
  Int min_child_weight{1, 10};
  Real subsample{0.5, 1.0};
  Real colsample{0.5, 1.0};
  Real reg_lambda{0.0, 5.0};

  static constexpr int kDims = 7;

  // Throws EmptySpace when a range is empty or would break GbtConfig bounds.
  void validate() const;
  bool contains(const GbtConfig& c) const;
  // Maps a point of the unit cube onto a config; `base` supplies the fields
  // that are not searched (seed, early stopping).
  GbtConfig decode(const std::array<double, kDims>& unit, const GbtConfig& base) const;
  std::array<double, kDims> encode(const GbtConfig& c) const;
};

struct TrialRecord {
  int index = 0;
  GbtConfig config;
  double val_rmse = 0.0;
  double wall_seconds = 0.0;
  bool warmup = false;
};

struct TuneOptions {
  int n_trials = 50;
  std::uint64_t seed = 0;
  int candidates = 24;
  // Warm-up trials sample uniformly; their count is ceil(n_trials / 5).
  bool parallel_warmup = false;
};

struct TuneResult {
  GbtConfig best;
  int best_index = 0;
  std::vector<TrialRecord> trials;
};

int warmup_trials(int n_trials);

using TrialObjective = std::function<double(const GbtConfig& config, int trial_index)>;

// Tree-structured Parzen search minimizing the objective. After the warm-up,
// trials are split at the median score into good and bad sets; candidates
// drawn from the good-set density are ranked by the good/bad density ratio.
TuneResult tune(const SearchSpace& space, const TuneOptions& options, const GbtConfig& base,
                const TrialObjective& objective);

// May be called from several threads during a parallel warm-up.
using TrialObserver = std::function<void(int trial_index, const TrainResult& result)>;

// Validation RMSE objective over GBT training runs. Every trial trains with
// base.seed so configs are compared on the same randomness.
TuneResult tune(const Matrix& train_x, std::span<const double> train_y, const Matrix& val_x,
                std::span<const double> val_y, const SearchSpace& space, const TuneOptions& options,
                const GbtConfig& base, const TrialObserver& observer = {});

}  // namespace engage
