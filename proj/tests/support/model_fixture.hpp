#pragma once

#include "engage/pipeline.hpp"
#include "fixtures.hpp"

namespace fixtures {

// Small training config so pipeline tests stay fast.
inline engage::PipelineConfig quick_config() {
  engage::PipelineConfig c;
  c.gbt.n_estimators = 120;
  c.gbt.learning_rate = 0.1;
  c.gbt.max_depth = 4;
  c.kmeans_n_init = 2;
  return c;
}

inline const engage::TrainOutcome& quick_model() {
  static engage::TrainOutcome outcome = engage::train_pipeline(planted().records, quick_config());
  return outcome;
}

}  // namespace fixtures
