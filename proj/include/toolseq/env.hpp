#pragma once

#include <stdexcept>

#include "toolseq/featurize.hpp"
#include "toolseq/raster.hpp"
#include "toolseq/reward.hpp"
#include "toolseq/toolset.hpp"

namespace toolseq {

// Sequential restoration episode: image in, one tool per step, reward is the
// evaluator score delta. Scores are cached, one evaluator call per step.
class RestorationEnv {
 public:
  RestorationEnv(const ToolRegistry& registry, const RewardProvider& provider,
                 int t_max)
      : registry_(registry), provider_(provider), t_max_(t_max),
        record_(registry.n_actions()) {}

  State reset(const Raster& degraded);

  struct StepResult {
    State state;
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(int action);  // throws if already done

  const Raster& image() const { return image_; }
  int steps_taken() const { return step_; }
  bool done() const { return done_; }
  double last_score() const { return last_score_; }
  double initial_score() const { return initial_score_; }
  const ActionRecord& record() const { return record_; }
  int t_max() const { return t_max_; }
  const ToolRegistry& registry() const { return registry_; }

 private:
  State current_state() const;

  const ToolRegistry& registry_;
  const RewardProvider& provider_;
  int t_max_;
  Raster image_;
  ActionRecord record_;
  int step_ = 0;
  double last_score_ = 0.0;
  double initial_score_ = 0.0;
  bool done_ = true;
};

}  // namespace toolseq
