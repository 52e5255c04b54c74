#include "toolseq/env.hpp"

#include <algorithm>

namespace toolseq {

State RestorationEnv::current_state() const {
  return assemble_state(extract_features(image_), record_);
}

State RestorationEnv::reset(const Raster& degraded) {
  image_ = degraded;
  record_ = ActionRecord(registry_.n_actions());
  step_ = 0;
  done_ = false;
  last_score_ = provider_.score(image_);
  initial_score_ = last_score_;
  return current_state();
}

RestorationEnv::StepResult RestorationEnv::step(int action) {
  if (done_) throw std::logic_error("step() on a finished episode");
  StepResult r;
  if (action == registry_.stop_index()) {
    done_ = true;
    step_ += 1;
    r.state = current_state();
    r.reward = 0.0;
    r.done = true;
    return r;
  }
  image_ = registry_.apply(action, image_);
  double score = provider_.score(image_);
  r.reward = score - last_score_;
  last_score_ = score;
  record_.mark(action);
  step_ += 1;
  done_ = step_ >= t_max_;
  r.done = done_;
  r.state = current_state();
  return r;
}

}  // namespace toolseq
