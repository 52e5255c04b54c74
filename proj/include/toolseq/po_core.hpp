#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "toolseq/degrade.hpp"
#include "toolseq/env.hpp"
#include "toolseq/nets.hpp"
#include "toolseq/rng.hpp"

namespace toolseq {

enum class PoVariant { Ppo, Grpo };

struct PoConfig {
  double lr = 0.01;
  double c1 = 0.5;             // critic coefficient
  double c2 = 0.05;            // entropy coefficient
  double entropy_decay = 0.99; // per update phase
  double gamma = 0.99;
  double lambda = 0.95;
  double eps_clip = 0.2;
  int t_max = 5;
  int episodes_per_update = 32;
  int update_epochs = 4;
  int minibatch = 8;
  int updates = 300;
  PoVariant variant = PoVariant::Ppo;
  int grpo_group = 8;
  std::uint64_t seed = 0;
  int checkpoint_every = 50;

  void validate() const;
  nlohmann::json to_json() const;
  static PoConfig from_json(const nlohmann::json& j);
};

struct Transition {
  State state;
  int action = 0;
  double log_prob_old = 0.0;
  double value_old = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> transitions;
  double terminal_value = 0.0;  // 0 when the episode ended (STOP or cap)
  double episode_return() const;
};

// Samples actions until STOP or the env's step cap; critic may be null (GRPO).
Trajectory collect_trajectory(RestorationEnv& env, const Raster& degraded,
                              const Actor& actor, const Critic* critic, Rng& rng);

// Backward recursion A_t = delta_t + gamma*lambda*A_{t+1}; returns (advantages,
// returns) with R_t = A_t + V(s_t).
std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    double terminal_value, double gamma, double lambda);

// Group-standardized returns: (R_i - mean) / (std + 1e-8). Requires size >= 2.
std::vector<double> grpo_advantages(const std::vector<double>& group_returns);

struct FlatSample {
  State state;
  int action = 0;
  double log_prob_old = 0.0;
  double advantage = 0.0;   // normalized
  double return_target = 0.0;
};

struct LossStats {
  double loss_po = 0.0;   // surrogate objective (to maximize)
  double loss_vf = 0.0;   // critic squared error
  double loss_eb = 0.0;   // mean entropy
  double entropy = 0.0;
};

// One PPO update phase over the batch: update_epochs passes of shuffled
// minibatches, clipped surrogate + critic loss + decayed entropy bonus.
// Advantages must already be normalized. critic/critic_adam may be null.
LossStats ppo_update(std::vector<FlatSample>& batch, Actor& actor,
                     AdamState& actor_adam, Critic* critic,
                     AdamState* critic_adam, const PoConfig& cfg,
                     int update_index, Rng& rng);

// Normalizes advantages in place over the whole batch (mean 0, std 1).
void normalize_advantages(std::vector<FlatSample>& batch);

struct Plan {
  std::vector<int> actions;           // STOP excluded
  std::vector<std::string> names;
  std::vector<double> scores;         // provider score after each action
  double initial_score = 0.0;
  double final_score = 0.0;
  Raster restored;
  int policy_forwards = 0;
};

// Greedy argmax rollout; deterministic; no rollback.
Plan infer_plan(const Actor& actor, const ToolRegistry& registry,
                const RewardProvider& provider, const Raster& degraded, int t_max);

struct CheckpointMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint I/O. Loading verifies the registry fingerprint.
struct Checkpoint {
  Actor actor;
  std::optional<Critic> critic;
  PoConfig config;
  std::uint64_t registry_fingerprint = 0;
  std::string registry_serialized;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path, const ToolRegistry& runtime_registry);

// Maps a manifest row to its evaluator (the oracle provider needs the row's
// clean image; label-free providers ignore the row).
class ProviderFactory {
 public:
  virtual ~ProviderFactory() = default;
  virtual const RewardProvider& for_row(const ManifestRow& row) = 0;
};

class FixedProviderFactory final : public ProviderFactory {
 public:
  explicit FixedProviderFactory(std::unique_ptr<RewardProvider> p) : p_(std::move(p)) {}
  const RewardProvider& for_row(const ManifestRow&) override { return *p_; }

 private:
  std::unique_ptr<RewardProvider> p_;
};

class OracleProviderFactory final : public ProviderFactory {
 public:
  const RewardProvider& for_row(const ManifestRow& row) override;

 private:
  std::string cached_path_;
  std::unique_ptr<RewardProvider> cached_;
};

struct TrainResult {
  Checkpoint checkpoint;
  double final_greedy_eval = 0.0;
  int episodes_aborted = 0;
};

struct TrainOptions {
  std::string checkpoint_path;          // written every checkpoint_every and at the end
  std::string log_path;                 // JSON lines per update; empty = no log
  std::vector<ManifestRow> eval_rows;   // held-out greedy eval; empty = use train rows
  int eval_limit = 16;                  // images per greedy eval pass
  std::function<void(int, const LossStats&, double, double)> on_update;  // optional
};

TrainResult train(const PoConfig& cfg, const std::vector<ManifestRow>& rows,
                  ProviderFactory& providers, const ToolRegistry& registry,
                  const TrainOptions& opts);

}  // namespace toolseq
