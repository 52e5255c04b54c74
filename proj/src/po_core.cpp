#include "toolseq/po_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace toolseq {

void PoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0,1]");
  if (!(eps_clip > 0.0)) throw std::invalid_argument("eps_clip must be > 0");
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (minibatch < 1 || update_epochs < 1 || episodes_per_update < 1)
    throw std::invalid_argument("batch settings must be >= 1");
  if (variant == PoVariant::Grpo && grpo_group < 2)
    throw std::invalid_argument("grpo_group must be >= 2");
}

json PoConfig::to_json() const {
  return {{"lr", lr},
          {"c1", c1},
          {"c2", c2},
          {"entropy_decay", entropy_decay},
          {"gamma", gamma},
          {"lambda", lambda},
          {"eps_clip", eps_clip},
          {"t_max", t_max},
          {"episodes_per_update", episodes_per_update},
          {"update_epochs", update_epochs},
          {"minibatch", minibatch},
          {"updates", updates},
          {"variant", variant == PoVariant::Ppo ? "ppo" : "grpo"},
          {"grpo_group", grpo_group},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every}};
}

PoConfig PoConfig::from_json(const json& j) {
  PoConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("lr", c.lr);
  get("c1", c.c1);
  get("c2", c.c2);
  get("entropy_decay", c.entropy_decay);
  get("gamma", c.gamma);
  get("lambda", c.lambda);
  get("eps_clip", c.eps_clip);
  get("t_max", c.t_max);
  get("episodes_per_update", c.episodes_per_update);
  get("update_epochs", c.update_epochs);
  get("minibatch", c.minibatch);
  get("updates", c.updates);
  get("grpo_group", c.grpo_group);
  get("seed", c.seed);
  get("checkpoint_every", c.checkpoint_every);
  if (j.contains("variant")) {
    std::string v = j.at("variant").get<std::string>();
    if (v == "ppo") c.variant = PoVariant::Ppo;
    else if (v == "grpo") c.variant = PoVariant::Grpo;
    else throw std::invalid_argument("variant must be 'ppo' or 'grpo'");
  }
  c.validate();
  return c;
}

double Trajectory::episode_return() const {
  double r = 0.0;
  for (const Transition& t : transitions) r += t.reward;
  return r;
}

Trajectory collect_trajectory(RestorationEnv& env, const Raster& degraded,
                              const Actor& actor, const Critic* critic, Rng& rng) {
  Trajectory traj;
  State state = env.reset(degraded);
  while (!env.done()) {
    auto [logits, probs] = actor.forward(state);
    // inverse-CDF sample
    double u = rng.uniform(0.0, 1.0);
    int action = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u <= acc) {
        action = static_cast<int>(i);
        break;
      }
      action = static_cast<int>(i);  // guards rounding at u ~ 1
    }
    Transition tr;
    tr.state = state;
    tr.action = action;
    tr.log_prob_old = std::log(std::max(probs[action], 1e-300));
    tr.value_old = critic ? critic->forward(state) : 0.0;
    auto step = env.step(action);
    tr.reward = step.reward;
    tr.done = step.done;
    traj.transitions.push_back(std::move(tr));
    state = std::move(step.state);
  }
  traj.terminal_value = 0.0;
  return traj;
}

std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    double terminal_value, double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("compute_gae: length mismatch");
  const std::size_t n = rewards.size();
  std::vector<double> adv(n), ret(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    double next_v = (i + 1 < n) ? values[i + 1] : terminal_value;
    double delta = rewards[i] + gamma * next_v - values[i];
    running = delta + gamma * lambda * running;
    adv[i] = running;
    ret[i] = adv[i] + values[i];
  }
  return {adv, ret};
}

std::vector<double> grpo_advantages(const std::vector<double>& group_returns) {
  if (group_returns.size() < 2)
    throw std::invalid_argument("grpo_advantages: group size must be >= 2");
  double mean = std::accumulate(group_returns.begin(), group_returns.end(), 0.0) /
                static_cast<double>(group_returns.size());
  double var = 0.0;
  for (double r : group_returns) var += (r - mean) * (r - mean);
  double std_dev = std::sqrt(var / static_cast<double>(group_returns.size()));
  std::vector<double> adv(group_returns.size());
  for (std::size_t i = 0; i < adv.size(); ++i)
    adv[i] = (group_returns[i] - mean) / (std_dev + 1e-8);
  return adv;
}

void normalize_advantages(std::vector<FlatSample>& batch) {
  if (batch.empty()) return;
  double mean = 0.0;
  for (const FlatSample& s : batch) mean += s.advantage;
  mean /= static_cast<double>(batch.size());
  double var = 0.0;
  for (const FlatSample& s : batch) var += (s.advantage - mean) * (s.advantage - mean);
  double std_dev = std::sqrt(var / static_cast<double>(batch.size()));
  std_dev = std::max(std_dev, 1e-8);
  for (FlatSample& s : batch) s.advantage = (s.advantage - mean) / std_dev;
}

LossStats ppo_update(std::vector<FlatSample>& batch, Actor& actor,
                     AdamState& actor_adam, Critic* critic,
                     AdamState* critic_adam, const PoConfig& cfg,
                     int update_index, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
  const double c2_eff = cfg.c2 * std::pow(cfg.entropy_decay, static_cast<double>(update_index));
  const int n_actions = actor.params.d_out;

  LossStats stats{};
  std::size_t stat_count = 0;

  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
      double inv_m = 1.0 / static_cast<double>(end - start);

      MlpGrads actor_g = zero_grads(actor.params);
      MlpGrads critic_g = critic ? zero_grads(critic->params) : MlpGrads{};

      for (std::size_t k = start; k < end; ++k) {
        const FlatSample& s = batch[order[k]];
        ForwardCache a_cache;
        auto [logits, probs] = actor.forward(s.state, &a_cache);
        double logp = std::log(std::max(probs[s.action], 1e-300));
        double ratio = std::exp(logp - s.log_prob_old);

        bool clipped = (s.advantage > 0.0 && ratio > 1.0 + cfg.eps_clip) ||
                       (s.advantage < 0.0 && ratio < 1.0 - cfg.eps_clip);
        double surr = std::min(ratio * s.advantage,
                               std::clamp(ratio, 1.0 - cfg.eps_clip, 1.0 + cfg.eps_clip) *
                                   s.advantage);

        double entropy = 0.0;
        for (double p : probs)
          if (p > 0.0) entropy -= p * std::log(p);

        // d(-objective)/dlogits
        std::vector<double> d_logits(n_actions, 0.0);
        if (!clipped) {
          double coef = ratio * s.advantage;
          for (int a = 0; a < n_actions; ++a) {
            double dlogp = (a == s.action ? 1.0 : 0.0) - probs[a];
            d_logits[a] -= coef * dlogp;
          }
        }
        for (int a = 0; a < n_actions; ++a) {
          if (probs[a] <= 0.0) continue;
          double dH = -probs[a] * (std::log(probs[a]) + entropy);
          d_logits[a] -= c2_eff * dH;
        }
        for (double& d : d_logits) {
          d *= inv_m;
          if (!std::isfinite(d)) throw std::runtime_error("ppo_update: non-finite actor gradient");
        }
        mlp_backward(actor.params, a_cache, d_logits, actor_g);

        double vf_err = 0.0;
        if (critic) {
          ForwardCache c_cache;
          double v = critic->forward(s.state, &c_cache);
          vf_err = v - s.return_target;
          std::vector<double> d_v = {cfg.c1 * 2.0 * vf_err * inv_m};
          if (!std::isfinite(d_v[0]))
            throw std::runtime_error("ppo_update: non-finite critic gradient");
          mlp_backward(critic->params, c_cache, d_v, critic_g);
        }

        if (epoch == 0) {
          stats.loss_po += surr;
          stats.loss_vf += vf_err * vf_err;
          stats.loss_eb += entropy;
          stats.entropy += entropy;
          ++stat_count;
        }
      }

      adam_step(actor.params, actor_g, actor_adam, cfg.lr);
      if (critic) adam_step(critic->params, critic_g, *critic_adam, cfg.lr);
    }
  }

  if (stat_count > 0) {
    stats.loss_po /= static_cast<double>(stat_count);
    stats.loss_vf /= static_cast<double>(stat_count);
    stats.loss_eb /= static_cast<double>(stat_count);
    stats.entropy /= static_cast<double>(stat_count);
  }
  return stats;
}

Plan infer_plan(const Actor& actor, const ToolRegistry& registry,
                const RewardProvider& provider, const Raster& degraded, int t_max) {
  Plan plan;
  RestorationEnv env(registry, provider, t_max);
  State state = env.reset(degraded);
  plan.initial_score = env.initial_score();
  bool stopped = false;
  while (!env.done()) {
    auto [logits, probs] = actor.forward(state);
    ++plan.policy_forwards;
    int action = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    auto step = env.step(action);
    if (action == registry.stop_index()) {
      stopped = true;
      break;
    }
    plan.actions.push_back(action);
    plan.names.push_back(registry.tool(action).name);
    plan.scores.push_back(env.last_score());
    state = std::move(step.state);
  }
  if (!stopped) {
    // the step cap forces a stop; issue the closing query anyway so every plan
    // costs exactly (length + 1) policy forwards
    actor.forward(state);
    ++plan.policy_forwards;
  }
  plan.final_score = env.last_score();
  plan.restored = env.image();
  return plan;
}

namespace {

json params_to_json(const MlpParams& p) {
  return {{"d_in", p.d_in},     {"d_out", p.d_out},   {"w1", p.w1},
          {"b1", p.b1},         {"ln_gain", p.ln_gain}, {"ln_bias", p.ln_bias},
          {"w2", p.w2},         {"b2", p.b2}};
}

MlpParams params_from_json(const json& j) {
  MlpParams p;
  p.d_in = j.at("d_in").get<int>();
  p.d_out = j.at("d_out").get<int>();
  p.w1 = j.at("w1").get<std::vector<double>>();
  p.b1 = j.at("b1").get<std::vector<double>>();
  p.ln_gain = j.at("ln_gain").get<std::vector<double>>();
  p.ln_bias = j.at("ln_bias").get<std::vector<double>>();
  p.w2 = j.at("w2").get<std::vector<double>>();
  p.b2 = j.at("b2").get<std::vector<double>>();
  return p;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json j;
  j["version"] = 1;
  j["registry_fingerprint"] = ck.registry_fingerprint;
  j["registry"] = json::parse(ck.registry_serialized);
  j["config"] = ck.config.to_json();
  j["actor"] = params_to_json(ck.actor.params);
  if (ck.critic) j["critic"] = params_to_json(ck.critic->params);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path, const ToolRegistry& runtime_registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j = json::parse(in);
  Checkpoint ck;
  ck.registry_fingerprint = j.at("registry_fingerprint").get<std::uint64_t>();
  ck.registry_serialized = j.at("registry").dump();
  if (ck.registry_fingerprint != runtime_registry.fingerprint())
    throw CheckpointMismatch(
        "checkpoint registry fingerprint does not match the runtime registry");
  ck.config = PoConfig::from_json(j.at("config"));
  ck.actor.params = params_from_json(j.at("actor"));
  if (j.contains("critic")) ck.critic = Critic{params_from_json(j.at("critic"))};
  return ck;
}

const RewardProvider& OracleProviderFactory::for_row(const ManifestRow& row) {
  if (row.clean != cached_path_) {
    cached_ = oracle_psnr_provider(read_png(row.clean));
    cached_path_ = row.clean;
  }
  return *cached_;
}

namespace {

struct ImageCache {
  std::unordered_map<std::string, Raster> images;
  const Raster& get(const std::string& path) {
    auto it = images.find(path);
    if (it == images.end()) it = images.emplace(path, read_png(path)).first;
    return it->second;
  }
};

double greedy_eval(const Actor& actor, const ToolRegistry& registry,
                   ProviderFactory& providers, const std::vector<ManifestRow>& rows,
                   int limit, int t_max, ImageCache& cache) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  int n = std::min<int>(limit, static_cast<int>(rows.size()));
  for (int i = 0; i < n; ++i) {
    const ManifestRow& row = rows[i];
    Plan p = infer_plan(actor, registry, providers.for_row(row), cache.get(row.degraded), t_max);
    total += p.final_score;
  }
  return total / n;
}

}  // namespace

TrainResult train(const PoConfig& cfg, const std::vector<ManifestRow>& rows,
                  ProviderFactory& providers, const ToolRegistry& registry,
                  const TrainOptions& opts) {
  cfg.validate();
  if (rows.empty()) throw std::invalid_argument("train: empty manifest");

  ImageCache cache;
  Rng rng(cfg.seed);

  // probe one state for the input width
  int d_in = kFeatureDim + registry.n_actions();
  Actor actor{init_params(d_in, registry.n_actions(), cfg.seed)};
  std::optional<Critic> critic;
  if (cfg.variant == PoVariant::Ppo)
    critic = Critic{init_params(d_in, 1, cfg.seed ^ 0x5bd1e995ULL)};

  AdamState actor_adam = AdamState::for_params(actor.params);
  AdamState critic_adam = critic ? AdamState::for_params(critic->params) : AdamState{};

  std::ofstream log;
  if (!opts.log_path.empty()) {
    log.open(opts.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write training log: " + opts.log_path);
  }

  const std::vector<ManifestRow>& eval_rows = opts.eval_rows.empty() ? rows : opts.eval_rows;

  TrainResult result;
  std::size_t row_cursor = 0;
  constexpr int kMaxAborts = 32;

  for (int update = 0; update < cfg.updates; ++update) {
    std::vector<FlatSample> batch;
    double return_sum = 0.0;
    int episodes = 0;
    int aborts = 0;

    auto add_trajectory = [&](const Trajectory& traj, const std::vector<double>& adv,
                              const std::vector<double>& ret) {
      for (std::size_t i = 0; i < traj.transitions.size(); ++i) {
        FlatSample s;
        s.state = traj.transitions[i].state;
        s.action = traj.transitions[i].action;
        s.log_prob_old = traj.transitions[i].log_prob_old;
        s.advantage = adv[i];
        s.return_target = ret[i];
        batch.push_back(std::move(s));
      }
    };

    if (cfg.variant == PoVariant::Ppo) {
      while (episodes < cfg.episodes_per_update) {
        const ManifestRow& row = rows[row_cursor % rows.size()];
        ++row_cursor;
        const RewardProvider& provider = providers.for_row(row);
        RestorationEnv env(registry, provider, cfg.t_max);
        try {
          Trajectory traj =
              collect_trajectory(env, cache.get(row.degraded), actor, &*critic, rng);
          std::vector<double> rewards, values;
          for (const Transition& t : traj.transitions) {
            rewards.push_back(t.reward);
            values.push_back(t.value_old);
          }
          auto [adv, ret] = compute_gae(rewards, values, traj.terminal_value,
                                        cfg.gamma, cfg.lambda);
          add_trajectory(traj, adv, ret);
          return_sum += traj.episode_return();
          ++episodes;
        } catch (const ToolError& e) {
          std::cerr << "episode aborted (tool failure): " << e.what() << "\n";
          ++result.episodes_aborted;
          if (++aborts > kMaxAborts)
            throw std::runtime_error("too many aborted episodes in one update");
        } catch (const ProviderError& e) {
          std::cerr << "episode aborted (provider failure): " << e.what() << "\n";
          ++result.episodes_aborted;
          if (++aborts > kMaxAborts)
            throw std::runtime_error("too many aborted episodes in one update");
        }
      }
    } else {
      int groups = std::max(1, cfg.episodes_per_update / cfg.grpo_group);
      for (int g = 0; g < groups; ++g) {
        const ManifestRow& row = rows[row_cursor % rows.size()];
        ++row_cursor;
        const RewardProvider& provider = providers.for_row(row);
        std::vector<Trajectory> group;
        std::vector<double> returns;
        try {
          for (int i = 0; i < cfg.grpo_group; ++i) {
            RestorationEnv env(registry, provider, cfg.t_max);
            group.push_back(
                collect_trajectory(env, cache.get(row.degraded), actor, nullptr, rng));
            returns.push_back(group.back().episode_return());
          }
        } catch (const std::runtime_error& e) {
          std::cerr << "group aborted: " << e.what() << "\n";
          ++result.episodes_aborted;
          if (++aborts > kMaxAborts)
            throw std::runtime_error("too many aborted episodes in one update");
          continue;
        }
        std::vector<double> adv = grpo_advantages(returns);
        for (std::size_t i = 0; i < group.size(); ++i) {
          std::size_t len = group[i].transitions.size();
          std::vector<double> a(len, adv[i]), r(len, 0.0);
          add_trajectory(group[i], a, r);
          return_sum += returns[i];
          ++episodes;
        }
      }
    }

    if (batch.empty()) continue;
    if (cfg.variant == PoVariant::Ppo) normalize_advantages(batch);

    PoConfig eff = cfg;
    if (cfg.variant == PoVariant::Grpo) eff.c1 = 0.0;
    LossStats stats = ppo_update(batch, actor, actor_adam,
                                 critic ? &*critic : nullptr,
                                 critic ? &critic_adam : nullptr, eff, update, rng);

    double mean_return = episodes ? return_sum / episodes : 0.0;
    double eval_score = greedy_eval(actor, registry, providers, eval_rows,
                                    opts.eval_limit, cfg.t_max, cache);
    result.final_greedy_eval = eval_score;

    if (log.is_open()) {
      json line = {{"update", update},
                   {"mean_return", mean_return},
                   {"entropy", stats.entropy},
                   {"loss_po", stats.loss_po},
                   {"loss_vf", stats.loss_vf},
                   {"loss_eb", stats.loss_eb},
                   {"greedy_eval", eval_score}};
      log << line.dump() << "\n";
      log.flush();
    }
    if (opts.on_update) opts.on_update(update, stats, mean_return, eval_score);

    if (!opts.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        (update + 1) % cfg.checkpoint_every == 0) {
      Checkpoint ck{actor, critic, cfg, registry.fingerprint(), registry.serialize()};
      save_checkpoint(ck, opts.checkpoint_path);
    }
  }

  result.checkpoint =
      Checkpoint{actor, critic, cfg, registry.fingerprint(), registry.serialize()};
  if (!opts.checkpoint_path.empty())
    save_checkpoint(result.checkpoint, opts.checkpoint_path);
  return result;
}

}  // namespace toolseq
