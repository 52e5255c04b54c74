#include "toolseq/nets.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace toolseq {

namespace {
constexpr double kLnEps = 1e-5;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (std::size_t s : block_sizes()) n += s;
  return n;
}

std::vector<double*> MlpParams::blocks() {
  return {w1.data(), b1.data(), ln_gain.data(), ln_bias.data(), w2.data(), b2.data()};
}

std::vector<const double*> MlpParams::blocks() const {
  return {w1.data(), b1.data(), ln_gain.data(), ln_bias.data(), w2.data(), b2.data()};
}

std::vector<std::size_t> MlpParams::block_sizes() const {
  return {w1.size(), b1.size(), ln_gain.size(), ln_bias.size(), w2.size(), b2.size()};
}

MlpParams init_params(int d_in, int d_out, std::uint64_t seed) {
  if (d_in <= 0 || d_out <= 0) throw std::invalid_argument("init_params: dims must be positive");
  MlpParams p;
  p.d_in = d_in;
  p.d_out = d_out;
  std::mt19937_64 gen(seed);
  auto he_uniform = [&](std::vector<double>& w, int fan_in, std::size_t n) {
    double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> d(-bound, bound);
    w.resize(n);
    for (double& x : w) x = d(gen);
  };
  he_uniform(p.w1, d_in, static_cast<std::size_t>(d_in) * kHiddenDim);
  p.b1.assign(kHiddenDim, 0.0);
  p.ln_gain.assign(kHiddenDim, 1.0);
  p.ln_bias.assign(kHiddenDim, 0.0);
  he_uniform(p.w2, kHiddenDim, static_cast<std::size_t>(kHiddenDim) * d_out);
  p.b2.assign(d_out, 0.0);
  return p;
}

MlpGrads zero_grads(const MlpParams& p) {
  MlpGrads g;
  g.d_in = p.d_in;
  g.d_out = p.d_out;
  g.w1.assign(p.w1.size(), 0.0);
  g.b1.assign(p.b1.size(), 0.0);
  g.ln_gain.assign(p.ln_gain.size(), 0.0);
  g.ln_bias.assign(p.ln_bias.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2.assign(p.b2.size(), 0.0);
  return g;
}

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& x,
                                ForwardCache* cache) {
  if (static_cast<int>(x.size()) != p.d_in)
    throw std::invalid_argument("mlp_forward: input width mismatch");
  const int H = kHiddenDim;
  std::vector<double> pre(H, 0.0);
  for (int i = 0; i < p.d_in; ++i) {
    double xi = x[i];
    const double* row = &p.w1[static_cast<std::size_t>(i) * H];
    for (int h = 0; h < H; ++h) pre[h] += xi * row[h];
  }
  for (int h = 0; h < H; ++h) pre[h] += p.b1[h];

  double mean = 0.0;
  for (double v : pre) mean += v;
  mean /= H;
  double var = 0.0;
  for (double v : pre) var += (v - mean) * (v - mean);
  var /= H;
  double inv_std = 1.0 / std::sqrt(var + kLnEps);

  std::vector<double> normed(H), act(H);
  for (int h = 0; h < H; ++h) {
    normed[h] = (pre[h] - mean) * inv_std;
    act[h] = std::max(normed[h] * p.ln_gain[h] + p.ln_bias[h], 0.0);
  }

  std::vector<double> out(p.d_out, 0.0);
  for (int h = 0; h < H; ++h) {
    double ah = act[h];
    if (ah == 0.0) continue;
    const double* row = &p.w2[static_cast<std::size_t>(h) * p.d_out];
    for (int o = 0; o < p.d_out; ++o) out[o] += ah * row[o];
  }
  for (int o = 0; o < p.d_out; ++o) out[o] += p.b2[o];

  if (cache) {
    cache->input = x;
    cache->pre_ln = std::move(pre);
    cache->normed = std::move(normed);
    cache->activated = std::move(act);
    cache->ln_mean = mean;
    cache->ln_inv_std = inv_std;
    cache->output = out;
  }
  return out;
}

void mlp_backward(const MlpParams& p, const ForwardCache& cache,
                  const std::vector<double>& d_out, MlpGrads& g) {
  if (static_cast<int>(d_out.size()) != p.d_out)
    throw std::invalid_argument("mlp_backward: gradient width mismatch");
  const int H = kHiddenDim;

  // second linear
  std::vector<double> d_act(H, 0.0);
  for (int h = 0; h < H; ++h) {
    double ah = cache.activated[h];
    const double* wrow = &p.w2[static_cast<std::size_t>(h) * p.d_out];
    double* grow = &g.w2[static_cast<std::size_t>(h) * p.d_out];
    double acc = 0.0;
    for (int o = 0; o < p.d_out; ++o) {
      grow[o] += ah * d_out[o];
      acc += wrow[o] * d_out[o];
    }
    d_act[h] = acc;
  }
  for (int o = 0; o < p.d_out; ++o) g.b2[o] += d_out[o];

  // ReLU and LayerNorm affine
  std::vector<double> d_normed(H);
  for (int h = 0; h < H; ++h) {
    double relu_gate = cache.activated[h] > 0.0 ? 1.0 : 0.0;
    double d_affine = d_act[h] * relu_gate;
    g.ln_gain[h] += d_affine * cache.normed[h];
    g.ln_bias[h] += d_affine;
    d_normed[h] = d_affine * p.ln_gain[h];
  }

  // LayerNorm Jacobian: dx = inv_std * (dn - mean(dn) - normed * mean(dn*normed))
  double mean_dn = 0.0, mean_dn_n = 0.0;
  for (int h = 0; h < H; ++h) {
    mean_dn += d_normed[h];
    mean_dn_n += d_normed[h] * cache.normed[h];
  }
  mean_dn /= H;
  mean_dn_n /= H;
  std::vector<double> d_pre(H);
  for (int h = 0; h < H; ++h)
    d_pre[h] = cache.ln_inv_std *
               (d_normed[h] - mean_dn - cache.normed[h] * mean_dn_n);

  // first linear
  for (int i = 0; i < p.d_in; ++i) {
    double xi = cache.input[i];
    double* grow = &g.w1[static_cast<std::size_t>(i) * H];
    for (int h = 0; h < H; ++h) grow[h] += xi * d_pre[h];
  }
  for (int h = 0; h < H; ++h) g.b1[h] += d_pre[h];
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::pair<std::vector<double>, std::vector<double>> Actor::forward(
    const std::vector<double>& state, ForwardCache* cache) const {
  std::vector<double> logits = mlp_forward(params, state, cache);
  return {logits, softmax(logits)};
}

double Critic::forward(const std::vector<double>& state, ForwardCache* cache) const {
  return mlp_forward(params, state, cache)[0];
}

AdamState AdamState::for_params(const MlpParams& p) {
  AdamState st;
  st.m.assign(p.param_count(), 0.0);
  st.v.assign(p.param_count(), 0.0);
  return st;
}

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& st, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  st.step += 1;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  auto pb = p.blocks();
  auto gb = g.blocks();
  auto sizes = p.block_sizes();
  std::size_t flat = 0;
  for (std::size_t blk = 0; blk < pb.size(); ++blk) {
    double* pv = pb[blk];
    const double* gv = gb[blk];
    for (std::size_t i = 0; i < sizes[blk]; ++i, ++flat) {
      double grad = gv[i];
      if (!std::isfinite(grad)) throw std::runtime_error("adam_step: non-finite gradient");
      st.m[flat] = b1 * st.m[flat] + (1.0 - b1) * grad;
      st.v[flat] = b2 * st.v[flat] + (1.0 - b2) * grad * grad;
      double mhat = st.m[flat] / bc1;
      double vhat = st.v[flat] / bc2;
      pv[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace toolseq
