#pragma once

#include <cstdint>
#include <vector>

namespace toolseq {

// Two-layer MLP: Linear -> LayerNorm -> ReLU -> Linear. Hidden width 128.
constexpr int kHiddenDim = 128;

struct MlpParams {
  int d_in = 0;
  int d_out = 0;
  std::vector<double> w1;       // d_in x hidden, row-major [in][hidden]
  std::vector<double> b1;       // hidden
  std::vector<double> ln_gain;  // hidden
  std::vector<double> ln_bias;  // hidden
  std::vector<double> w2;       // hidden x d_out, row-major [hidden][out]
  std::vector<double> b2;       // d_out

  std::size_t param_count() const;
  // flat views in a fixed order (w1,b1,ln_gain,ln_bias,w2,b2)
  std::vector<double*> blocks();
  std::vector<const double*> blocks() const;
  std::vector<std::size_t> block_sizes() const;
};

// Same shapes as MlpParams, used for gradients and Adam moments.
using MlpGrads = MlpParams;

struct ForwardCache {
  std::vector<double> input;
  std::vector<double> pre_ln;     // hidden, after Linear1
  std::vector<double> normed;     // hidden, (x-mu)/sqrt(var+eps)
  std::vector<double> activated;  // hidden, after gain/bias + ReLU
  double ln_mean = 0.0;
  double ln_inv_std = 0.0;
  std::vector<double> output;     // d_out
};

// He-uniform weights, zero biases, unit LayerNorm gain; seed-deterministic.
MlpParams init_params(int d_in, int d_out, std::uint64_t seed);
MlpGrads zero_grads(const MlpParams& p);

// Forward pass; cache optional (needed for backward).
std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& x,
                                ForwardCache* cache = nullptr);

// Exact reverse-mode gradients given d(loss)/d(output); accumulates into g.
void mlp_backward(const MlpParams& p, const ForwardCache& cache,
                  const std::vector<double>& d_out, MlpGrads& g);

// Softmax with max-subtraction; returns probabilities.
std::vector<double> softmax(const std::vector<double>& logits);

struct Actor {
  MlpParams params;
  // returns (logits, probs)
  std::pair<std::vector<double>, std::vector<double>> forward(
      const std::vector<double>& state, ForwardCache* cache = nullptr) const;
};

struct Critic {
  MlpParams params;
  double forward(const std::vector<double>& state, ForwardCache* cache = nullptr) const;
};

struct AdamState {
  std::vector<double> m;  // first moments, flat
  std::vector<double> v;  // second moments, flat
  std::int64_t step = 0;

  static AdamState for_params(const MlpParams& p);
};

// Standard adaptive-moment update, beta1=0.9 beta2=0.999 eps=1e-8,
// bias-corrected. Throws on non-finite gradients.
void adam_step(MlpParams& p, const MlpGrads& g, AdamState& st, double lr);

}  // namespace toolseq
