#include <doctest.h>

#include <cmath>
#include <random>

#include "toolseq/nets.hpp"

using namespace toolseq;

namespace {

std::vector<double> random_state(int d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(d);
  for (double& v : s) v = u(gen);
  return s;
}

// finite-difference check of d(loss)/d(param) where loss = sum(w_out * output)
double max_rel_error(MlpParams& p, const std::vector<double>& x,
                     const std::vector<double>& w_out) {
  ForwardCache cache;
  mlp_forward(p, x, &cache);
  MlpGrads g = zero_grads(p);
  mlp_backward(p, cache, w_out, g);

  auto loss = [&]() {
    std::vector<double> out = mlp_forward(p, x);
    double l = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) l += w_out[i] * out[i];
    return l;
  };

  auto pb = p.blocks();
  auto gb = g.blocks();
  auto sizes = p.block_sizes();
  const double h = 1e-4;
  double worst = 0.0;
  std::mt19937_64 pick(99);
  for (std::size_t blk = 0; blk < pb.size(); ++blk) {
    // sample a handful of parameters per block
    for (int k = 0; k < 25 && k < static_cast<int>(sizes[blk]); ++k) {
      std::size_t i = pick() % sizes[blk];
      double orig = pb[blk][i];
      pb[blk][i] = orig + h;
      double lp = loss();
      pb[blk][i] = orig - h;
      double lm = loss();
      pb[blk][i] = orig;
      double fd = (lp - lm) / (2 * h);
      double an = gb[blk][i];
      double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("init_params determinism and bounds") {
  MlpParams a = init_params(43, 11, 7);
  MlpParams b = init_params(43, 11, 7);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  for (double v : a.ln_gain) CHECK(v == 1.0);
  for (double v : a.b1) CHECK(v == 0.0);
  for (double v : a.b2) CHECK(v == 0.0);
  double bound = std::sqrt(6.0 / 43.0);
  for (double v : a.w1) CHECK(std::fabs(v) <= bound);
  CHECK_THROWS(init_params(0, 1, 1));
}

TEST_CASE("softmax properties") {
  std::vector<double> equal(11, 3.7);
  std::vector<double> p = softmax(equal);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 11.0).epsilon(1e-12));

  std::vector<double> one_hot(11, 0.0);
  one_hot[0] = 1.0;
  p = softmax(one_hot);
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 10.0)).epsilon(1e-12));

  std::vector<double> shifted = one_hot;
  for (double& v : shifted) v += 123.0;
  std::vector<double> p2 = softmax(shifted);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(p[i] == doctest::Approx(p2[i]).epsilon(1e-12));

  double sum = 0.0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("softmax survives large logits") {
  std::vector<double> big = {50.0, -50.0, 0.0};
  std::vector<double> p = softmax(big);
  for (double v : p) CHECK(std::isfinite(v));
}

TEST_CASE("forward basics") {
  MlpParams p = init_params(43, 11, 1);
  std::vector<double> x = random_state(43, 2);
  Actor actor{p};
  auto [logits, probs] = actor.forward(x);
  REQUIRE(logits.size() == 11);
  double sum = 0.0;
  for (double v : probs) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  auto [l2, p2] = actor.forward(x);
  CHECK(logits == l2);  // bit-identical

  std::vector<double> wrong(42, 0.0);
  CHECK_THROWS(mlp_forward(p, wrong));

  // zero weights -> zero output
  MlpParams z = init_params(8, 1, 1);
  for (auto* blk : z.blocks()) {
  }
  std::fill(z.w1.begin(), z.w1.end(), 0.0);
  std::fill(z.w2.begin(), z.w2.end(), 0.0);
  Critic critic{z};
  CHECK(critic.forward(random_state(8, 3)) == doctest::Approx(0.0));
}

TEST_CASE("gradients match finite differences at three seeds") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    MlpParams actor = init_params(43, 11, seed);
    std::vector<double> w_out(11);
    std::mt19937_64 gen(seed + 100);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : w_out) v = u(gen);
    CHECK(max_rel_error(actor, random_state(43, seed), w_out) < 1e-3);

    MlpParams critic = init_params(43, 1, seed);
    CHECK(max_rel_error(critic, random_state(43, seed + 1), {1.0}) < 1e-3);
  }
}

TEST_CASE("constant loss has zero gradient") {
  MlpParams p = init_params(10, 3, 5);
  ForwardCache cache;
  mlp_forward(p, random_state(10, 6), &cache);
  MlpGrads g = zero_grads(p);
  mlp_backward(p, cache, {0.0, 0.0, 0.0}, g);
  for (auto* blk : g.blocks()) (void)blk;
  for (double v : g.w1) CHECK(v == 0.0);
  for (double v : g.w2) CHECK(v == 0.0);
  for (double v : g.ln_gain) CHECK(v == 0.0);
}

TEST_CASE("layer norm gradient is mean-free") {
  // the LN Jacobian projects out the constant direction: summing the
  // pre-activation gradient over hidden units gives zero
  MlpParams p = init_params(12, 4, 9);
  std::vector<double> x = random_state(12, 10);
  ForwardCache cache;
  mlp_forward(p, x, &cache);
  MlpGrads g = zero_grads(p);
  mlp_backward(p, cache, {0.3, -0.7, 0.2, 0.9}, g);
  // b1 receives exactly d(pre_ln); its sum must vanish
  double sum = 0.0;
  for (double v : g.b1) sum += v;
  CHECK(sum == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("adam zero gradient leaves params unchanged") {
  MlpParams p = init_params(6, 2, 4);
  MlpParams before = p;
  AdamState st = AdamState::for_params(p);
  adam_step(p, zero_grads(p), st, 0.01);
  CHECK(st.step == 1);
  CHECK(p.w1 == before.w1);
  CHECK(p.w2 == before.w2);
}

TEST_CASE("adam first step approximates signed step") {
  MlpParams p = init_params(4, 1, 4);
  MlpGrads g = zero_grads(p);
  g.w1[0] = 3.5;
  g.w1[1] = -0.002;
  double w0 = p.w1[0], w1 = p.w1[1];
  AdamState st = AdamState::for_params(p);
  adam_step(p, g, st, 0.01);
  CHECK(p.w1[0] == doctest::Approx(w0 - 0.01).epsilon(1e-4));
  CHECK(p.w1[1] == doctest::Approx(w1 + 0.01).epsilon(1e-4));
}

TEST_CASE("adam rejects non-finite gradients") {
  MlpParams p = init_params(4, 1, 4);
  MlpGrads g = zero_grads(p);
  g.w1[0] = std::nan("");
  AdamState st = AdamState::for_params(p);
  CHECK_THROWS(adam_step(p, g, st, 0.01));
}

TEST_CASE("adam minimizes a quadratic via the block interface") {
  // f(w) = w^2 on a single weight
  MlpParams p = init_params(1, 1, 1);
  p.w1[0] = 1.0;
  AdamState st;
  st.m.assign(p.param_count(), 0.0);
  st.v.assign(p.param_count(), 0.0);
  for (int i = 0; i < 500; ++i) {
    MlpGrads g = zero_grads(p);
    g.w1[0] = 2.0 * p.w1[0];
    adam_step(p, g, st, 0.01);
  }
  CHECK(std::fabs(p.w1[0]) < 0.1);
}
