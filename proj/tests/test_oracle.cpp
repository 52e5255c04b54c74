#include <doctest.h>

#include <vector>

#include "support.hpp"
#include "toolseq/degrade.hpp"
#include "toolseq/oracle.hpp"

using namespace toolseq;
using testsupport::make_natural_image;
using testsupport::natural_corpus;

namespace {

struct ConstantProvider final : RewardProvider {
  double score(const Raster&) const override { return 1.0; }
  std::string name() const override { return "constant"; }
};

// Independent re-evaluation of every sequence of length 0..l_max, no prefix
// sharing: the reference the DFS must reproduce.
OracleResult naive_best(const Raster& degraded, const ToolRegistry& registry,
                        int l_max, const RewardProvider& scorer) {
  OracleResult best;
  best.sequence.clear();
  best.final_score = scorer.score(degraded);
  best.restored = degraded;
  std::vector<int> seq;
  auto visit = [&](auto&& self, int depth) -> void {
    if (depth > 0) {
      Raster img = degraded;
      for (int a : seq) img = registry.apply(a, img);
      double s = scorer.score(img);
      if (s > best.final_score ||
          (s == best.final_score && seq < best.sequence)) {
        best.sequence = seq;
        best.final_score = s;
        best.restored = std::move(img);
      }
    }
    if (depth == l_max) return;
    for (int a = 0; a < registry.stop_index(); ++a) {
      seq.push_back(a);
      self(self, depth + 1);
      seq.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

}  // namespace

TEST_CASE("l_max = 0 returns the input untouched") {
  Raster img = make_natural_image(32, 32, 61);
  ToolRegistry reg = ToolRegistry::standard();
  auto provider = proxy_nr_provider();
  OracleResult r = best_sequence(img, reg, 0, *provider);
  CHECK(r.sequence.empty());
  CHECK(r.final_score == doctest::Approx(provider->score(img)));
  CHECK(r.restored.data == img.data);
}

TEST_CASE("constant scorer ties break to the empty sequence") {
  Raster img = make_natural_image(32, 32, 62);
  ToolRegistry reg = ToolRegistry::standard();
  ConstantProvider c;
  OracleResult r = best_sequence(img, reg, 2, c);
  CHECK(r.sequence.empty());
}

TEST_CASE("DFS with prefix sharing matches naive enumeration") {
  ToolRegistry reg = ToolRegistry::standard();
  for (std::uint64_t seed : {63, 64}) {
    Raster clean = make_natural_image(32, 32, seed);
    Rng rng(seed);
    Raster degraded = apply_dark(clean, DarkStrategy::Linear, rng);
    auto provider = oracle_psnr_provider(clean);
    OracleResult fast = best_sequence(degraded, reg, 2, *provider);
    OracleResult slow = naive_best(degraded, reg, 2, *provider);
    CHECK(fast.sequence == slow.sequence);
    CHECK(fast.final_score == doctest::Approx(slow.final_score).epsilon(1e-12));
  }
}

TEST_CASE("gamma-darkened image: oracle picks brighten-gamma") {
  // darken with gamma 1.5, exactly inverted by V^(2/3)
  Raster clean = make_natural_image(32, 32, 65);
  Raster dark = apply_dark(clean, DarkParams{DarkStrategy::Gamma, 1.5});
  auto provider = oracle_psnr_provider(clean);
  ToolRegistry reg = ToolRegistry::standard();
  OracleResult r = best_sequence(dark, reg, 1, *provider);
  REQUIRE(r.sequence.size() == 1);
  CHECK(reg.tool(r.sequence[0]).name == "brighten-gamma");
  CHECK(r.final_score > 40.0);
}

TEST_CASE("oracle dominance over arbitrary plans of covered length") {
  ToolRegistry reg = ToolRegistry::standard();
  auto provider = proxy_nr_provider();
  Rng rng(66);
  Raster clean = make_natural_image(32, 32, 66);
  Raster degraded = apply_noise(clean, NoiseKind::Gaussian, rng);
  OracleResult oracle = best_sequence(degraded, reg, 2, *provider);
  for (std::vector<int> plan :
       {std::vector<int>{}, {0}, {7}, {9, 9}, {5, 3}, {2, 8}}) {
    Raster img = degraded;
    for (int a : plan) img = reg.apply(a, img);
    CHECK(provider->score(img) <= oracle.final_score + 1e-12);
  }
}

TEST_CASE("budget guard rejects before any work") {
  Raster img = make_natural_image(32, 32, 67);
  ToolRegistry reg = ToolRegistry::standard();
  auto provider = proxy_nr_provider();
  CHECK_THROWS_AS(best_sequence(img, reg, 3, *provider, 100), BudgetError);
  // 10 + 100 applications fit a budget of 110
  CHECK_NOTHROW(best_sequence(img, reg, 2, *provider, 110));
}

TEST_CASE("compare_plan report") {
  OracleResult oracle;
  oracle.sequence = {0, 3};
  oracle.final_score = 4.0;

  PlanComparison same = compare_plan({0, 3}, 4.0, oracle);
  CHECK(same.exact_match);
  CHECK(same.gap == doctest::Approx(0.0));

  PlanComparison worse = compare_plan({5}, 3.25, oracle);
  CHECK_FALSE(worse.exact_match);
  CHECK(worse.gap == doctest::Approx(0.75));
  CHECK(worse.policy_score == doctest::Approx(3.25));
  CHECK(worse.oracle_score == doctest::Approx(4.0));
}
