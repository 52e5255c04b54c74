#include "toolseq/oracle.hpp"

#include <algorithm>

namespace toolseq {

namespace {

// lexicographic: shorter prefix precedes its extensions
bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Search {
  const ToolRegistry& registry;
  const RewardProvider& scorer;
  int l_max;
  OracleResult best;
  std::vector<int> current;

  void consider(const Raster& img) {
    double s = scorer.score(img);
    if (s > best.final_score ||
        (s == best.final_score && lex_less(current, best.sequence))) {
      best.final_score = s;
      best.sequence = current;
      best.restored = img;
    }
  }

  void dfs(const Raster& img, int depth) {
    if (depth >= l_max) return;
    int n_tools = registry.n_actions() - 1;  // STOP excluded
    for (int t = 0; t < n_tools; ++t) {
      current.push_back(t);
      Raster next = registry.apply(t, img);
      consider(next);
      dfs(next, depth + 1);
      current.pop_back();
    }
  }
};

}  // namespace

OracleResult best_sequence(const Raster& degraded, const ToolRegistry& registry,
                           int l_max, const RewardProvider& scorer,
                           std::uint64_t budget) {
  if (l_max < 0) throw std::invalid_argument("l_max must be >= 0");
  std::uint64_t n = static_cast<std::uint64_t>(registry.n_actions() - 1);
  std::uint64_t applications = 0, level = 1;
  for (int d = 1; d <= l_max; ++d) {
    level *= n;  // sequences of length d == tool applications at depth d (prefix reuse)
    applications += level;
    if (applications > budget)
      throw BudgetError("oracle search would need " + std::to_string(applications) +
                        " tool applications, budget is " + std::to_string(budget));
  }

  Search s{registry, scorer, l_max, {}, {}};
  s.best.final_score = scorer.score(degraded);
  s.best.restored = degraded;
  s.dfs(degraded, 0);
  return s.best;
}

PlanComparison compare_plan(const std::vector<int>& policy_plan,
                            double policy_score, const OracleResult& oracle) {
  PlanComparison c;
  c.policy_score = policy_score;
  c.oracle_score = oracle.final_score;
  c.gap = oracle.final_score - policy_score;
  c.exact_match = policy_plan == oracle.sequence;
  return c;
}

}  // namespace toolseq
