#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toolseq/raster.hpp"
#include "toolseq/reward.hpp"
#include "toolseq/toolset.hpp"

namespace toolseq {

struct OracleResult {
  std::vector<int> sequence;  // tool indices, STOP excluded
  double final_score = 0.0;
  Raster restored;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exhaustive search over all tool sequences of length 0..l_max (STOP excluded),
// depth-first with shared prefixes. Ties broken toward the lexicographically
// smallest sequence. Throws BudgetError before any work if the number of tool
// applications would exceed `budget`.
OracleResult best_sequence(const Raster& degraded, const ToolRegistry& registry,
                           int l_max, const RewardProvider& scorer,
                           std::uint64_t budget = 1000000);

struct PlanComparison {
  double policy_score = 0.0;
  double oracle_score = 0.0;
  double gap = 0.0;        // oracle - policy
  bool exact_match = false;  // same action sequence
};

PlanComparison compare_plan(const std::vector<int>& policy_plan,
                            double policy_score, const OracleResult& oracle);

}  // namespace toolseq
