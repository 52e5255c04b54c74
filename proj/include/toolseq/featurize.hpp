#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "toolseq/raster.hpp"

namespace toolseq {

// Fixed-width degradation-sensitive descriptor. Every slot lies in [0,1];
// unbounded raw statistics are squashed with x/(x+kappa).
constexpr int kFeatureDim = 32;

enum FeatureSlot : int {
  kSlotMeanLuma = 0,
  kSlotStdLuma = 1,
  kSlotHist0 = 2,  // 8 bins: slots 2..9
  kSlotMeanV = 10,
  kSlotMeanS = 11,
  kSlotGradientMean = 12,
  kSlotSharpness = 13,       // laplacian variance
  kSlotNoiseEstimate = 14,
  kSlotDarkChannelMean = 15,
  kSlotBlockiness = 16,
  kSlotDirectionalEnergy = 17,
  kSlotHighFreqEnergy = 18,
  // 19..31 reserved, always zero
};

using FeatureVector = std::array<double, kFeatureDim>;

// Which tools have been invoked so far this episode; one bit per action.
struct ActionRecord {
  std::vector<double> bits;  // 0.0 or 1.0, length n_actions

  explicit ActionRecord(int n_actions) : bits(n_actions, 0.0) {}
  void mark(int action);  // idempotent; throws on out-of-range
  int popcount() const;
};

using State = std::vector<double>;

// Deterministic; requires min(width,height) >= 32.
FeatureVector extract_features(const Raster& img);

ActionRecord update_action_record(ActionRecord rec, int chosen);

// Concatenation, features first. Width = kFeatureDim + n_actions.
State assemble_state(const FeatureVector& f, const ActionRecord& rec);

// Dark channel: per-pixel min over channels and a patch neighborhood.
std::vector<double> dark_channel(const Raster& img, int patch);

// Raw (unsquashed) statistics, shared with the proxy scorer tests.
double blockiness_raw(const Raster& img);
double noise_estimate_raw(const Raster& img);
double directional_ratio_raw(const Raster& img);  // gx energy / total, 0.5 = isotropic

}  // namespace toolseq
