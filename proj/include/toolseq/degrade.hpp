#pragma once

#include <string>
#include <vector>

#include "toolseq/raster.hpp"
#include "toolseq/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace toolseq {

enum class DegradationKind {
  Dark,
  DefocusBlur,
  MotionBlur,
  Rain,
  Noise,
  Haze,
  JpegArtifact,
};

constexpr int kNumDegradationKinds = 7;

std::string to_string(DegradationKind k);
DegradationKind degradation_from_string(const std::string& s);

enum class DarkStrategy { Linear, Gamma, Constant };
enum class NoiseKind { Gaussian, Poisson };

// Deterministic cores: all randomness lives in the *Params structs so every
// drawn value can be recorded in the manifest.
struct DarkParams { DarkStrategy strategy; double amount; };
struct DefocusParams { double radius; };
struct MotionParams { int length; double angle; };
struct NoiseParams { NoiseKind kind; double sigma; double scale; std::uint64_t seed; };
struct RainParams { double density; double amplitude; int length; double angle; std::uint64_t seed; };
struct HazeParams { double airlight; double beta; };
struct JpegParams { int quality; };

DarkParams sample_dark(DarkStrategy strategy, Rng& rng);
DefocusParams sample_defocus(Rng& rng);
MotionParams sample_motion(Rng& rng);
NoiseParams sample_noise(NoiseKind kind, Rng& rng);
RainParams sample_rain(Rng& rng);
HazeParams sample_haze(Rng& rng);
JpegParams sample_jpeg(int quality_or_random, Rng& rng);  // <=0 means random

Raster apply_dark(const Raster& img, const DarkParams& p);
Raster apply_defocus_blur(const Raster& img, const DefocusParams& p);
Raster apply_motion_blur(const Raster& img, const MotionParams& p);
Raster apply_noise(const Raster& img, const NoiseParams& p);
Raster apply_rain(const Raster& img, const RainParams& p);
Raster apply_haze(const Raster& img, const HazeParams& p);
// DCT-quantization round trip; no bitstream. quality in [1,100].
Raster apply_jpeg(const Raster& img, const JpegParams& p);

// Convenience overloads drawing fresh parameters.
Raster apply_dark(const Raster& img, DarkStrategy strategy, Rng& rng);
Raster apply_defocus_blur(const Raster& img, Rng& rng);
Raster apply_motion_blur(const Raster& img, Rng& rng);
Raster apply_noise(const Raster& img, NoiseKind kind, Rng& rng);
Raster apply_rain(const Raster& img, Rng& rng);
Raster apply_haze(const Raster& img, Rng& rng);
Raster apply_jpeg(const Raster& img, int quality_or_random, Rng& rng);

// One of the 15 stacked-degradation cases (Settings I-IV).
struct CaseRecipe {
  int case_id = 0;           // 1..15
  std::string setting;       // "I".."IV"
  std::vector<DegradationKind> sequence;
};

// The fixed table of 15 cases.
const std::vector<CaseRecipe>& all_case_recipes();
const CaseRecipe& case_recipe(int case_id);

// Applies recipe.sequence in order, recording drawn parameters as JSON.
Raster synth_case(const Raster& clean, const CaseRecipe& recipe, Rng& rng,
                  nlohmann::json* params_out = nullptr);

struct ManifestRow {
  std::string clean;
  std::string degraded;
  int case_id;
  std::string setting;
  std::uint64_t seed;
  std::string params_json;
};

// Degrades every PNG in clean_dir n_per_case times per case, writes PNGs under
// out_dir and a JSON-lines manifest; returns the manifest path.
std::string synth_dataset(const std::string& clean_dir,
                          const std::vector<int>& case_ids, int n_per_case,
                          std::uint64_t seed, const std::string& out_dir);

std::vector<ManifestRow> read_manifest(const std::string& path);

}  // namespace toolseq
