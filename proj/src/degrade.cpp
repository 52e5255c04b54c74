#include "toolseq/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace toolseq {

std::string to_string(DegradationKind k) {
  switch (k) {
    case DegradationKind::Dark: return "dark";
    case DegradationKind::DefocusBlur: return "defocus_blur";
    case DegradationKind::MotionBlur: return "motion_blur";
    case DegradationKind::Rain: return "rain";
    case DegradationKind::Noise: return "noise";
    case DegradationKind::Haze: return "haze";
    case DegradationKind::JpegArtifact: return "jpeg";
  }
  throw std::logic_error("bad DegradationKind");
}

DegradationKind degradation_from_string(const std::string& s) {
  for (int i = 0; i < kNumDegradationKinds; ++i) {
    auto k = static_cast<DegradationKind>(i);
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown degradation kind: " + s);
}

DarkParams sample_dark(DarkStrategy strategy, Rng& rng) {
  switch (strategy) {
    case DarkStrategy::Linear: return {strategy, rng.uniform(0.3, 0.6)};
    case DarkStrategy::Gamma: return {strategy, rng.uniform(1.8, 3.0)};
    case DarkStrategy::Constant: return {strategy, rng.uniform(0.25, 0.5)};
  }
  throw std::logic_error("bad DarkStrategy");
}

DefocusParams sample_defocus(Rng& rng) {
  return {static_cast<double>(rng.uniform_int(2, 6))};
}

MotionParams sample_motion(Rng& rng) {
  return {rng.uniform_int(5, 15), rng.uniform(0.0, M_PI)};
}

NoiseParams sample_noise(NoiseKind kind, Rng& rng) {
  NoiseParams p{kind, 0.0, 0.0, rng.next_u64()};
  if (kind == NoiseKind::Gaussian)
    p.sigma = rng.uniform(0.02, 0.1);
  else
    p.scale = rng.uniform(50.0, 200.0);
  return p;
}

RainParams sample_rain(Rng& rng) {
  return {rng.uniform(0.01, 0.05), rng.uniform(0.4, 0.8),
          rng.uniform_int(7, 15), rng.uniform(M_PI / 3.0, 2.0 * M_PI / 3.0),
          rng.next_u64()};
}

HazeParams sample_haze(Rng& rng) {
  return {rng.uniform(0.7, 1.0), rng.uniform(1.0, 2.5)};
}

JpegParams sample_jpeg(int quality_or_random, Rng& rng) {
  if (quality_or_random > 0) return {quality_or_random};
  const int choices[3] = {5, 40, 90};
  return {choices[rng.uniform_int(0, 2)]};
}

Raster apply_dark(const Raster& img, const DarkParams& p) {
  Raster hsv = rgb_to_hsv(img);
  for (std::size_t i = 0; i < hsv.pixel_count(); ++i) {
    double& v = hsv.data[i * 3 + 2];
    switch (p.strategy) {
      case DarkStrategy::Linear: v *= p.amount; break;
      case DarkStrategy::Gamma: v = std::pow(v, p.amount); break;
      case DarkStrategy::Constant: v = std::max(v - p.amount, 0.0); break;
    }
  }
  return hsv_to_rgb(hsv);
}

Raster apply_defocus_blur(const Raster& img, const DefocusParams& p) {
  return convolve2d(img, Kernel::disk(p.radius));
}

Raster apply_motion_blur(const Raster& img, const MotionParams& p) {
  return convolve2d(img, Kernel::line(p.length, p.angle));
}

Raster apply_noise(const Raster& img, const NoiseParams& p) {
  Raster out = img;
  Rng rng(p.seed);
  if (p.kind == NoiseKind::Gaussian) {
    if (p.sigma <= 0.0) return out;
    for (double& v : out.data) v = std::clamp(v + rng.gaussian(0.0, p.sigma), 0.0, 1.0);
  } else {
    for (double& v : out.data)
      v = std::clamp(rng.poisson(v * p.scale) / p.scale, 0.0, 1.0);
  }
  return out;
}

Raster apply_rain(const Raster& img, const RainParams& p) {
  if (p.density <= 0.0) return img;
  // sparse bright layer, streaked with a line kernel, added on top
  Raster layer(img.width, img.height, 0.0);
  Rng rng(p.seed);
  for (std::size_t i = 0; i < layer.pixel_count(); ++i) {
    if (rng.uniform(0.0, 1.0) < p.density) {
      double a = p.amplitude * rng.uniform(0.5, 1.0);
      layer.data[i * 3] = layer.data[i * 3 + 1] = layer.data[i * 3 + 2] = a;
    }
  }
  // streaks keep their integrated brightness: scale by kernel length
  Kernel line = Kernel::line(p.length, p.angle);
  Raster streaks = convolve2d(layer, line);
  Raster out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = std::clamp(out.data[i] + streaks.data[i] * std::sqrt(static_cast<double>(p.length)), 0.0, 1.0);
  return out;
}

Raster apply_haze(const Raster& img, const HazeParams& p) {
  Raster out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    // vertical depth ramp: 1.0 at the top row, 0.2 at the bottom
    double depth = img.height > 1
                       ? 1.0 - 0.8 * (static_cast<double>(y) / (img.height - 1))
                       : 1.0;
    double t = std::exp(-p.beta * depth);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = std::clamp(
            img.at(x, y, c) * t + p.airlight * (1.0 - t), 0.0, 1.0);
  }
  return out;
}

namespace {

// 8x8 DCT-II basis, orthonormal
struct DctBasis {
  double m[8][8];
  DctBasis() {
    for (int k = 0; k < 8; ++k)
      for (int n = 0; n < 8; ++n)
        m[k][n] = (k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0)) *
                  std::cos(M_PI * (n + 0.5) * k / 8.0);
  }
};

const DctBasis& dct_basis() {
  static const DctBasis b;
  return b;
}

// Annex-K luminance quantization table
constexpr int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,
    12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,
    14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,
    24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99};

void dct_quant_roundtrip_plane(std::vector<double>& plane, int w, int h,
                               const double qstep[64]) {
  const DctBasis& B = dct_basis();
  int bw = (w + 7) / 8, bh = (h + 7) / 8;
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      double block[8][8], tmp[8][8], coef[8][8];
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          int sx = std::min(bx * 8 + x, w - 1), sy = std::min(by * 8 + y, h - 1);
          block[y][x] = plane[static_cast<std::size_t>(sy) * w + sx];
        }
      // rows then columns
      for (int y = 0; y < 8; ++y)
        for (int k = 0; k < 8; ++k) {
          double s = 0;
          for (int n = 0; n < 8; ++n) s += B.m[k][n] * block[y][n];
          tmp[y][k] = s;
        }
      for (int x = 0; x < 8; ++x)
        for (int k = 0; k < 8; ++k) {
          double s = 0;
          for (int n = 0; n < 8; ++n) s += B.m[k][n] * tmp[n][x];
          coef[k][x] = s;
        }
      // AC only; an exact DC keeps flat regions flat
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          if (x == 0 && y == 0) continue;
          double q = qstep[y * 8 + x];
          coef[y][x] = std::round(coef[y][x] / q) * q;
        }
      // inverse
      for (int x = 0; x < 8; ++x)
        for (int n = 0; n < 8; ++n) {
          double s = 0;
          for (int k = 0; k < 8; ++k) s += B.m[k][n] * coef[k][x];
          tmp[n][x] = s;
        }
      for (int y = 0; y < 8; ++y)
        for (int n = 0; n < 8; ++n) {
          double s = 0;
          for (int k = 0; k < 8; ++k) s += B.m[k][n] * tmp[y][k];
          block[y][n] = s;
        }
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          int sx = bx * 8 + x, sy = by * 8 + y;
          if (sx < w && sy < h)
            plane[static_cast<std::size_t>(sy) * w + sx] = block[y][x];
        }
    }
  }
}

}  // namespace

Raster apply_jpeg(const Raster& img, const JpegParams& p) {
  if (p.quality < 1 || p.quality > 100)
    throw std::invalid_argument("jpeg quality must be in [1,100]");
  double scale = p.quality < 50 ? 5000.0 / p.quality : 200.0 - 2.0 * p.quality;
  double qstep[64];
  for (int i = 0; i < 64; ++i) {
    double q = std::floor((kLumaQuant[i] * scale + 50.0) / 100.0);
    q = std::clamp(q, 1.0, 255.0);
    // table is for 8-bit data; rescale to unit range, and the orthonormal DCT
    // differs from the JPEG convention by a factor of 8 per 2-D transform
    qstep[i] = q / 255.0;
  }
  // YCbCr (full range)
  std::size_t n = img.pixel_count();
  std::vector<double> Y(n), Cb(n), Cr(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = img.data[i * 3], g = img.data[i * 3 + 1], b = img.data[i * 3 + 2];
    Y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    Cb[i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
    Cr[i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  dct_quant_roundtrip_plane(Y, img.width, img.height, qstep);
  dct_quant_roundtrip_plane(Cb, img.width, img.height, qstep);
  dct_quant_roundtrip_plane(Cr, img.width, img.height, qstep);
  Raster out(img.width, img.height);
  for (std::size_t i = 0; i < n; ++i) {
    double y = Y[i], cb = Cb[i], cr = Cr[i];
    out.data[i * 3] = std::clamp(y + 1.402 * cr, 0.0, 1.0);
    out.data[i * 3 + 1] = std::clamp(y - 0.344136 * cb - 0.714136 * cr, 0.0, 1.0);
    out.data[i * 3 + 2] = std::clamp(y + 1.772 * cb, 0.0, 1.0);
  }
  return out;
}

Raster apply_dark(const Raster& img, DarkStrategy strategy, Rng& rng) {
  return apply_dark(img, sample_dark(strategy, rng));
}
Raster apply_defocus_blur(const Raster& img, Rng& rng) {
  return apply_defocus_blur(img, sample_defocus(rng));
}
Raster apply_motion_blur(const Raster& img, Rng& rng) {
  return apply_motion_blur(img, sample_motion(rng));
}
Raster apply_noise(const Raster& img, NoiseKind kind, Rng& rng) {
  return apply_noise(img, sample_noise(kind, rng));
}
Raster apply_rain(const Raster& img, Rng& rng) {
  return apply_rain(img, sample_rain(rng));
}
Raster apply_haze(const Raster& img, Rng& rng) {
  return apply_haze(img, sample_haze(rng));
}
Raster apply_jpeg(const Raster& img, int quality_or_random, Rng& rng) {
  return apply_jpeg(img, sample_jpeg(quality_or_random, rng));
}

const std::vector<CaseRecipe>& all_case_recipes() {
  using K = DegradationKind;
  static const std::vector<CaseRecipe> recipes = {
      {1, "I", {K::Dark, K::Noise}},
      {2, "I", {K::DefocusBlur, K::JpegArtifact}},
      {3, "I", {K::MotionBlur, K::Dark}},
      {4, "I", {K::Noise, K::JpegArtifact}},
      {5, "I", {K::Rain, K::Haze}},
      {6, "II", {K::Haze, K::Noise}},
      {7, "II", {K::MotionBlur, K::JpegArtifact}},
      {8, "II", {K::Rain, K::Dark}},
      {9, "III", {K::Dark, K::DefocusBlur, K::JpegArtifact}},
      {10, "III", {K::MotionBlur, K::DefocusBlur, K::Noise}},
      {11, "III", {K::Rain, K::Dark, K::Noise}},
      {12, "III", {K::Rain, K::Haze, K::Noise}},
      {13, "IV", {K::Haze, K::Dark, K::MotionBlur, K::JpegArtifact}},
      {14, "IV", {K::Rain, K::Haze, K::DefocusBlur, K::JpegArtifact}},
      {15, "IV", {K::Rain, K::MotionBlur, K::DefocusBlur, K::Noise, K::JpegArtifact}},
  };
  return recipes;
}

const CaseRecipe& case_recipe(int case_id) {
  const auto& all = all_case_recipes();
  if (case_id < 1 || case_id > static_cast<int>(all.size()))
    throw std::invalid_argument("case_id must be in 1..15");
  return all[case_id - 1];
}

namespace {

json apply_one(const Raster& in, Raster& out, DegradationKind kind, Rng& rng) {
  json rec;
  rec["kind"] = to_string(kind);
  switch (kind) {
    case DegradationKind::Dark: {
      auto strat = static_cast<DarkStrategy>(rng.uniform_int(0, 2));
      DarkParams p = sample_dark(strat, rng);
      const char* names[] = {"linear", "gamma", "constant"};
      rec["strategy"] = names[static_cast<int>(p.strategy)];
      rec["amount"] = p.amount;
      out = apply_dark(in, p);
      break;
    }
    case DegradationKind::DefocusBlur: {
      DefocusParams p = sample_defocus(rng);
      rec["radius"] = p.radius;
      out = apply_defocus_blur(in, p);
      break;
    }
    case DegradationKind::MotionBlur: {
      MotionParams p = sample_motion(rng);
      rec["length"] = p.length;
      rec["angle"] = p.angle;
      out = apply_motion_blur(in, p);
      break;
    }
    case DegradationKind::Rain: {
      RainParams p = sample_rain(rng);
      rec["density"] = p.density;
      rec["amplitude"] = p.amplitude;
      rec["length"] = p.length;
      rec["angle"] = p.angle;
      rec["seed"] = p.seed;
      out = apply_rain(in, p);
      break;
    }
    case DegradationKind::Noise: {
      auto kind2 = static_cast<NoiseKind>(rng.uniform_int(0, 1));
      NoiseParams p = sample_noise(kind2, rng);
      rec["noise_kind"] = p.kind == NoiseKind::Gaussian ? "gaussian" : "poisson";
      rec["sigma"] = p.sigma;
      rec["scale"] = p.scale;
      rec["seed"] = p.seed;
      out = apply_noise(in, p);
      break;
    }
    case DegradationKind::Haze: {
      HazeParams p = sample_haze(rng);
      rec["airlight"] = p.airlight;
      rec["beta"] = p.beta;
      out = apply_haze(in, p);
      break;
    }
    case DegradationKind::JpegArtifact: {
      JpegParams p = sample_jpeg(0, rng);
      rec["quality"] = p.quality;
      out = apply_jpeg(in, p);
      break;
    }
  }
  return rec;
}

}  // namespace

Raster synth_case(const Raster& clean, const CaseRecipe& recipe, Rng& rng,
                  json* params_out) {
  Raster img = clean;
  json params = json::array();
  for (DegradationKind kind : recipe.sequence) {
    Raster next;
    params.push_back(apply_one(img, next, kind, rng));
    img = std::move(next);
  }
  if (params_out) *params_out = std::move(params);
  return img;
}

std::string synth_dataset(const std::string& clean_dir,
                          const std::vector<int>& case_ids, int n_per_case,
                          std::uint64_t seed, const std::string& out_dir) {
  std::vector<std::string> cleans;
  if (!fs::is_directory(clean_dir))
    throw std::runtime_error("clean directory not found: " + clean_dir);
  for (const auto& e : fs::directory_iterator(clean_dir))
    if (e.path().extension() == ".png") cleans.push_back(e.path().string());
  std::sort(cleans.begin(), cleans.end());
  if (cleans.empty())
    throw std::runtime_error("no PNG files in clean directory: " + clean_dir);

  fs::create_directories(out_dir);
  std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write manifest: " + manifest_path);

  for (int case_id : case_ids) {
    const CaseRecipe& recipe = case_recipe(case_id);
    for (int i = 0; i < n_per_case; ++i) {
      const std::string& clean_path = cleans[i % cleans.size()];
      std::uint64_t stream_index =
          static_cast<std::uint64_t>(case_id) * 100000ULL + static_cast<std::uint64_t>(i);
      Rng rng = Rng::derive(seed, stream_index);
      Raster clean = read_png(clean_path);
      json params;
      Raster degraded = synth_case(clean, recipe, rng, &params);
      std::string name = "case" + std::to_string(case_id) + "_" + std::to_string(i) + ".png";
      std::string out_path = (fs::path(out_dir) / name).string();
      write_png(degraded, out_path);
      json row = {{"clean", clean_path},
                  {"degraded", out_path},
                  {"case_id", case_id},
                  {"setting", recipe.setting},
                  {"seed", seed},
                  {"params", params}};
      manifest << row.dump() << "\n";
    }
  }
  return manifest_path;
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ManifestRow r;
    r.clean = j.at("clean").get<std::string>();
    r.degraded = j.at("degraded").get<std::string>();
    r.case_id = j.at("case_id").get<int>();
    r.setting = j.at("setting").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.params_json = j.at("params").dump();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace toolseq
