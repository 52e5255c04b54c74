#include "toolseq/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace toolseq {

namespace {

double squash(double x, double kappa) { return x / (x + kappa); }

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace

void ActionRecord::mark(int action) {
  if (action < 0 || action >= static_cast<int>(bits.size()))
    throw std::out_of_range("action index out of range");
  bits[action] = 1.0;
}

int ActionRecord::popcount() const {
  int n = 0;
  for (double b : bits) n += b > 0.5 ? 1 : 0;
  return n;
}

std::vector<double> dark_channel(const Raster& img, int patch) {
  int half = patch / 2;
  std::vector<double> chan_min(img.pixel_count());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      chan_min[static_cast<std::size_t>(y) * img.width + x] =
          std::min({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
  // two-pass separable min filter
  std::vector<double> tmp(img.pixel_count()), out(img.pixel_count());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double m = 1.0;
      for (int dx = -half; dx <= half; ++dx) {
        int sx = std::clamp(x + dx, 0, img.width - 1);
        m = std::min(m, chan_min[static_cast<std::size_t>(y) * img.width + sx]);
      }
      tmp[static_cast<std::size_t>(y) * img.width + x] = m;
    }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double m = 1.0;
      for (int dy = -half; dy <= half; ++dy) {
        int sy = std::clamp(y + dy, 0, img.height - 1);
        m = std::min(m, tmp[static_cast<std::size_t>(sy) * img.width + x]);
      }
      out[static_cast<std::size_t>(y) * img.width + x] = m;
    }
  return out;
}

double noise_estimate_raw(const Raster& img) {
  // robust MAD-style estimator on the luminance Laplacian
  std::vector<double> luma = luminance(img);
  std::vector<double> absl;
  absl.reserve(img.pixel_count());
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      double l = luma[i - img.width] + luma[i + img.width] + luma[i - 1] +
                 luma[i + 1] - 4.0 * luma[i];
      absl.push_back(std::fabs(l));
    }
  return 1.4826 * median_of(std::move(absl)) / std::sqrt(20.0);
}

double blockiness_raw(const Raster& img) {
  // mean absolute step across 8-aligned boundaries minus the interior baseline
  std::vector<double> luma = luminance(img);
  double boundary = 0.0, interior = 0.0;
  std::size_t nb = 0, ni = 0;
  auto L = [&](int x, int y) { return luma[static_cast<std::size_t>(y) * img.width + x]; };
  for (int y = 0; y < img.height; ++y)
    for (int x = 1; x < img.width; ++x) {
      double d = std::fabs(L(x, y) - L(x - 1, y));
      if (x % 8 == 0) { boundary += d; ++nb; } else { interior += d; ++ni; }
    }
  for (int y = 1; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double d = std::fabs(L(x, y) - L(x, y - 1));
      if (y % 8 == 0) { boundary += d; ++nb; } else { interior += d; ++ni; }
    }
  if (nb == 0 || ni == 0) return 0.0;
  return std::max(boundary / nb - interior / ni, 0.0);
}

double directional_ratio_raw(const Raster& img) {
  std::vector<double> luma = luminance(img);
  auto L = [&](int x, int y) { return luma[static_cast<std::size_t>(y) * img.width + x]; };
  double gx_energy = 0.0, gy_energy = 0.0;
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      double gx = 0.5 * (L(x + 1, y) - L(x - 1, y));
      double gy = 0.5 * (L(x, y + 1) - L(x, y - 1));
      gx_energy += gx * gx;
      gy_energy += gy * gy;
    }
  double total = gx_energy + gy_energy;
  return total > 1e-12 ? gx_energy / total : 0.5;
}

FeatureVector extract_features(const Raster& img) {
  if (std::min(img.width, img.height) < 32)
    throw std::invalid_argument("extract_features: min side must be >= 32");
  FeatureVector f{};
  std::vector<double> luma = luminance(img);
  const std::size_t n = luma.size();

  double mean = 0.0;
  for (double v : luma) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : luma) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  f[kSlotMeanLuma] = mean;
  f[kSlotStdLuma] = std::sqrt(var);

  for (double v : luma) {
    int bin = std::min(7, static_cast<int>(v * 8.0));
    f[kSlotHist0 + bin] += 1.0 / static_cast<double>(n);
  }

  Raster hsv = rgb_to_hsv(img);
  double mv = 0.0, ms = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ms += hsv.data[i * 3 + 1];
    mv += hsv.data[i * 3 + 2];
  }
  f[kSlotMeanV] = mv / static_cast<double>(n);
  f[kSlotMeanS] = ms / static_cast<double>(n);

  // gradients on luminance
  double grad_sum = 0.0, gx_energy = 0.0, gy_energy = 0.0;
  std::size_t ng = 0;
  auto L = [&](int x, int y) { return luma[static_cast<std::size_t>(y) * img.width + x]; };
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      double gx = 0.5 * (L(x + 1, y) - L(x - 1, y));
      double gy = 0.5 * (L(x, y + 1) - L(x, y - 1));
      grad_sum += std::sqrt(gx * gx + gy * gy);
      gx_energy += gx * gx;
      gy_energy += gy * gy;
      ++ng;
    }
  double grad_mean = ng ? grad_sum / static_cast<double>(ng) : 0.0;
  f[kSlotGradientMean] = squash(grad_mean, 0.05);

  // laplacian variance (sharpness)
  double lap_mean = 0.0, lap_var = 0.0;
  std::vector<double> lap;
  lap.reserve(ng);
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      double l = L(x, y - 1) + L(x, y + 1) + L(x - 1, y) + L(x + 1, y) - 4.0 * L(x, y);
      lap.push_back(l);
      lap_mean += l;
    }
  if (!lap.empty()) {
    lap_mean /= static_cast<double>(lap.size());
    for (double l : lap) lap_var += (l - lap_mean) * (l - lap_mean);
    lap_var /= static_cast<double>(lap.size());
  }
  f[kSlotSharpness] = squash(lap_var, 0.002);

  f[kSlotNoiseEstimate] = squash(noise_estimate_raw(img), 0.03);

  std::vector<double> dc = dark_channel(img, 7);
  double dc_mean = 0.0;
  for (double v : dc) dc_mean += v;
  f[kSlotDarkChannelMean] = dc_mean / static_cast<double>(dc.size());

  f[kSlotBlockiness] = squash(blockiness_raw(img), 0.01);

  // excess horizontal-gradient energy; near-vertical streaks push the ratio
  // above 0.5. Baseline 0.55 absorbs the mild anisotropy of clean photos.
  double total_energy = gx_energy + gy_energy;
  double ratio = total_energy > 1e-12 ? gx_energy / total_energy : 0.5;
  f[kSlotDirectionalEnergy] = std::clamp((ratio - 0.55) / 0.45, 0.0, 1.0);

  // high-frequency energy: residual after a 3x3 box smoothing
  double hf = 0.0;
  for (int y = 1; y < img.height - 1; ++y)
    for (int x = 1; x < img.width - 1; ++x) {
      double box = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) box += L(x + dx, y + dy);
      double r = L(x, y) - box / 9.0;
      hf += r * r;
    }
  hf = ng ? hf / static_cast<double>(ng) : 0.0;
  f[kSlotHighFreqEnergy] = squash(hf, 0.001);

  return f;
}

ActionRecord update_action_record(ActionRecord rec, int chosen) {
  rec.mark(chosen);
  return rec;
}

State assemble_state(const FeatureVector& f, const ActionRecord& rec) {
  State s;
  s.reserve(f.size() + rec.bits.size());
  s.insert(s.end(), f.begin(), f.end());
  s.insert(s.end(), rec.bits.begin(), rec.bits.end());
  return s;
}

}  // namespace toolseq
