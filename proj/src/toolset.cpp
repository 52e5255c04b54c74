#include "toolseq/toolset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <sstream>

#include <nlohmann/json.hpp>

#include "toolseq/featurize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace toolseq {

Raster tool_brighten_gamma(const Raster& img) {
  Raster hsv = rgb_to_hsv(img);
  for (std::size_t i = 0; i < hsv.pixel_count(); ++i) {
    double& v = hsv.data[i * 3 + 2];
    v = std::pow(v, 2.0 / 3.0);
  }
  return hsv_to_rgb(hsv);
}

Raster tool_brighten_const(const Raster& img) {
  Raster hsv = rgb_to_hsv(img);
  for (std::size_t i = 0; i < hsv.pixel_count(); ++i) {
    double& v = hsv.data[i * 3 + 2];
    v = std::min(v + 40.0 / 255.0, 1.0);
  }
  return hsv_to_rgb(hsv);
}

namespace {

// Clipped histogram equalization of one tile; returns the 256-entry mapping.
void clahe_tile_mapping(const std::vector<double>& v_plane, int w, int h,
                        int x0, int y0, int x1, int y1, double clip_limit,
                        std::array<double, 256>& mapping) {
  int hist[256] = {0};
  int count = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      int bin = std::clamp(static_cast<int>(v_plane[static_cast<std::size_t>(y) * w + x] * 255.0 + 0.5), 0, 255);
      ++hist[bin];
      ++count;
    }
  if (count == 0) {
    for (int i = 0; i < 256; ++i) mapping[i] = i / 255.0;
    return;
  }
  double limit = clip_limit * count / 256.0;
  double excess = 0.0;
  double clipped[256];
  for (int i = 0; i < 256; ++i) {
    if (hist[i] > limit) {
      excess += hist[i] - limit;
      clipped[i] = limit;
    } else {
      clipped[i] = hist[i];
    }
  }
  double redist = excess / 256.0;
  double cdf = 0.0;
  for (int i = 0; i < 256; ++i) {
    cdf += clipped[i] + redist;
    mapping[i] = cdf / count;
  }
}

}  // namespace

Raster tool_clahe(const Raster& img) {
  constexpr int kTiles = 8;
  constexpr double kClip = 2.0;
  Raster hsv = rgb_to_hsv(img);
  std::vector<double> v(hsv.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = hsv.data[i * 3 + 2];

  int tw = (img.width + kTiles - 1) / kTiles;
  int th = (img.height + kTiles - 1) / kTiles;
  std::vector<std::array<double, 256>> maps(kTiles * kTiles);
  for (int ty = 0; ty < kTiles; ++ty)
    for (int tx = 0; tx < kTiles; ++tx)
      clahe_tile_mapping(v, img.width, img.height, tx * tw, ty * th,
                         std::min((tx + 1) * tw, img.width),
                         std::min((ty + 1) * th, img.height), kClip,
                         maps[ty * kTiles + tx]);

  auto lookup = [&](int tx, int ty, double val) {
    tx = std::clamp(tx, 0, kTiles - 1);
    ty = std::clamp(ty, 0, kTiles - 1);
    double p = val * 255.0;
    int i0 = std::clamp(static_cast<int>(p), 0, 255);
    int i1 = std::min(i0 + 1, 255);
    double fr = p - i0;
    const auto& m = maps[ty * kTiles + tx];
    return m[i0] * (1 - fr) + m[i1] * fr;
  };

  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // bilinear blend of the four surrounding tile mappings
      double fx = (x + 0.5) / tw - 0.5, fy = (y + 0.5) / th - 0.5;
      int tx0 = static_cast<int>(std::floor(fx)), ty0 = static_cast<int>(std::floor(fy));
      double ax = fx - tx0, ay = fy - ty0;
      double val = v[static_cast<std::size_t>(y) * img.width + x];
      double out = (1 - ax) * (1 - ay) * lookup(tx0, ty0, val) +
                   ax * (1 - ay) * lookup(tx0 + 1, ty0, val) +
                   (1 - ax) * ay * lookup(tx0, ty0 + 1, val) +
                   ax * ay * lookup(tx0 + 1, ty0 + 1, val);
      hsv.data[(static_cast<std::size_t>(y) * img.width + x) * 3 + 2] =
          std::clamp(out, 0.0, 1.0);
    }
  }
  return hsv_to_rgb(hsv);
}

Raster tool_unsharp(const Raster& img, double radius, double amount) {
  Raster blurred = convolve2d(img, Kernel::gaussian(radius));
  Raster out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[i] = std::clamp(
        img.data[i] + amount * (img.data[i] - blurred.data[i]), 0.0, 1.0);
  return out;
}

Raster tool_median(const Raster& img, int size) {
  int half = size / 2;
  Raster out(img.width, img.height);
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        window.clear();
        for (int dy = -half; dy <= half; ++dy)
          for (int dx = -half; dx <= half; ++dx)
            window.push_back(img.at(std::clamp(x + dx, 0, img.width - 1),
                                    std::clamp(y + dy, 0, img.height - 1), c));
        std::size_t mid = window.size() / 2;
        std::nth_element(window.begin(), window.begin() + mid, window.end());
        out.at(x, y, c) = window[mid];
      }
  return out;
}

Raster tool_gauss_denoise(const Raster& img) {
  return convolve2d(img, Kernel::gaussian(1.0));
}

Raster tool_deblock(const Raster& img) {
  // 1-D smoothing across 8-aligned block boundaries only
  Raster out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 8; x < img.width; x += 8)
      for (int c = 0; c < 3; ++c) {
        double a = img.at(x - 1, y, c), b = img.at(x, y, c);
        double a2 = x >= 2 ? img.at(x - 2, y, c) : a;
        double b2 = x + 1 < img.width ? img.at(x + 1, y, c) : b;
        out.at(x - 1, y, c) = std::clamp(0.25 * a2 + 0.5 * a + 0.25 * b, 0.0, 1.0);
        out.at(x, y, c) = std::clamp(0.25 * a + 0.5 * b + 0.25 * b2, 0.0, 1.0);
      }
  Raster out2 = out;
  for (int x = 0; x < img.width; ++x)
    for (int y = 8; y < img.height; y += 8)
      for (int c = 0; c < 3; ++c) {
        double a = out.at(x, y - 1, c), b = out.at(x, y, c);
        double a2 = y >= 2 ? out.at(x, y - 2, c) : a;
        double b2 = y + 1 < img.height ? out.at(x, y + 1, c) : b;
        out2.at(x, y - 1, c) = std::clamp(0.25 * a2 + 0.5 * a + 0.25 * b, 0.0, 1.0);
        out2.at(x, y, c) = std::clamp(0.25 * a + 0.5 * b + 0.25 * b2, 0.0, 1.0);
      }
  return out2;
}

Raster dcp_dehaze(const Raster& img) {
  constexpr int kPatch = 7;
  constexpr double kOmega = 0.95;
  std::vector<double> dc = dark_channel(img, kPatch);

  // airlight: mean of the top 0.1% dark-channel values (scalar, gray)
  std::vector<double> sorted = dc;
  std::size_t top = std::max<std::size_t>(1, dc.size() / 1000);
  std::nth_element(sorted.begin(), sorted.begin() + top, sorted.end(),
                   std::greater<double>());
  double A = 0.0;
  for (std::size_t i = 0; i < top; ++i) A += sorted[i];
  A = std::max(A / static_cast<double>(top), 1e-2);

  // transmission from the normalized image's dark channel
  Raster norm(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    norm.data[i] = std::min(img.data[i] / A, 1.0);
  std::vector<double> dcn = dark_channel(norm, kPatch);

  Raster out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    double t = std::max(1.0 - kOmega * dcn[i], 0.1);
    for (int c = 0; c < 3; ++c)
      out.data[i * 3 + c] =
          std::clamp((img.data[i * 3 + c] - A) / t + A, 0.0, 1.0);
  }
  return out;
}

ToolRegistry ToolRegistry::standard() {
  using K = DegradationKind;
  ToolRegistry r;
  auto add = [&](const std::string& name, std::optional<K> target,
                 const std::string& desc) {
    ToolSpec t;
    t.index = static_cast<int>(r.tools_.size());
    t.name = name;
    t.target = target;
    t.description = desc;
    r.tools_.push_back(std::move(t));
  };
  add("brighten-gamma", K::Dark, "gamma correction, gamma = 2/3, on the V channel");
  add("brighten-const", K::Dark, "adds 40/255 to the V channel");
  add("clahe", K::Dark, "contrast-limited adaptive histogram equalization, 8x8 tiles, clip 2.0");
  add("unsharp-weak", K::DefocusBlur, "unsharp masking, radius 1, amount 0.5");
  add("unsharp-strong", K::MotionBlur, "unsharp masking, radius 2, amount 1.0");
  add("median3", K::Noise, "3x3 median filter");
  add("median5", K::Rain, "5x5 median filter");
  add("gauss-denoise", K::Noise, "gaussian smoothing, sigma 1.0");
  add("deblock", K::JpegArtifact, "1-D smoothing across 8-aligned block boundaries");
  add("dcp-dehaze", K::Haze, "dark channel prior dehazing, patch 7, omega 0.95");
  add("stop", std::nullopt, "end the episode");
  return r;
}

const ToolSpec& ToolRegistry::tool(int index) const {
  if (index < 0 || index >= n_actions())
    throw std::out_of_range("tool index out of range");
  return tools_[index];
}

namespace {

Raster apply_external(const ToolSpec& spec, const Raster& img) {
  fs::path dir = fs::temp_directory_path() / ("toolseq_ext_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  fs::path in = dir / (spec.name + "_in.png"), out = dir / (spec.name + "_out.png");
  write_png(img, in.string());
  std::error_code ec;
  fs::remove(out, ec);
  std::string cmd = *spec.command + " " + in.string() + " " + out.string();
  int rc = std::system(cmd.c_str());
  if (rc != 0) throw ToolError("external tool '" + spec.name + "' exited with status " + std::to_string(rc));
  if (!fs::exists(out)) throw ToolError("external tool '" + spec.name + "' produced no output");
  return read_png(out.string());
}

}  // namespace

Raster ToolRegistry::apply(int index, const Raster& img) const {
  const ToolSpec& spec = tool(index);
  if (spec.is_stop()) throw ToolError("STOP is not an applicable tool");
  if (spec.command) return apply_external(spec, img);
  if (spec.name == "brighten-gamma") return tool_brighten_gamma(img);
  if (spec.name == "brighten-const") return tool_brighten_const(img);
  if (spec.name == "clahe") return tool_clahe(img);
  if (spec.name == "unsharp-weak") return tool_unsharp(img, 1.0, 0.5);
  if (spec.name == "unsharp-strong") return tool_unsharp(img, 2.0, 1.0);
  if (spec.name == "median3") return tool_median(img, 3);
  if (spec.name == "median5") return tool_median(img, 5);
  if (spec.name == "gauss-denoise") return tool_gauss_denoise(img);
  if (spec.name == "deblock") return tool_deblock(img);
  if (spec.name == "dcp-dehaze") return dcp_dehaze(img);
  throw ToolError("unknown tool: " + spec.name);
}

std::string ToolRegistry::serialize() const {
  json arr = json::array();
  for (const ToolSpec& t : tools_) {
    json j = {{"index", t.index}, {"name", t.name}, {"description", t.description}};
    j["target"] = t.target ? json(to_string(*t.target)) : json(nullptr);
    if (t.command) j["command"] = *t.command;
    arr.push_back(std::move(j));
  }
  return arr.dump();
}

ToolRegistry ToolRegistry::deserialize(const std::string& text) {
  ToolRegistry r;
  for (const json& j : json::parse(text)) {
    ToolSpec t;
    t.index = j.at("index").get<int>();
    t.name = j.at("name").get<std::string>();
    t.description = j.at("description").get<std::string>();
    if (!j.at("target").is_null())
      t.target = degradation_from_string(j.at("target").get<std::string>());
    if (j.contains("command")) t.command = j.at("command").get<std::string>();
    r.tools_.push_back(std::move(t));
  }
  return r;
}

std::uint64_t ToolRegistry::fingerprint() const {
  std::string s = serialize();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void ToolRegistry::add_external_tool(const std::string& name,
                                     const std::string& command,
                                     DegradationKind target) {
  // new tools go in front of STOP so STOP stays last
  ToolSpec t;
  t.name = name;
  t.command = command;
  t.target = target;
  tools_.insert(tools_.end() - 1, std::move(t));
  for (std::size_t i = 0; i < tools_.size(); ++i)
    tools_[i].index = static_cast<int>(i);
}

}  // namespace toolseq
