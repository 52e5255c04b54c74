#include "support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace toolseq::testsupport {

Raster make_natural_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // low-frequency cosine mixture per channel
  struct Wave { double fx, fy, phase, amp; };
  std::vector<std::array<Wave, 4>> waves(3);
  for (auto& chan : waves)
    for (auto& wv : chan)
      wv = {u(gen) * 3.0, u(gen) * 3.0, u(gen) * 6.283, 0.1 + 0.2 * u(gen)};
  double base[3] = {0.3 + 0.4 * u(gen), 0.3 + 0.4 * u(gen), 0.3 + 0.4 * u(gen)};

  // a few hard-edged rectangles and disks for structure
  struct Shape { double cx, cy, rx, ry; bool disk; double col[3]; };
  std::vector<Shape> shapes(5);
  for (auto& s : shapes) {
    s = {u(gen), u(gen), 0.05 + 0.15 * u(gen), 0.05 + 0.15 * u(gen),
         u(gen) < 0.5, {u(gen), u(gen), u(gen)}};
  }

  std::normal_distribution<double> texture(0.0, 0.004);
  Raster img(w, h);
  for (int y = 0; y < h; ++y) {
    double fy = static_cast<double>(y) / h;
    for (int x = 0; x < w; ++x) {
      double fx = static_cast<double>(x) / w;
      double px[3];
      for (int c = 0; c < 3; ++c) {
        double v = base[c];
        for (const Wave& wv : waves[c])
          v += wv.amp * std::cos(6.283 * (wv.fx * fx + wv.fy * fy) + wv.phase);
        px[c] = v;
      }
      for (const Shape& s : shapes) {
        double dx = (fx - s.cx) / s.rx, dy = (fy - s.cy) / s.ry;
        bool inside = s.disk ? (dx * dx + dy * dy < 1.0)
                             : (std::fabs(dx) < 1.0 && std::fabs(dy) < 1.0);
        if (inside)
          for (int c = 0; c < 3; ++c) px[c] = 0.7 * s.col[c] + 0.3 * px[c];
      }
      double t = texture(gen);
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = std::clamp(px[c] + t, 0.02, 0.98);
    }
  }
  return img;
}

std::vector<Raster> natural_corpus(int w, int h) {
  std::vector<Raster> out;
  for (std::uint64_t i = 0; i < 10; ++i)
    out.push_back(make_natural_image(w, h, 1000 + i));
  return out;
}

Raster constant_image(int w, int h, double r, double g, double b) {
  Raster img(w, h);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.data[i * 3] = r;
    img.data[i * 3 + 1] = g;
    img.data[i * 3 + 2] = b;
  }
  return img;
}

}  // namespace toolseq::testsupport
