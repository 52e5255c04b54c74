#include "toolseq/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace toolseq {

void Raster::clamp01() {
  for (double& v : data) v = std::clamp(v, 0.0, 1.0);
}

Kernel Kernel::identity() {
  Kernel k;
  k.size = 1;
  k.weights = {1.0};
  return k;
}

Kernel Kernel::box(int size) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("box kernel size must be odd");
  Kernel k;
  k.size = size;
  k.weights.assign(static_cast<std::size_t>(size) * size,
                   1.0 / (static_cast<double>(size) * size));
  return k;
}

Kernel Kernel::gaussian(double sigma) {
  if (sigma <= 0.0) return identity();
  int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  Kernel k;
  k.size = 2 * half + 1;
  k.weights.resize(static_cast<std::size_t>(k.size) * k.size);
  double sum = 0.0;
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x) {
      double w = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      k.at(x + half, y + half) = w;
      sum += w;
    }
  for (double& w : k.weights) w /= sum;
  return k;
}

Kernel Kernel::disk(double radius) {
  if (radius < 0.5) return identity();
  int half = static_cast<int>(std::ceil(radius));
  Kernel k;
  k.size = 2 * half + 1;
  k.weights.resize(static_cast<std::size_t>(k.size) * k.size);
  double sum = 0.0;
  // 4x4 supersampling for a soft rim
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x) {
      int inside = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          double px = x - 0.375 + sx * 0.25;
          double py = y - 0.375 + sy * 0.25;
          if (px * px + py * py <= radius * radius) ++inside;
        }
      double w = inside / 16.0;
      k.at(x + half, y + half) = w;
      sum += w;
    }
  for (double& w : k.weights) w /= sum;
  return k;
}

Kernel Kernel::line(int length, double angle) {
  if (length <= 1) return identity();
  int half = (length - 1) / 2 + 1;
  Kernel k;
  k.size = 2 * half + 1;
  k.weights.assign(static_cast<std::size_t>(k.size) * k.size, 0.0);
  double dx = std::cos(angle), dy = std::sin(angle);
  // rasterize the segment with bilinear splatting
  int steps = 4 * length;
  for (int i = 0; i <= steps; ++i) {
    double t = (static_cast<double>(i) / steps - 0.5) * (length - 1);
    double px = half + t * dx, py = half + t * dy;
    int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
    double fx = px - x0, fy = py - y0;
    for (int oy = 0; oy <= 1; ++oy)
      for (int ox = 0; ox <= 1; ++ox) {
        int xx = x0 + ox, yy = y0 + oy;
        if (xx < 0 || xx >= k.size || yy < 0 || yy >= k.size) continue;
        k.at(xx, yy) += (ox ? fx : 1 - fx) * (oy ? fy : 1 - fy);
      }
  }
  double sum = 0.0;
  for (double w : k.weights) sum += w;
  for (double& w : k.weights) w /= sum;
  return k;
}

Kernel Kernel::laplacian3() {
  Kernel k;
  k.size = 3;
  k.weights = {0, 1, 0, 1, -4, 1, 0, 1, 0};
  return k;
}

Raster rgb_to_hsv(const Raster& img) {
  Raster out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    double r = img.data[i * 3], g = img.data[i * 3 + 1], b = img.data[i * 3 + 2];
    double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    double d = mx - mn;
    double h = 0.0;
    if (d > 0.0) {
      if (mx == r)
        h = std::fmod((g - b) / d + 6.0, 6.0) / 6.0;
      else if (mx == g)
        h = ((b - r) / d + 2.0) / 6.0;
      else
        h = ((r - g) / d + 4.0) / 6.0;
    }
    double s = mx > 0.0 ? d / mx : 0.0;
    out.data[i * 3] = h;
    out.data[i * 3 + 1] = s;
    out.data[i * 3 + 2] = mx;
  }
  return out;
}

Raster hsv_to_rgb(const Raster& hsv) {
  Raster out(hsv.width, hsv.height);
  for (std::size_t i = 0; i < hsv.pixel_count(); ++i) {
    double h = hsv.data[i * 3] * 6.0, s = hsv.data[i * 3 + 1], v = hsv.data[i * 3 + 2];
    double c = v * s;
    double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
    double m = v - c;
    double r = 0, g = 0, b = 0;
    int sect = static_cast<int>(h) % 6;
    switch (sect) {
      case 0: r = c; g = x; break;
      case 1: r = x; g = c; break;
      case 2: g = c; b = x; break;
      case 3: g = x; b = c; break;
      case 4: r = x; b = c; break;
      default: r = c; b = x; break;
    }
    out.data[i * 3] = std::clamp(r + m, 0.0, 1.0);
    out.data[i * 3 + 1] = std::clamp(g + m, 0.0, 1.0);
    out.data[i * 3 + 2] = std::clamp(b + m, 0.0, 1.0);
  }
  return out;
}

Raster convolve2d(const Raster& img, const Kernel& k) {
  Raster out(img.width, img.height);
  int half = k.size / 2;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int ky = 0; ky < k.size; ++ky) {
        int sy = std::clamp(y + ky - half, 0, img.height - 1);
        for (int kx = 0; kx < k.size; ++kx) {
          int sx = std::clamp(x + kx - half, 0, img.width - 1);
          double w = k.at(kx, ky);
          for (int c = 0; c < 3; ++c) acc[c] += w * img.at(sx, sy, c);
        }
      }
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = std::clamp(acc[c], 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> luminance(const Raster& img) {
  std::vector<double> y(img.pixel_count());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] +
           0.114 * img.data[i * 3 + 2];
  return y;
}

double psnr(const Raster& a, const Raster& b) {
  if (!a.same_size(b)) throw std::invalid_argument("psnr: dimension mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse < 1e-10) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Raster& a, const Raster& b) {
  if (!a.same_size(b)) throw std::invalid_argument("ssim: dimension mismatch");
  constexpr int W = 8;
  if (a.width < W || a.height < W)
    throw std::invalid_argument("ssim: image smaller than 8x8 window");
  constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  std::vector<double> la = luminance(a), lb = luminance(b);
  double total = 0.0;
  std::size_t count = 0;
  const double n = W * W;
  for (int y = 0; y + W <= a.height; ++y) {
    for (int x = 0; x + W <= a.width; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int wy = 0; wy < W; ++wy)
        for (int wx = 0; wx < W; ++wx) {
          double va = la[static_cast<std::size_t>(y + wy) * a.width + x + wx];
          double vb = lb[static_cast<std::size_t>(y + wy) * a.width + x + wx];
          sa += va; sb += vb;
          saa += va * va; sbb += vb * vb; sab += va * vb;
        }
      double ma = sa / n, mb = sb / n;
      double va = saa / n - ma * ma, vb = sbb / n - mb * mb;
      double cov = sab / n - ma * mb;
      total += (2 * ma * mb + C1) * (2 * cov + C2) /
               ((ma * ma + mb * mb + C1) * (va + vb + C2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

namespace {
struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
}  // namespace

namespace {

// shared decode body: png read struct already has its source wired up
Raster read_png_rows(png_structp png, png_infop info) {
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  int depth = png_get_bit_depth(png, info), color = png_get_color_type(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  Raster img(static_cast<int>(w), static_cast<int>(h));
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(static_cast<int>(x), static_cast<int>(y), c) = row[x * 3 + c] / 255.0;
  }
  return img;
}

}  // namespace

Raster decode_png(const std::string& bytes) {
  struct Cursor { const std::string* buf; std::size_t pos; } cur{&bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("in-memory PNG decode failed");
  }
  png_set_read_fn(png, &cur, [](png_structp p, png_bytep data, png_size_t len) {
    auto* c = static_cast<Cursor*>(png_get_io_ptr(p));
    if (c->pos + len > c->buf->size()) png_error(p, "PNG buffer truncated");
    std::memcpy(data, c->buf->data() + c->pos, len);
    c->pos += len;
  });
  Raster img = read_png_rows(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Raster read_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open PNG for reading: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("PNG decode failed: " + path);
  }
  png_init_io(png, fp.get());
  Raster img = read_png_rows(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const Raster& img, const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open PNG for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[x * 3 + c] = static_cast<png_byte>(
            std::lround(std::clamp(img.at(x, y, c), 0.0, 1.0) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::string encode_png(const Raster& img) {
  std::string buf;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("in-memory PNG encode failed");
  }
  png_set_write_fn(
      png, &buf,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* s = static_cast<std::string*>(png_get_io_ptr(p));
        s->append(reinterpret_cast<const char*>(data), len);
      },
      nullptr);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[x * 3 + c] = static_cast<png_byte>(
            std::lround(std::clamp(img.at(x, y, c), 0.0, 1.0) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return buf;
}

}  // namespace toolseq
