#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace toolseq {

// RGB image, row-major, values in [0,1]. Public operations clamp on write.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // width*height*3, RGB interleaved

  Raster() = default;
  Raster(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_size(const Raster& o) const {
    return width == o.width && height == o.height;
  }

  void clamp01();
};

// Square convolution kernel, odd size.
struct Kernel {
  int size = 1;                 // odd, >= 1
  std::vector<double> weights;  // size*size

  static Kernel identity();
  static Kernel box(int size);
  static Kernel gaussian(double sigma);
  static Kernel disk(double radius);               // normalized, anti-aliased rim
  static Kernel line(int length, double angle);    // normalized segment
  static Kernel laplacian3();                      // weights sum to 0

  double& at(int x, int y) { return weights[static_cast<std::size_t>(y) * size + x]; }
  double at(int x, int y) const { return weights[static_cast<std::size_t>(y) * size + x]; }
};

// Color space. HSV stored in the same Raster layout: H in [0,1), S,V in [0,1].
Raster rgb_to_hsv(const Raster& img);
Raster hsv_to_rgb(const Raster& hsv);

// Per-channel correlation with replicate border padding; output size = input size.
Raster convolve2d(const Raster& img, const Kernel& k);

// Rec.601 luma plane, width*height values.
std::vector<double> luminance(const Raster& img);

// Full-reference metrics. Peak 1.0; capped at 99 dB when MSE < 1e-10.
double psnr(const Raster& a, const Raster& b);
// Mean local SSIM on luminance, 8x8 windows stride 1, C1=1e-4, C2=9e-4.
double ssim(const Raster& a, const Raster& b);

// 8-bit PNG I/O; float value = byte/255.
Raster read_png(const std::string& path);
void write_png(const Raster& img, const std::string& path);
std::string encode_png(const Raster& img);  // in-memory PNG bytes
Raster decode_png(const std::string& bytes);

}  // namespace toolseq
