#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "support.hpp"
#include "toolseq/raster.hpp"

using namespace toolseq;
using testsupport::constant_image;
using testsupport::make_natural_image;

TEST_CASE("rgb_to_hsv corners") {
  Raster red = constant_image(2, 2, 1.0, 0.0, 0.0);
  Raster hsv = rgb_to_hsv(red);
  CHECK(hsv.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(hsv.at(0, 0, 1) == doctest::Approx(1.0));
  CHECK(hsv.at(0, 0, 2) == doctest::Approx(1.0));

  Raster gray = constant_image(2, 2, 0.5, 0.5, 0.5);
  hsv = rgb_to_hsv(gray);
  CHECK(hsv.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(hsv.at(0, 0, 1) == doctest::Approx(0.0));
  CHECK(hsv.at(0, 0, 2) == doctest::Approx(0.5));
}

TEST_CASE("rgb_to_hsv hand-computed pixel") {
  Raster px = constant_image(1, 1, 0.2, 0.4, 0.6);
  Raster hsv = rgb_to_hsv(px);
  CHECK(hsv.at(0, 0, 2) == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(hsv.at(0, 0, 1) == doctest::Approx(0.4 / 0.6).epsilon(1e-9));
  CHECK(hsv.at(0, 0, 0) == doctest::Approx((4.0 + (0.2 - 0.4) / 0.4) / 6.0).epsilon(1e-9));
}

TEST_CASE("hsv_to_rgb corners") {
  Raster h = constant_image(1, 1, 0.0, 1.0, 1.0);
  Raster rgb = hsv_to_rgb(h);
  CHECK(rgb.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(rgb.at(0, 0, 1) == doctest::Approx(0.0));
  CHECK(rgb.at(0, 0, 2) == doctest::Approx(0.0));

  Raster zero_sat = constant_image(1, 1, 0.7, 0.0, 0.3);
  rgb = hsv_to_rgb(zero_sat);
  for (int c = 0; c < 3; ++c) CHECK(rgb.at(0, 0, c) == doctest::Approx(0.3));
}

TEST_CASE("hsv round-trip on random pixels") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Raster img(10, 10);
  for (double& v : img.data) v = u(gen);
  Raster rt = hsv_to_rgb(rgb_to_hsv(img));
  double worst = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i)
    worst = std::max(worst, std::fabs(img.data[i] - rt.data[i]));
  CHECK(worst < 1e-6);
}

TEST_CASE("convolve2d identity and box") {
  Raster img = make_natural_image(32, 32, 3);
  Raster same = convolve2d(img, Kernel::identity());
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(same.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));

  Raster c = constant_image(16, 16, 0.4, 0.4, 0.4);
  Raster boxed = convolve2d(c, Kernel::box(3));
  for (double v : boxed.data) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("convolve2d box spreads a spike") {
  Raster img = constant_image(9, 9, 0.0, 0.0, 0.0);
  img.at(4, 4, 0) = 0.9;
  Raster boxed = convolve2d(img, Kernel::box(3));
  for (int y = 3; y <= 5; ++y)
    for (int x = 3; x <= 5; ++x)
      CHECK(boxed.at(x, y, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(boxed.at(1, 1, 0) == doctest::Approx(0.0));
}

TEST_CASE("psnr closed forms") {
  Raster a = constant_image(8, 8, 0.5, 0.5, 0.5);
  CHECK(psnr(a, a) == doctest::Approx(99.0));
  Raster b = constant_image(8, 8, 0.6, 0.6, 0.6);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(psnr(a, b) == psnr(b, a));
  Raster small(4, 4);
  CHECK_THROWS(psnr(a, small));
}

TEST_CASE("psnr matches direct MSE oracle") {
  Raster a = make_natural_image(24, 24, 11);
  Raster b = make_natural_image(24, 24, 12);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
}

TEST_CASE("ssim identity, symmetry, closed form") {
  Raster a = make_natural_image(32, 32, 21);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  Raster c1 = constant_image(16, 16, 0.5, 0.5, 0.5);
  Raster c2 = constant_image(16, 16, 0.25, 0.25, 0.25);
  double expected = (2 * 0.5 * 0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4);
  CHECK(ssim(c1, c2) == doctest::Approx(expected).epsilon(1e-6));

  Raster b = make_natural_image(32, 32, 22);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-9));

  Raster tiny(4, 4);
  CHECK_THROWS(ssim(tiny, tiny));
}

TEST_CASE("ssim decreases with noise level") {
  Raster clean = make_natural_image(48, 48, 31);
  std::mt19937_64 gen(5);
  auto noisy = [&](double sigma) {
    std::normal_distribution<double> n(0.0, sigma);
    Raster out = clean;
    for (double& v : out.data) v = std::clamp(v + n(gen), 0.0, 1.0);
    return out;
  };
  CHECK(ssim(clean, noisy(0.1)) < ssim(clean, noisy(0.05)));
}

TEST_CASE("png round-trip preserves 8-bit values") {
  Raster img = make_natural_image(20, 14, 41);
  // snap to the 8-bit grid first
  for (double& v : img.data) v = std::round(v * 255.0) / 255.0;
  std::string path = "test_roundtrip.png";
  write_png(img, path);
  Raster back = read_png(path);
  REQUIRE(back.same_size(img));
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));
  std::remove(path.c_str());
}
