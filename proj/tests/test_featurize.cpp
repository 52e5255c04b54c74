#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "toolseq/degrade.hpp"
#include "toolseq/featurize.hpp"

using namespace toolseq;
using testsupport::constant_image;
using testsupport::make_natural_image;
using testsupport::natural_corpus;

TEST_CASE("constant image has flat-field features") {
  Raster c = constant_image(32, 32, 0.5, 0.5, 0.5);
  FeatureVector f = extract_features(c);
  CHECK(f[kSlotStdLuma] == doctest::Approx(0.0));
  CHECK(f[kSlotGradientMean] == doctest::Approx(0.0));
  CHECK(f[kSlotSharpness] == doctest::Approx(0.0));
  CHECK(f[kSlotNoiseEstimate] == doctest::Approx(0.0));
  CHECK(f[kSlotMeanLuma] == doctest::Approx(0.5));
}

TEST_CASE("features reject tiny images") {
  Raster small = constant_image(31, 64, 0.5, 0.5, 0.5);
  CHECK_THROWS(extract_features(small));
}

TEST_CASE("every slot lies in [0,1] and reserved slots are zero") {
  Rng rng(3);
  for (const Raster& img : natural_corpus(48, 48)) {
    for (const Raster& variant :
         {img, apply_noise(img, NoiseKind::Gaussian, rng), apply_haze(img, rng)}) {
      FeatureVector f = extract_features(variant);
      for (double v : f) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      for (int i = 19; i < kFeatureDim; ++i) CHECK(f[i] == 0.0);
    }
  }
}

TEST_CASE("paired degradation comparisons") {
  Raster clean = make_natural_image(64, 64, 17);
  Rng rng(5);
  FeatureVector fc = extract_features(clean);

  FeatureVector fn = extract_features(apply_noise(clean, NoiseKind::Gaussian, rng));
  CHECK(fn[kSlotNoiseEstimate] > fc[kSlotNoiseEstimate]);

  FeatureVector fj = extract_features(apply_jpeg(clean, JpegParams{5}));
  CHECK(fj[kSlotBlockiness] > fc[kSlotBlockiness]);
}

TEST_CASE("clean corpus scores low on degradation slots") {
  for (const Raster& img : natural_corpus(64, 64)) {
    FeatureVector f = extract_features(img);
    CHECK(f[kSlotNoiseEstimate] < 0.2);
    CHECK(f[kSlotBlockiness] < 0.2);
    CHECK(f[kSlotDirectionalEnergy] < 0.2);
  }
}

TEST_CASE("resolution robustness on a smooth image") {
  // per-pixel normalized statistics should survive a resolution change
  auto smooth = [](int n) {
    Raster img(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double fx = static_cast<double>(x) / n, fy = static_cast<double>(y) / n;
        img.at(x, y, 0) = 0.3 + 0.3 * fx;
        img.at(x, y, 1) = 0.4 + 0.2 * fy;
        img.at(x, y, 2) = 0.5;
      }
    return img;
  };
  FeatureVector a = extract_features(smooth(256));
  FeatureVector b = extract_features(smooth(128));
  for (int i = 0; i < kFeatureDim; ++i)
    CHECK(std::fabs(a[i] - b[i]) < 0.1);
}

TEST_CASE("action record set-only growth") {
  ActionRecord rec(11);
  CHECK(rec.popcount() == 0);
  rec = update_action_record(rec, 3);
  CHECK(rec.bits[3] == 1.0);
  CHECK(rec.popcount() == 1);
  rec = update_action_record(rec, 3);
  CHECK(rec.popcount() == 1);
  CHECK_THROWS(update_action_record(rec, 11));
  CHECK_THROWS(update_action_record(rec, -1));
}

TEST_CASE("assemble_state concatenates features first") {
  FeatureVector f{};
  f[0] = 0.25;
  f[kFeatureDim - 1] = 0.75;
  ActionRecord rec(11);
  rec.mark(2);
  State s = assemble_state(f, rec);
  REQUIRE(s.size() == kFeatureDim + 11);
  CHECK(s[0] == 0.25);
  CHECK(s[kFeatureDim - 1] == 0.75);
  CHECK(s[kFeatureDim + 2] == 1.0);

  // stable slot ordering
  State s2 = assemble_state(f, rec);
  CHECK(s == s2);
}
