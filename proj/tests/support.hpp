#pragma once

#include <cstdint>
#include <vector>

#include "toolseq/raster.hpp"

namespace toolseq::testsupport {

// Deterministic photograph-like image: low-frequency color field plus
// edges and mild texture. Seeded; no files needed.
Raster make_natural_image(int w, int h, std::uint64_t seed);

// Ten-image corpus at the given size.
std::vector<Raster> natural_corpus(int w, int h);

Raster constant_image(int w, int h, double r, double g, double b);

}  // namespace toolseq::testsupport
