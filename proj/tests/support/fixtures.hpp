#pragma once

// Synthetic inputs shared by the unit and acceptance tests.

#include <array>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "stainkit/raster.hpp"
#include "stainkit/rng.hpp"

namespace fixture {

/// Independent positive concentrations with most mass near zero, so both
/// pure-stain edges of the mixture cone are populated.
inline std::vector<std::array<double, 2>> skewed_concentrations(std::size_t n, std::uint64_t seed,
                                                                double scale = 1.0) {
  stainkit::SeededRng rng(seed, 0x5eed);
  std::vector<std::array<double, 2>> out(n);
  for (auto& c : out) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    c = {scale * (0.05 + 1.2 * a * a * a), scale * (0.05 + 1.2 * b * b * b)};
  }
  return out;
}

/// Rotates `base` by `degrees` towards `towards` within their common plane.
inline oracle::Vec3 rotate_towards(const oracle::Vec3& base, const oracle::Vec3& towards, double degrees) {
  const oracle::Vec3 u = oracle::normalise(base);
  oracle::Vec3 w = oracle::normalise(towards);
  const double d = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
  for (std::size_t i = 0; i < 3; ++i) w[i] -= d * u[i];
  w = oracle::normalise(w);
  const double t = degrees * 3.14159265358979323846 / 180.0;
  return {std::cos(t) * u[0] + std::sin(t) * w[0], std::cos(t) * u[1] + std::sin(t) * w[1],
          std::cos(t) * u[2] + std::sin(t) * w[2]};
}

/// Random stain pair: s0 near haematoxylin, s1 at least 15 degrees away and
/// with strictly smaller red component, both in the positive octant.
inline std::array<oracle::Vec3, 2> random_stain_pair(std::uint64_t seed) {
  stainkit::SeededRng rng(seed, 0x57a1);
  const oracle::Vec3 h = oracle::normalise({0.65 + rng.uniform(-0.05, 0.05), 0.70, 0.29 + rng.uniform(-0.05, 0.05)});
  const oracle::Vec3 e = oracle::normalise({0.07, 0.99, 0.11});
  // Eosin-like direction from haematoxylin is roughly 40 degrees away.
  const double sep = rng.uniform(20.0, 40.0);
  return {h, rotate_towards(h, e, sep)};
}

/// White background with a dark 100-level block.
inline stainkit::Image block_slide(int w, int h, int x0, int y0, int bw, int bh) {
  stainkit::Image img(w, h, 3, 255);
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 100;
    }
  }
  return img;
}

}  // namespace fixture
