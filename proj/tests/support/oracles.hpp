#pragma once

// Reference computations used by the tests. These are written directly from
// the defining formulas and share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "stainkit/raster.hpp"

namespace oracle {

using Vec3 = std::array<double, 3>;

inline Vec3 normalise(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  const Vec3 u = normalise(a), w = normalise(b);
  double d = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
  d = std::clamp(d, -1.0, 1.0);
  return std::acos(d) * 180.0 / 3.14159265358979323846;
}

inline double od(int v, double i0 = 255.0) { return -std::log10((v + 1.0) / (i0 + 1.0)); }

inline int od_inverse(double d, double i0 = 255.0) {
  const double v = std::nearbyint((i0 + 1.0) * std::pow(10.0, -d) - 1.0);
  return static_cast<int>(std::clamp(v, 0.0, 255.0));
}

/// Round-half-to-even of 0.2125 R + 0.7154 G + 0.0721 B, with the exact sum
/// carried as an integer in units of 1e-4.
inline int greyscale(int r, int g, int b) {
  const long n = 2125L * r + 7154L * g + 721L * b;
  const long q = n / 10000;
  const long rem = n % 10000;
  long out = q;
  if (rem > 5000 || (rem == 5000 && (q % 2) == 1)) out = q + 1;
  return static_cast<int>(out);
}

/// Solves the 3x3 system A x = b by Cramer's rule; columns of A are given.
inline Vec3 cramer(const Vec3& c0, const Vec3& c1, const Vec3& c2, const Vec3& b) {
  auto det = [](const Vec3& a, const Vec3& d, const Vec3& e) {
    return a[0] * (d[1] * e[2] - d[2] * e[1]) - d[0] * (a[1] * e[2] - a[2] * e[1]) +
           e[0] * (a[1] * d[2] - a[2] * d[1]);
  };
  const double D = det(c0, c1, c2);
  return {det(b, c1, c2) / D, det(c0, b, c2) / D, det(c0, c1, b) / D};
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Two-stain image: rgb = od^-1(c0 s0 + c1 s1) per pixel.
inline stainkit::Image synthesise(const Vec3& s0, const Vec3& s1,
                                  const std::vector<std::array<double, 2>>& conc, int width) {
  const int height = static_cast<int>(conc.size()) / width;
  const Vec3 u = normalise(s0), w = normalise(s1);
  stainkit::Image img(width, height, 3);
  for (std::size_t i = 0; i < conc.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double d = conc[i][0] * u[static_cast<std::size_t>(c)] + conc[i][1] * w[static_cast<std::size_t>(c)];
      img.pixel(i)[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(od_inverse(d));
    }
  }
  return img;
}

/// Percentile by sorting and linear interpolation at rank p/100 (n - 1).
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  return v[lo] + (rank - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Maximum number of one-to-one pairs whose IoU reaches the threshold,
/// by exhaustive search over all assignments.
inline std::size_t optimal_matches(const std::vector<std::vector<double>>& iou, double threshold) {
  const std::size_t np = iou.size();
  const std::size_t nt = np ? iou[0].size() : 0;
  std::vector<bool> used(nt, false);
  std::function<std::size_t(std::size_t)> best = [&](std::size_t p) -> std::size_t {
    if (p == np) return 0;
    std::size_t top = best(p + 1);  // leave p unmatched
    for (std::size_t t = 0; t < nt; ++t) {
      if (used[t] || iou[p][t] < threshold) continue;
      used[t] = true;
      top = std::max(top, 1 + best(p + 1));
      used[t] = false;
    }
    return top;
  };
  return best(0);
}

/// Symmetric reflection of an out-of-range index.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

}  // namespace oracle
