#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace stainkit::detail {

/// Symmetric reflection (... b a | a b c ... | c b ...) for any integer index.
inline int reflect_index(int i, int n) noexcept {
  if (n <= 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Normalised Gaussian taps, radius = int(4 sigma + 0.5).
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(4.0 * sigma + 0.5);
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

/// Separable Gaussian over a width x height plane with `stride` interleaved
/// channels, filtering channel `channel` in place. Borders reflect.
inline void gaussian_filter_plane(std::vector<double>& data, int width, int height, int stride,
                                  int channel, double sigma) {
  if (!(sigma > 0.0) || width == 0 || height == 0) return;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  auto at = [&](int x, int y) -> double& {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(x)) *
                    static_cast<std::size_t>(stride) +
                static_cast<std::size_t>(channel)];
  };
  std::vector<double> padded(static_cast<std::size_t>(std::max(width, height) + 2 * radius));
  auto convolve = [&](int n, auto&& get, auto&& put) {
    for (int i = -radius; i < n + radius; ++i) padded[static_cast<std::size_t>(i + radius)] = get(reflect_index(i, n));
    for (int i = 0; i < n; ++i) {
      const double* src = padded.data() + i;
      double acc = 0.0;
      for (std::size_t j = 0; j < k.size(); ++j) acc += k[j] * src[j];
      put(i, acc);
    }
  };
  for (int y = 0; y < height; ++y) {
    convolve(width, [&](int x) { return at(x, y); }, [&](int x, double v) { at(x, y) = v; });
  }
  for (int x = 0; x < width; ++x) {
    convolve(height, [&](int y) { return at(x, y); }, [&](int y, double v) { at(x, y) = v; });
  }
}

}  // namespace stainkit::detail
