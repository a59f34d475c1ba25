#include "stainkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "filtering.hpp"

namespace stainkit::synthetic {

namespace {

const Eigen::Vector3d kHaematoxylin{0.650, 0.704, 0.286};

StainProfile two_stain(const char* chromogen, Eigen::Vector3d od, double h_max, double c_max) {
  return StainProfile(StainMatrix({{"haematoxylin", kHaematoxylin}, {chromogen, od}}),
                      {h_max, c_max});
}

// Smooth random field on [0, 1].
std::vector<double> smooth_field(int w, int h, double sigma, SeededRng& rng) {
  std::vector<double> f(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (double& v : f) v = rng.uniform();
  detail::gaussian_filter_plane(f, w, h, 1, 0, sigma);
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  const double span = *hi - *lo > 0 ? *hi - *lo : 1.0;
  const double base = *lo;
  for (double& v : f) v = (v - base) / span;
  return f;
}

Image render(const StainProfile& profile, int w, int h, const std::vector<double>& ch,
             const std::vector<double>& cc) {
  ConcentrationMap c(w, h, 2);
  for (std::size_t i = 0; i < ch.size(); ++i) {
    c.pixel(i)[0] = ch[i];
    c.pixel(i)[1] = cc[i];
  }
  return reconstruct(c, profile.matrix());
}

void add_nuclei(std::vector<double>& ch, int w, int h, double cx, double cy, double radius,
                std::size_t count, SeededRng& rng) {
  for (std::size_t n = 0; n < count; ++n) {
    const double r = radius * std::sqrt(rng.uniform());
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double nx = cx + r * std::cos(t);
    const double ny = cy + r * std::sin(t);
    const double nr = rng.uniform(1.5, 3.5);
    for (int y = std::max(0, static_cast<int>(ny - nr)); y <= std::min(h - 1, static_cast<int>(ny + nr)); ++y) {
      for (int x = std::max(0, static_cast<int>(nx - nr)); x <= std::min(w - 1, static_cast<int>(nx + nr)); ++x) {
        const double d2 = (x - nx) * (x - nx) + (y - ny) * (y - ny);
        if (d2 <= nr * nr) {
          auto& v = ch[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
          v = std::max(v, 0.9);
        }
      }
    }
  }
}

}  // namespace

std::vector<Staining> stainings() {
  return {
      {"PAS", two_stain("pas", {0.175, 0.972, 0.155}, 0.9, 0.8)},
      {"Jones H&E", two_stain("silver", {0.45, 0.55, 0.70}, 0.9, 1.0)},
      {"CD68", two_stain("dab", {0.268, 0.570, 0.776}, 0.8, 0.7)},
      {"Sirius Red", two_stain("sirius", {0.09, 0.85, 0.52}, 0.7, 1.1)},
      {"CD34", two_stain("dab", {0.30, 0.52, 0.80}, 0.8, 0.6)},
  };
}

Sample glomerulus_patch(const StainProfile& profile, int size, std::uint64_t seed) {
  SeededRng rng(seed, 0);
  const int w = size;
  const int h = size;
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double radius = size * 0.22;
  SeededRng texture = rng.fork(1);
  const auto f1 = smooth_field(w, h, size / 40.0, texture);
  const auto f2 = smooth_field(w, h, size / 25.0, texture);

  std::vector<double> ch(f1.size()), cc(f1.size());
  Image mask(w, h, 1, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      const double d = std::hypot(x - cx, y - cy);
      // White lumen bands through the tissue.
      const bool lumen = f2[i] > 0.8 && d > radius * 1.3;
      if (d <= radius) {
        mask.at(x, y) = 255;
        ch[i] = 0.25 + 0.15 * f1[i];
        cc[i] = 0.55 + 0.25 * f1[i];
      } else if (!lumen) {
        ch[i] = 0.08 + 0.12 * f1[i];
        cc[i] = 0.2 + 0.4 * f2[i];
      }
    }
  }
  SeededRng nuclei = rng.fork(2);
  add_nuclei(ch, w, h, cx, cy, radius, static_cast<std::size_t>(radius * radius / 25.0), nuclei);
  add_nuclei(ch, w, h, cx, cy, size * 0.7, static_cast<std::size_t>(size / 3), nuclei);
  return {render(profile, w, h, ch, cc), std::move(mask), SampleLabel::glomerulus};
}

SyntheticSlide slide(const StainProfile& profile, int width, int height, int count, double radius,
                     std::uint64_t seed) {
  SeededRng rng(seed, 1);
  SeededRng texture = rng.fork(1);
  const auto f1 = smooth_field(width, height, 12.0, texture);
  std::vector<double> ch(f1.size(), 0.0), cc(f1.size(), 0.0);
  const int tissue_w = width * 3 / 4;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < tissue_w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
      ch[i] = 0.15 + 0.15 * f1[i];
      cc[i] = 0.3 + 0.3 * f1[i];
    }
  }
  SyntheticSlide out;
  SeededRng place = rng.fork(2);
  for (int k = 0; k < count; ++k) {
    // Keep glomeruli apart so they stay separate objects.
    double gx = 0.0, gy = 0.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      gx = place.uniform(radius + 1.0, tissue_w - radius - 1.0);
      gy = place.uniform(radius + 1.0, height - radius - 1.0);
      const bool clear = std::all_of(out.glomeruli.begin(), out.glomeruli.end(), [&](const auto& ring) {
        const double cx = (ring[0].first + ring[4].first) / 2.0, cy = (ring[2].second + ring[6].second) / 2.0;
        return std::hypot(cx - gx, cy - gy) > 2.0 * radius + 3.0;
      });
      if (clear) break;
    }
    std::vector<std::pair<double, double>> ring;
    for (int v = 0; v < 8; ++v) {
      const double t = v * std::numbers::pi / 4.0;
      ring.emplace_back(gx + radius * std::cos(t), gy + radius * std::sin(t));
    }
    out.glomeruli.push_back(std::move(ring));
    add_nuclei(ch, width, height, gx, gy, radius, static_cast<std::size_t>(radius * radius / 20.0), place);
  }
  out.image = render(profile, width, height, ch, cc);
  return out;
}

}  // namespace stainkit::synthetic
