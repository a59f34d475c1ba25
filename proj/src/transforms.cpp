#include "stainkit/transforms.hpp"

#include <cmath>
#include <sstream>

namespace stainkit {

ChannelPermutation::ChannelPermutation(std::array<int, 3> mapping) : mapping_(mapping) {
  std::array<bool, 3> seen{};
  for (int m : mapping_) {
    if (m < 0 || m > 2 || seen[static_cast<std::size_t>(m)]) {
      throw ConfigError("channel mapping is not a permutation of (0,1,2)");
    }
    seen[static_cast<std::size_t>(m)] = true;
  }
}

std::array<ChannelPermutation, 6> ChannelPermutation::all() {
  return {ChannelPermutation({0, 1, 2}), ChannelPermutation({0, 2, 1}),
          ChannelPermutation({1, 0, 2}), ChannelPermutation({1, 2, 0}),
          ChannelPermutation({2, 0, 1}), ChannelPermutation({2, 1, 0})};
}

ChannelPermutation ChannelPermutation::random(SeededRng& rng) { return all()[rng.index(6)]; }

ChannelPermutation ChannelPermutation::parse(std::string_view text) {
  std::array<int, 3> m{};
  std::istringstream in{std::string(text)};
  char sep = 0;
  if (!(in >> m[0] >> sep >> m[1] >> sep >> m[2]) || !(in >> std::ws).eof()) {
    throw ConfigError("expected a permutation like 2,1,0, got '" + std::string(text) + "'");
  }
  return ChannelPermutation(m);
}

ChannelPermutation ChannelPermutation::inverse() const {
  std::array<int, 3> inv{};
  for (int i = 0; i < 3; ++i) inv[static_cast<std::size_t>(mapping_[static_cast<std::size_t>(i)])] = i;
  return ChannelPermutation(inv);
}

std::string ChannelPermutation::to_string() const {
  return std::to_string(mapping_[0]) + "," + std::to_string(mapping_[1]) + "," +
         std::to_string(mapping_[2]);
}

std::uint8_t greyscale_value(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  // Integer evaluation in units of 1e-4 avoids binary rounding at the ties.
  const std::uint32_t scaled = 2125u * r + 7154u * g + 721u * b;
  std::uint32_t q = scaled / 10000u;
  const std::uint32_t rem = scaled % 10000u;
  if (rem > 5000u || (rem == 5000u && (q & 1u))) ++q;
  return static_cast<std::uint8_t>(q);
}

Image to_greyscale(const Image& image) {
  require_channels(image, 3, "to_greyscale");
  Image out(image.width(), image.height(), 1);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto p = image.pixel(i);
    out.data()[i] = greyscale_value(p[0], p[1], p[2]);
  }
  return out;
}

Image grey_to_rgb(const Image& grey) {
  require_channels(grey, 1, "grey_to_rgb");
  Image out(grey.width(), grey.height(), 3);
  const std::size_t n = grey.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto p = out.pixel(i);
    p[0] = p[1] = p[2] = grey.data()[i];
  }
  return out;
}

std::uint8_t haematoxylin_level(double concentration) noexcept {
  return to_u8(255.0 * std::pow(10.0, -concentration));
}

Image extract_haematoxylin(const Image& image, const StainMatrix& m, double i0) {
  const ConcentrationMap c = deconvolve(rgb_to_od(image, i0), m);
  Image out(image.width(), image.height(), 1);
  const std::size_t n = c.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = haematoxylin_level(c.pixel(i)[0]);
  }
  return out;
}

Image channel_swap(const Image& image, const ChannelPermutation& perm) {
  require_channels(image, 3, "channel_swap");
  Image out(image.width(), image.height(), 3);
  const std::size_t n = image.pixel_count();
  const auto& m = perm.mapping();
  for (std::size_t i = 0; i < n; ++i) {
    auto src = image.pixel(i);
    auto dst = out.pixel(i);
    dst[0] = src[static_cast<std::size_t>(m[0])];
    dst[1] = src[static_cast<std::size_t>(m[1])];
    dst[2] = src[static_cast<std::size_t>(m[2])];
  }
  return out;
}

ConcentrationMap transfer_concentrations(const Image& source, const StainMatrix& source_matrix,
                                         const ConcentrationScales& source_scales,
                                         const StainProfile& target_profile, double i0) {
  if (source_matrix.size() != 2 || source_scales.scale.size() != 2 ||
      source_scales.absent.size() != 2) {
    throw DimensionError("colour transfer works on 2-stain profiles");
  }
  ConcentrationMap c = deconvolve(rgb_to_od(source, i0), source_matrix);
  std::array<double, 2> factor{};
  for (std::size_t s = 0; s < 2; ++s) {
    factor[s] = source_scales.absent[s] ? 1.0
                                        : target_profile.robust_max()[s] / source_scales.scale[s];
  }
  const std::size_t n = c.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto q = c.pixel(i);
    q[0] *= factor[0];
    q[1] *= factor[1];
  }
  return c;
}

Image colour_transfer(const Image& source, const StainMatrix& source_matrix,
                      const ConcentrationScales& source_scales, const StainProfile& target_profile,
                      double i0) {
  return reconstruct(
      transfer_concentrations(source, source_matrix, source_scales, target_profile, i0),
      target_profile.matrix(), i0);
}

Image colour_transfer(const Image& source, const StainProfile& source_profile,
                      const StainProfile& target_profile, double i0) {
  const ConcentrationScales scales{
      {source_profile.robust_max()[0], source_profile.robust_max()[1]}, {false, false}};
  return colour_transfer(source, source_profile.matrix(), scales, target_profile, i0);
}

}  // namespace stainkit
