#pragma once

#include <array>
#include <string>
#include <string_view>

#include "stainkit/raster.hpp"
#include "stainkit/rng.hpp"
#include "stainkit/stain_estimation.hpp"
#include "stainkit/stain_math.hpp"

namespace stainkit {

/// Bijection on {0, 1, 2}; output channel i takes input channel mapping[i].
class ChannelPermutation {
 public:
  ChannelPermutation() = default;
  /// Throws ConfigError if `mapping` is not a permutation.
  explicit ChannelPermutation(std::array<int, 3> mapping);

  static ChannelPermutation identity() { return {}; }
  /// All six permutations in lexicographic order.
  static std::array<ChannelPermutation, 6> all();
  static ChannelPermutation random(SeededRng& rng);
  /// Parses "2,1,0".
  static ChannelPermutation parse(std::string_view text);

  const std::array<int, 3>& mapping() const noexcept { return mapping_; }
  int operator[](int i) const { return mapping_.at(static_cast<std::size_t>(i)); }
  ChannelPermutation inverse() const;
  std::string to_string() const;

  bool operator==(const ChannelPermutation&) const = default;

 private:
  std::array<int, 3> mapping_{0, 1, 2};
};

/// grey = round_half_even(0.2125 R + 0.7154 G + 0.0721 B), evaluated exactly.
std::uint8_t greyscale_value(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// 3-channel to 1-channel luminance. Throws ChannelCountError otherwise.
Image to_greyscale(const Image& image);

/// Replicates a 1-channel image into 3 identical channels.
Image grey_to_rgb(const Image& grey);

/// round_half_even(255 * 10^-c), clamped.
std::uint8_t haematoxylin_level(double concentration) noexcept;

/// Deconvolves with `m` and maps the stain-0 concentration c to
/// round(255 * 10^-c), so unstained pixels stay white.
Image extract_haematoxylin(const Image& image, const StainMatrix& m = presets::haematoxylin_eosin(),
                           double i0 = kDefaultIntensity);

Image channel_swap(const Image& image, const ChannelPermutation& perm);

/// Re-expresses the source concentrations in the target stain vectors,
/// rescaled per stain by target.robust_max / source.robust_max.
Image colour_transfer(const Image& source, const StainProfile& source_profile,
                      const StainProfile& target_profile, double i0 = kDefaultIntensity);

/// Variant with caller-supplied source scales (e.g. from concentration_scales
/// of the patch itself); stains flagged absent are not rescaled.
Image colour_transfer(const Image& source, const StainMatrix& source_matrix,
                      const ConcentrationScales& source_scales, const StainProfile& target_profile,
                      double i0 = kDefaultIntensity);

/// The scaled concentration map colour_transfer reconstructs from.
ConcentrationMap transfer_concentrations(const Image& source, const StainMatrix& source_matrix,
                                         const ConcentrationScales& source_scales,
                                         const StainProfile& target_profile,
                                         double i0 = kDefaultIntensity);

}  // namespace stainkit
