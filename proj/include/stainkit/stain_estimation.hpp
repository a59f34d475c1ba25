#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stainkit/raster.hpp"
#include "stainkit/stain_math.hpp"

namespace stainkit {

struct MacenkoParams {
  double od_threshold = 0.15;              // OD units; pixels whose max channel is below are dropped
  double angle_percentile = 1.0;           // percent
  double concentration_percentile = 99.0;  // percent
  std::size_t min_tissue_pixels = 1000;
  double i0 = kDefaultIntensity;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// Two-stain matrix plus the robust maximum concentration of each stain.
class StainProfile {
 public:
  StainProfile() = default;
  /// Throws InvalidStainMatrix unless `matrix` has exactly 2 stains and both
  /// maxima are positive and finite.
  StainProfile(StainMatrix matrix, std::array<double, 2> robust_max);

  const StainMatrix& matrix() const noexcept { return matrix_; }
  const std::array<double, 2>& robust_max() const noexcept { return robust_max_; }

  bool operator==(const StainProfile& other) const {
    return matrix_ == other.matrix_ && robust_max_ == other.robust_max_;
  }

 private:
  StainMatrix matrix_;
  std::array<double, 2> robust_max_{1.0, 1.0};
};

/// Automatic stain-vector estimation from the principal plane of the
/// optical-density cloud.
///
/// Pixels with max-channel OD below `od_threshold` are discarded; the two
/// leading eigenvectors of the OD covariance span the stain plane; the
/// angle_percentile / (100 - angle_percentile) percentiles of the in-plane
/// angle give the two extreme stain directions. The stain with the larger
/// red OD component comes first and is labelled "haematoxylin".
///
/// The estimate depends only on the multiset of pixel colours, so it is
/// independent of pixel order, bit for bit.
///
/// Throws InsufficientTissue when fewer than min_tissue_pixels survive, and
/// DegenerateStainDistribution when the angular spread is under 1 degree.
StainProfile estimate_stain_profile(const Image& image, const MacenkoParams& params = {});

/// Robust per-stain maximum (concentration_percentile) of the concentrations
/// of the pixels that pass the OD threshold. Throws InsufficientTissue when
/// no pixel passes.
std::vector<double> tissue_concentration_max(const Image& image, const StainMatrix& m,
                                             const MacenkoParams& params = {});

struct ConcentrationScales {
  std::vector<double> scale;
  std::vector<bool> absent;  // true where the stain never appears; scale is then 1
};

/// Per-stain `percentile` of the concentration values. Throws EmptyInput on an empty map.
ConcentrationScales concentration_scales(const ConcentrationMap& c, double percentile);

/// Percentile with linear interpolation between order statistics
/// (rank = p/100 * (n - 1)). Throws EmptyInput for an empty span.
double percentile(std::span<const double> values, double p);

// --- profile documents -----------------------------------------------------
// Stain matrix document with an added "robust_max": [a, b].

StainProfile parse_stain_profile(std::string_view text);
std::string format_stain_profile(const StainProfile& profile, double i0 = kDefaultIntensity);
StainProfile read_stain_profile(const std::filesystem::path& path);
void write_stain_profile(const std::filesystem::path& path, const StainProfile& profile,
                         double i0 = kDefaultIntensity);

}  // namespace stainkit
