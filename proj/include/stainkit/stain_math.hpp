#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stainkit/raster.hpp"

namespace stainkit {

/// Full transmission for 8-bit imagery.
inline constexpr double kDefaultIntensity = 255.0;

struct Stain {
  std::string name;
  Eigen::Vector3d od;  // unit norm, components >= 0
};

/// Ordered set of 2 or 3 stain colour vectors in optical-density space.
/// Construction normalises each vector and validates the set.
class StainMatrix {
 public:
  StainMatrix() = default;
  explicit StainMatrix(std::vector<Stain> stains);

  std::size_t size() const noexcept { return stains_.size(); }
  const std::vector<Stain>& stains() const noexcept { return stains_; }
  const Stain& operator[](std::size_t i) const { return stains_.at(i); }
  const Eigen::Vector3d& vector(std::size_t i) const { return stains_.at(i).od; }

  /// 3x3 solve basis: the stain columns, completed by the normalised cross
  /// product when only two stains are present.
  Eigen::Matrix3d basis() const;

  bool operator==(const StainMatrix& other) const;

 private:
  std::vector<Stain> stains_;
};

/// Reference vectors (haematoxylin, eosin, DAB) from the original colour
/// deconvolution measurements.
namespace presets {
StainMatrix haematoxylin_eosin();
StainMatrix haematoxylin_dab();
StainMatrix haematoxylin_eosin_dab();
/// Lookup by name: "he", "hdab", "hed".
StainMatrix by_name(std::string_view name);
}  // namespace presets

/// Angle between two vectors, in degrees.
double angle_degrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// --- optical density -------------------------------------------------------

/// od = -log10((v + 1) / (i0 + 1)) per channel.
ODImage rgb_to_od(const Image& image, double i0 = kDefaultIntensity);

/// v = round((i0 + 1) * 10^-od - 1), clamped to [0, 255]. Negative OD throws DomainError.
Image od_to_rgb(const ODImage& od, double i0 = kDefaultIntensity);

double intensity_to_od(double v, double i0 = kDefaultIntensity);
std::uint8_t od_to_intensity(double od, double i0 = kDefaultIntensity);

// --- deconvolution ---------------------------------------------------------

/// Precomputed inverse of a stain basis; reuse it when deconvolving many
/// images against the same matrix.
class Deconvolver {
 public:
  /// Throws SingularStainMatrix when cond(basis) > 1e6.
  explicit Deconvolver(const StainMatrix& m);

  const StainMatrix& matrix() const noexcept { return matrix_; }
  std::size_t stain_count() const noexcept { return matrix_.size(); }
  double condition_number() const noexcept { return condition_; }

  /// Unclamped coordinates of `od` in the 3x3 basis.
  Eigen::Vector3d solve(const Eigen::Vector3d& od) const { return inverse_ * od; }

  ConcentrationMap operator()(const ODImage& od) const;

 private:
  StainMatrix matrix_;
  Eigen::Matrix3d inverse_;
  double condition_ = 0.0;
};

inline constexpr double kMaxConditionNumber = 1e6;

/// Per-pixel least-squares concentrations, clamped to >= 0. For 2-stain
/// matrices the cross-product component is solved for and discarded.
ConcentrationMap deconvolve(const ODImage& od, const StainMatrix& m);

struct Deconvolution {
  ConcentrationMap concentrations;
  /// Per-pixel Euclidean norm of od - M * C (C after clamping).
  Raster<double> residual;
};

Deconvolution deconvolve_with_residual(const ODImage& od, const StainMatrix& m);

/// od' = M * C per pixel, then od_to_rgb. Throws DimensionError if the map's
/// stain count differs from the matrix.
Image reconstruct(const ConcentrationMap& c, const StainMatrix& m, double i0 = kDefaultIntensity);

/// M * C as optical density, without quantisation.
ODImage compose_od(const ConcentrationMap& c, const StainMatrix& m);

// --- stain matrix documents ------------------------------------------------

struct StainMatrixDocument {
  StainMatrix matrix;
  double i0 = kDefaultIntensity;
};

StainMatrixDocument parse_stain_matrix(std::string_view text);
std::string format_stain_matrix(const StainMatrix& m, double i0 = kDefaultIntensity);
StainMatrixDocument read_stain_matrix(const std::filesystem::path& path);
void write_stain_matrix(const std::filesystem::path& path, const StainMatrix& m,
                        double i0 = kDefaultIntensity);

/// Preset name ("he", "hdab", "hed") or path to a stain matrix document.
StainMatrix load_stain_matrix(std::string_view preset_or_path);

}  // namespace stainkit
