#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stainkit/raster.hpp"
#include "stainkit/rng.hpp"
#include "stainkit/stain_estimation.hpp"
#include "stainkit/stain_math.hpp"
#include "stainkit/transforms.hpp"

namespace stainkit {

enum class SampleLabel { glomerulus, tissue };

std::string_view to_string(SampleLabel label);
SampleLabel parse_sample_label(std::string_view text);

/// Image with its binary object mask ({0, 255}, one channel, same size).
struct Sample {
  Image image;
  Image mask;
  SampleLabel label = SampleLabel::tissue;

  /// Sample with an all-zero mask.
  static Sample with_empty_mask(Image image, SampleLabel label = SampleLabel::tissue);

  /// Throws DimensionError / DomainError when the mask does not fit the contract.
  void validate() const;

  bool operator==(const Sample&) const = default;
};

struct Range {
  double low = 0.0;
  double high = 0.0;
  bool operator==(const Range&) const = default;
};

struct ElasticParams {
  double sigma = 10.0;   // smoothing std, pixels
  double alpha = 100.0;  // peak displacement, pixels
  void validate() const;
};

enum class Strategy { rgb, greyscale, haematoxylin, channel_swap, colour_transfer };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

/// Independent firing probability of each gated step.
struct StepProbabilities {
  double affine = 0.5;
  double noise = 0.5;
  double blur = 0.5;
  double brightness = 0.5;
  double colour = 0.5;
  double contrast = 0.5;
  double stain = 0.5;
};

/// Stain profiles sampled from one staining.
struct StainingPool {
  std::string name;
  std::vector<StainProfile> profiles;
};

struct ColourTransferConfig {
  /// All N stainings, the source included.
  std::vector<StainingPool> stainings;
  std::size_t source_index = 0;
  /// Fixed source profile; when empty the profile is estimated per sample.
  std::optional<StainProfile> source_profile;
  MacenkoParams macenko;
};

struct AugmentationConfig {
  StepProbabilities probability;

  Range rotation_deg{0.0, 180.0};
  Range shift_px{-205.0, 205.0};
  Range zoom{0.8, 1.2};
  bool horizontal_flip = true;
  bool vertical_flip = true;
  double flip_probability = 0.5;

  Range noise_sigma{0.0, 2.55};  // on the 0-255 scale
  Range blur_sigma{0.0, 1.0};
  Range brightness{0.9, 1.1};
  Range colour{0.9, 1.1};
  Range contrast{0.9, 1.1};

  Range stain_alpha{-0.25, 0.25};
  Range stain_beta{-0.05, 0.05};
  StainMatrix stain_matrix = presets::haematoxylin_eosin();

  ElasticParams elastic;
  bool elastic_always = true;
  double elastic_probability = 0.5;  // used only when elastic_always is false

  Strategy strategy = Strategy::rgb;
  StainMatrix haematoxylin_matrix = presets::haematoxylin_eosin();
  ColourTransferConfig colour_transfer;

  /// Every gate closed, no elastic displacement, rgb strategy.
  static AugmentationConfig disabled();

  /// Throws ConfigError on out-of-range probabilities, unordered ranges, or
  /// a colour_transfer strategy without stainings.
  void validate() const;
};

/// Parses the JSON config document. Profile and stain-matrix entries may be
/// inline objects, preset names, or paths relative to `base_dir`.
AugmentationConfig parse_augmentation_config(std::string_view text,
                                             const std::filesystem::path& base_dir = {});
AugmentationConfig read_augmentation_config(const std::filesystem::path& path);
/// Canonical document of the effective config (all fields, profiles inlined).
std::string format_augmentation_config(const AugmentationConfig& cfg);

// --- geometric -------------------------------------------------------------

struct AffineParams {
  double rotation_deg = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
  double zoom = 1.0;
  bool flip_horizontal = false;
  bool flip_vertical = false;
};

AffineParams draw_affine(const AugmentationConfig& cfg, SeededRng& rng);

/// Rotation/zoom about the image centre, then shift. Image resampled
/// bilinearly, mask nearest-neighbour, reflection outside the borders.
Sample apply_affine(const Sample& sample, const AffineParams& params);
Sample affine_augment(const Sample& sample, const AugmentationConfig& cfg, SeededRng& rng);

/// Random displacement field: per-pixel U[-1,1] in x and y, Gaussian-smoothed
/// with std sigma, scaled so the largest displacement is exactly alpha.
Sample elastic_deform(const Sample& sample, const ElasticParams& params, SeededRng& rng);

// --- photometric -----------------------------------------------------------

enum class PixelOp { noise, blur, brightness, colour, contrast };

PixelOp parse_pixel_op(std::string_view text);
std::string_view to_string(PixelOp op);

/// noise: v + N(0, m^2); blur: Gaussian of std m; brightness: m*v;
/// colour: g + m(v - g) with g the pixel's grey value; contrast: mu + m(v - mu)
/// with mu the mean grey. Results rounded half-to-even and clamped.
Image pixel_augment(const Image& image, PixelOp op, double magnitude, SeededRng& rng);

Image add_gaussian_noise(const Image& image, double sigma, SeededRng& rng);
Image gaussian_blur(const Image& image, double sigma);
Image enhance_brightness(const Image& image, double factor);
Image enhance_colour(const Image& image, double factor);
Image enhance_contrast(const Image& image, double factor);

/// Per-stain concentration perturbation C' = (1 + alpha) C + beta.
struct StainPerturbation {
  std::vector<double> alpha;
  std::vector<double> beta;
};

Image stain_variation(const Image& image, const StainMatrix& m, const StainPerturbation& p,
                      double i0 = kDefaultIntensity);
Image stain_variation(const Image& image, const StainMatrix& m, Range alpha_range,
                      Range beta_range, SeededRng& rng, double i0 = kDefaultIntensity);

// --- pipeline --------------------------------------------------------------

/// Which steps fired for one sample.
struct AugmentationTrace {
  bool elastic = false;
  bool affine = false;
  bool noise = false;
  bool blur = false;
  bool brightness = false;
  bool colour = false;
  bool contrast = false;
  bool stain = false;
  std::optional<ChannelPermutation> permutation;
  std::optional<std::size_t> staining;  // colour_transfer pick, source included
  bool transferred = false;
  std::string skipped_reason;  // set when a transfer was picked but not applied
};

/// Full pipeline, in fixed order: elastic, affine, noise, blur, brightness,
/// colour, contrast, stain variation, then the strategy step. Geometric steps
/// move image and mask together; every other step leaves the mask alone.
/// Each step draws from its own fork of `rng`, so toggling one step never
/// changes the draws of another.
Sample augment_sample(const Sample& sample, const AugmentationConfig& cfg, const SeededRng& rng,
                      AugmentationTrace* trace = nullptr);

/// Same, with the per-sample substream (seed, index).
Sample augment_sample(const Sample& sample, const AugmentationConfig& cfg, std::uint64_t seed,
                      std::uint64_t index, AugmentationTrace* trace = nullptr);

/// x = (v / 255 - mean) / std per channel. `mean` and `std` hold one value
/// per channel or a single value for all; std <= 0 throws ConfigError.
FloatImage standardize(const Image& image, std::span<const double> mean,
                       std::span<const double> std);

}  // namespace stainkit
