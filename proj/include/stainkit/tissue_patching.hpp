#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stainkit/augmentation.hpp"
#include "stainkit/raster.hpp"
#include "stainkit/rng.hpp"

namespace stainkit {

// Pixel (x, y) is the unit square centred on the integer point (x, y).

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Closed ring; the last vertex connects back to the first.
using Polygon = std::vector<Point>;

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

double signed_area(const Polygon& polygon);
/// Area centroid; falls back to the vertex mean for zero-area rings.
Point centroid(const Polygon& polygon);
BoundingBox bounds(const Polygon& polygon);
/// Even-odd test with half-open edges, the same rule used for rasterisation.
bool contains(const Polygon& polygon, double x, double y);
/// True when no two non-adjacent edges touch or cross.
bool is_simple(const Polygon& polygon);

struct AnnotatedObject {
  int id = 0;
  Polygon polygon;
};

struct AnnotationSet {
  std::vector<AnnotatedObject> objects;
};

/// Throws InvalidAnnotation for rings with < 3 vertices, non-finite
/// coordinates, or vertices outside [-0.5, width + 0.5] x [-0.5, height + 0.5].
void validate_annotations(const AnnotationSet& annotations, int width, int height);

/// {"objects": [{"id": int, "polygon": [[x, y], ...]}]}. Rings must be simple.
AnnotationSet parse_annotations(std::string_view text);
std::string format_annotations(const AnnotationSet& annotations);
/// Reads a .json polygon document, or a labelled-object raster (.png/.tif)
/// where each non-zero grey level is one object.
AnnotationSet read_annotations(const std::filesystem::path& path);

/// Traces the outer pixel-edge boundary of every 4-connected region of each
/// non-zero label; id = label. Rasterising the result reproduces each region
/// with its holes filled.
AnnotationSet annotations_from_label_raster(const Image& labels);

/// {0, 255} mask of all objects.
Image rasterize(const AnnotationSet& annotations, int width, int height);
/// Mask of a single polygon.
Image rasterize(const Polygon& polygon, int width, int height);

// --- tissue mask -----------------------------------------------------------

/// Binary tissue / background raster.
class TissueMask {
 public:
  TissueMask() = default;
  TissueMask(int width, int height);
  /// Non-zero pixels of a 1-channel image are tissue.
  static TissueMask from_image(const Image& image);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool tissue(int x, int y) const noexcept { return cells_[index(x, y)] != 0; }
  void set(int x, int y, bool v) noexcept { cells_[index(x, y)] = v ? 1 : 0; }
  std::size_t tissue_count() const noexcept;
  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }
  std::vector<std::uint8_t>& cells() noexcept { return cells_; }

  /// {0, 255} single-channel image.
  Image to_image() const;

  bool operator==(const TissueMask&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

inline constexpr std::size_t kDefaultMinObjectPx = 500;

/// Tissue = greyscale darker than the image's mean grey; 8-connected
/// components under min_object_px are dropped, then enclosed background
/// holes are filled. Throws DegenerateImage for a constant image.
TissueMask tissue_mask(const Image& image, std::size_t min_object_px = kDefaultMinObjectPx,
                       bool fill_holes = true);

// --- patches ---------------------------------------------------------------

inline constexpr int kDefaultPatchSize = 508;

struct Patch {
  Sample sample;
  int origin_x = 0;  // slide coordinate of the patch's top-left pixel
  int origin_y = 0;
  int object_id = -1;  // annotation id for glomerulus patches
};

/// size x size crop; pixels outside the slide are filled by reflection.
Image crop_reflect(const Image& slide, int origin_x, int origin_y, int size);

/// Patch window origin for a centre point: round(c) - size / 2.
int window_origin(double centre, int size);

/// One glomerulus-labelled patch per annotation, centred on its centroid,
/// with a mask of every annotation inside the window.
std::vector<Patch> extract_glomerulus_patches(const Image& slide, const AnnotationSet& annotations,
                                              int size = kDefaultPatchSize);

struct TissueSamplingOptions {
  /// Reject windows that overlap any annotation, not just centres inside one.
  bool exclude_overlap = false;
  /// Draw budget per requested patch.
  std::size_t draws_per_patch = 1000;
};

/// n tissue-labelled patches with all-zero masks, centres uniform over the
/// tissue pixels outside every annotation. Throws InsufficientTissueArea when
/// the draw budget runs out.
std::vector<Patch> sample_tissue_patches(const Image& slide, const TissueMask& mask,
                                         const AnnotationSet& annotations, std::size_t n, int size,
                                         SeededRng& rng, const TissueSamplingOptions& options = {});

// --- dataset statistics ----------------------------------------------------

struct DatasetStats {
  std::vector<double> mean;  // per channel, on [0, 1]
  std::vector<double> std;   // population std, per channel
};

/// Throws EmptyInput for no patches, DimensionError for mixed channel counts,
/// DegenerateImage if a channel has zero variance.
DatasetStats dataset_stats(std::span<const Image> patches);

std::string format_dataset_stats(const DatasetStats& stats);
DatasetStats parse_dataset_stats(std::string_view text);

}  // namespace stainkit
