#include "stainkit/tissue_patching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "components.hpp"
#include "filtering.hpp"
#include "json.hpp"
#include "stainkit/image_io.hpp"
#include "stainkit/transforms.hpp"
#include "text_io.hpp"

namespace stainkit {

namespace {

// x positions where `polygon` crosses the horizontal line at y (half-open edges).
void row_crossings(const Polygon& polygon, double y, std::vector<double>& out) {
  out.clear();
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
      out.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
  }
  std::sort(out.begin(), out.end());
}

bool inside_sorted(const std::vector<double>& crossings, double x) {
  const auto right = crossings.end() - std::upper_bound(crossings.begin(), crossings.end(), x);
  return (right & 1) != 0;
}

bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
  return a.min_x <= b.max_x && b.min_x <= a.max_x && a.min_y <= b.max_y && b.min_y <= a.max_y;
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
         (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

// Mask of every annotation over a window whose pixels map, by reflection,
// to slide coordinates.
Image window_mask(const AnnotationSet& annotations, int slide_w, int slide_h, int origin_x,
                  int origin_y, int size) {
  Image mask(size, size, 1, 0);
  std::vector<int> xs(static_cast<std::size_t>(size)), ys(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    xs[static_cast<std::size_t>(i)] = detail::reflect_index(origin_x + i, slide_w);
    ys[static_cast<std::size_t>(i)] = detail::reflect_index(origin_y + i, slide_h);
  }
  const auto [min_x, max_x] = std::minmax_element(xs.begin(), xs.end());
  const auto [min_y, max_y] = std::minmax_element(ys.begin(), ys.end());
  const BoundingBox window{static_cast<double>(*min_x), static_cast<double>(*min_y),
                           static_cast<double>(*max_x), static_cast<double>(*max_y)};

  std::vector<const Polygon*> candidates;
  for (const auto& object : annotations.objects) {
    if (boxes_overlap(bounds(object.polygon), window)) candidates.push_back(&object.polygon);
  }
  if (candidates.empty()) return mask;

  std::vector<double> crossings;
  for (int j = 0; j < size; ++j) {
    const double y = ys[static_cast<std::size_t>(j)];
    for (const Polygon* polygon : candidates) {
      row_crossings(*polygon, y, crossings);
      if (crossings.empty()) continue;
      for (int i = 0; i < size; ++i) {
        if (inside_sorted(crossings, xs[static_cast<std::size_t>(i)])) mask.at(i, j) = 255;
      }
    }
  }
  return mask;
}

bool inside_any(const AnnotationSet& annotations, double x, double y) {
  for (const auto& object : annotations.objects) {
    const BoundingBox b = bounds(object.polygon);
    if (x < b.min_x || x > b.max_x || y < b.min_y || y > b.max_y) continue;
    if (contains(object.polygon, x, y)) return true;
  }
  return false;
}

// Outer boundary loops of one 4-connected region, traced along pixel edges
// with the region on the right-hand side.
std::vector<Polygon> trace_region(const std::vector<std::int32_t>& labels, std::int32_t label,
                                  int width, int height) {
  constexpr std::array<int, 4> dx{1, 0, -1, 0};  // E S W N
  constexpr std::array<int, 4> dy{0, 1, 0, -1};
  const auto w = static_cast<std::size_t>(width);
  auto in = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < width && y < height &&
           labels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] == label;
  };
  auto key = [&](int cx, int cy) {
    return static_cast<std::uint64_t>(cy) * (w + 1) + static_cast<std::uint64_t>(cx);
  };

  // Outgoing boundary edges per corner; bit d set = edge leaving in direction d.
  std::unordered_map<std::uint64_t, std::uint8_t> out_edges;
  std::vector<std::pair<int, int>> starts;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!in(x, y)) continue;
      if (!in(x, y - 1)) { out_edges[key(x, y)] |= 1u << 0; starts.emplace_back(x, y); }
      if (!in(x + 1, y)) out_edges[key(x + 1, y)] |= 1u << 1;
      if (!in(x, y + 1)) out_edges[key(x + 1, y + 1)] |= 1u << 2;
      if (!in(x - 1, y)) out_edges[key(x, y + 1)] |= 1u << 3;
    }
  }

  std::vector<Polygon> loops;
  for (const auto& [sx, sy] : starts) {
    if (!(out_edges[key(sx, sy)] & 1u)) continue;  // already walked
    Polygon ring;
    int cx = sx, cy = sy, dir = 0;
    int prev_dir = -1;
    while (true) {
      auto& edges = out_edges[key(cx, cy)];
      // Prefer right turn, then straight, then left; keeps the walk tight
      // around the region at diagonal pinch corners.
      int chosen = -1;
      if (prev_dir < 0) {
        chosen = 0;
      } else {
        for (int turn : {1, 0, 3}) {
          const int d = (prev_dir + turn) % 4;
          if (edges & (1u << d)) { chosen = d; break; }
        }
      }
      if (chosen < 0 || !(edges & (1u << chosen))) break;
      edges = static_cast<std::uint8_t>(edges & ~(1u << chosen));
      if (chosen != prev_dir) ring.push_back({cx - 0.5, cy - 0.5});
      dir = chosen;
      cx += dx[static_cast<std::size_t>(dir)];
      cy += dy[static_cast<std::size_t>(dir)];
      prev_dir = dir;
      if (cx == sx && cy == sy) break;
    }
    // Drop a leading vertex that is collinear with the closing edge.
    if (ring.size() >= 3 && prev_dir == 0) ring.erase(ring.begin());
    if (ring.size() >= 3 && signed_area(ring) > 0.0) loops.push_back(std::move(ring));
  }
  return loops;
}

}  // namespace

// --- geometry --------------------------------------------------------------

double signed_area(const Polygon& polygon) {
  double acc = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return acc / 2.0;
}

Point centroid(const Polygon& polygon) {
  const double area = signed_area(polygon);
  const std::size_t n = polygon.size();
  if (n == 0) return {};
  if (std::abs(area) < 1e-12) {
    Point mean;
    for (const Point& p : polygon) {
      mean.x += p.x;
      mean.y += p.y;
    }
    return {mean.x / static_cast<double>(n), mean.y / static_cast<double>(n)};
  }
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    const double f = a.x * b.y - b.x * a.y;
    cx += (a.x + b.x) * f;
    cy += (a.y + b.y) * f;
  }
  return {cx / (6.0 * area), cy / (6.0 * area)};
}

BoundingBox bounds(const Polygon& polygon) {
  if (polygon.empty()) return {};
  BoundingBox b{polygon[0].x, polygon[0].y, polygon[0].x, polygon[0].y};
  for (const Point& p : polygon) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

bool contains(const Polygon& polygon, double x, double y) {
  std::vector<double> crossings;
  row_crossings(polygon, y, crossings);
  return inside_sorted(crossings, x);
}

bool is_simple(const Polygon& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_touch(a, b, polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

void validate_annotations(const AnnotationSet& annotations, int width, int height) {
  for (const auto& object : annotations.objects) {
    const std::string tag = "object " + std::to_string(object.id);
    if (object.polygon.size() < 3) throw InvalidAnnotation(tag + " has fewer than 3 vertices");
    for (const Point& p : object.polygon) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidAnnotation(tag + " has a non-finite vertex");
      if (p.x < -0.5 || p.y < -0.5 || p.x > width + 0.5 || p.y > height + 0.5) {
        throw InvalidAnnotation(tag + " lies outside the slide");
      }
    }
  }
}

// --- documents -------------------------------------------------------------

AnnotationSet parse_annotations(std::string_view text) {
  AnnotationSet out;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& o : doc.at("objects")) {
      AnnotatedObject object;
      object.id = o.value("id", static_cast<int>(out.objects.size()));
      for (const auto& v : o.at("polygon")) {
        if (!v.is_array() || v.size() != 2) throw InvalidAnnotation("vertices must be [x, y] pairs");
        object.polygon.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      if (!is_simple(object.polygon)) {
        throw InvalidAnnotation("object " + std::to_string(object.id) + " is not a simple polygon");
      }
      out.objects.push_back(std::move(object));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("annotation document: ") + e.what());
  }
  return out;
}

std::string format_annotations(const AnnotationSet& annotations) {
  nlohmann::ordered_json doc;
  doc["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : annotations.objects) {
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (const Point& p : o.polygon) ring.push_back({p.x, p.y});
    doc["objects"].push_back({{"id", o.id}, {"polygon", ring}});
  }
  return doc.dump(2) + "\n";
}

AnnotationSet read_annotations(const std::filesystem::path& path) {
  if (is_image_path(path)) {
    Image raster = read_image(path);
    if (raster.channels() != 1) raster = to_greyscale(raster);
    return annotations_from_label_raster(raster);
  }
  return parse_annotations(detail::read_text_file(path));
}

AnnotationSet annotations_from_label_raster(const Image& labels) {
  require_channels(labels, 1, "annotations_from_label_raster");
  AnnotationSet out;
  const int w = labels.width();
  const int h = labels.height();
  std::array<bool, 256> present{};
  for (std::uint8_t v : labels.data()) present[v] = true;
  std::vector<std::uint8_t> binary(labels.pixel_count());
  for (int value = 1; value < 256; ++value) {
    if (!present[static_cast<std::size_t>(value)]) continue;
    for (std::size_t i = 0; i < binary.size(); ++i) binary[i] = labels.data()[i] == value;
    const detail::Components comps = detail::label_components(binary, w, h, 4);
    for (std::int32_t c = 1; c <= comps.count; ++c) {
      for (Polygon& ring : trace_region(comps.labels, c, w, h)) {
        out.objects.push_back({value, std::move(ring)});
      }
    }
  }
  return out;
}

Image rasterize(const Polygon& polygon, int width, int height) {
  AnnotationSet single;
  single.objects.push_back({0, polygon});
  return rasterize(single, width, height);
}

Image rasterize(const AnnotationSet& annotations, int width, int height) {
  Image mask(width, height, 1, 0);
  std::vector<double> crossings;
  for (const auto& object : annotations.objects) {
    const BoundingBox b = bounds(object.polygon);
    const int y0 = std::max(0, static_cast<int>(std::floor(b.min_y)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(b.max_y)));
    const int x0 = std::max(0, static_cast<int>(std::floor(b.min_x)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(b.max_x)));
    for (int y = y0; y <= y1; ++y) {
      row_crossings(object.polygon, y, crossings);
      if (crossings.empty()) continue;
      for (int x = x0; x <= x1; ++x) {
        if (inside_sorted(crossings, x)) mask.at(x, y) = 255;
      }
    }
  }
  return mask;
}

// --- tissue mask -----------------------------------------------------------

TissueMask::TissueMask(int width, int height)
    : width_(width), height_(height),
      cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

TissueMask TissueMask::from_image(const Image& image) {
  require_channels(image, 1, "TissueMask::from_image");
  TissueMask mask(image.width(), image.height());
  for (std::size_t i = 0; i < mask.cells_.size(); ++i) mask.cells_[i] = image.data()[i] ? 1 : 0;
  return mask;
}

std::size_t TissueMask::tissue_count() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

Image TissueMask::to_image() const {
  Image out(width_, height_, 1);
  for (std::size_t i = 0; i < cells_.size(); ++i) out.data()[i] = cells_[i] ? 255 : 0;
  return out;
}

TissueMask tissue_mask(const Image& image, std::size_t min_object_px, bool fill_holes) {
  require_channels(image, 3, "tissue_mask");
  const Image grey = to_greyscale(image);
  const auto values = grey.data();
  if (values.empty()) throw DegenerateImage("empty image");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) throw DegenerateImage("constant image has no tissue/background contrast");

  std::uint64_t sum = 0;
  for (std::uint8_t v : values) sum += v;
  const double mean = static_cast<double>(sum) / static_cast<double>(values.size());

  const int w = image.width();
  const int h = image.height();
  TissueMask mask(w, h);
  auto& cells = mask.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = values[i] < mean ? 1 : 0;

  const detail::Components objects = detail::label_components(cells, w, h, 8);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::int32_t label = objects.labels[i];
    if (label && objects.sizes[static_cast<std::size_t>(label - 1)] < min_object_px) cells[i] = 0;
  }

  if (fill_holes) {
    // Background regions (4-connected, dual to 8-connected tissue) that do
    // not reach the border are holes.
    std::vector<std::uint8_t> background(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) background[i] = cells[i] ? 0 : 1;
    const detail::Components regions = detail::label_components(background, w, h, 4);
    std::vector<bool> touches_border(static_cast<std::size_t>(regions.count) + 1, false);
    for (int x = 0; x < w; ++x) {
      touches_border[static_cast<std::size_t>(regions.labels[static_cast<std::size_t>(x)])] = true;
      touches_border[static_cast<std::size_t>(
          regions.labels[static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(w) +
                         static_cast<std::size_t>(x)])] = true;
    }
    for (int y = 0; y < h; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
      touches_border[static_cast<std::size_t>(regions.labels[row])] = true;
      touches_border[static_cast<std::size_t>(regions.labels[row + static_cast<std::size_t>(w - 1)])] = true;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::int32_t label = regions.labels[i];
      if (label && !touches_border[static_cast<std::size_t>(label)]) cells[i] = 1;
    }
  }
  return mask;
}

// --- patches ---------------------------------------------------------------

Image crop_reflect(const Image& slide, int origin_x, int origin_y, int size) {
  if (size <= 0) throw ConfigError("patch size must be positive");
  if (slide.width() == 0 || slide.height() == 0) throw DimensionError("empty slide");
  Image out(size, size, slide.channels());
  for (int j = 0; j < size; ++j) {
    const int sy = detail::reflect_index(origin_y + j, slide.height());
    for (int i = 0; i < size; ++i) {
      const int sx = detail::reflect_index(origin_x + i, slide.width());
      for (int c = 0; c < slide.channels(); ++c) out.at(i, j, c) = slide.at(sx, sy, c);
    }
  }
  return out;
}

int window_origin(double centre, int size) {
  return static_cast<int>(std::floor(centre + 0.5)) - size / 2;
}

std::vector<Patch> extract_glomerulus_patches(const Image& slide, const AnnotationSet& annotations,
                                              int size) {
  if (size <= 0) throw ConfigError("patch size must be positive");
  validate_annotations(annotations, slide.width(), slide.height());
  std::vector<Patch> out;
  out.reserve(annotations.objects.size());
  for (const auto& object : annotations.objects) {
    const Point c = centroid(object.polygon);
    const int ox = window_origin(c.x, size);
    const int oy = window_origin(c.y, size);
    Patch patch;
    patch.sample = Sample{crop_reflect(slide, ox, oy, size),
                          window_mask(annotations, slide.width(), slide.height(), ox, oy, size),
                          SampleLabel::glomerulus};
    patch.origin_x = ox;
    patch.origin_y = oy;
    patch.object_id = object.id;
    out.push_back(std::move(patch));
  }
  return out;
}

std::vector<Patch> sample_tissue_patches(const Image& slide, const TissueMask& mask,
                                         const AnnotationSet& annotations, std::size_t n, int size,
                                         SeededRng& rng, const TissueSamplingOptions& options) {
  if (size <= 0) throw ConfigError("patch size must be positive");
  if (mask.width() != slide.width() || mask.height() != slide.height()) {
    throw DimensionError("tissue mask and slide dimensions differ");
  }
  validate_annotations(annotations, slide.width(), slide.height());
  std::vector<Patch> out;
  if (n == 0) return out;

  std::vector<std::size_t> tissue;
  const auto& cells = mask.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i]) tissue.push_back(i);
  }
  if (tissue.empty()) throw InsufficientTissueArea("tissue mask is empty");

  const std::size_t budget = options.draws_per_patch * n;
  const auto w = static_cast<std::size_t>(slide.width());
  std::size_t draws = 0;
  while (out.size() < n) {
    if (draws++ >= budget) {
      throw InsufficientTissueArea("found " + std::to_string(out.size()) + " of " +
                                   std::to_string(n) + " tissue patches in " +
                                   std::to_string(budget) + " draws");
    }
    const std::size_t pick = tissue[rng.index(tissue.size())];
    const int x = static_cast<int>(pick % w);
    const int y = static_cast<int>(pick / w);
    if (inside_any(annotations, x, y)) continue;
    const int ox = x - size / 2;
    const int oy = y - size / 2;
    if (options.exclude_overlap) {
      const Image m = window_mask(annotations, slide.width(), slide.height(), ox, oy, size);
      if (std::any_of(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; })) {
        continue;
      }
    }
    Patch patch;
    patch.sample = Sample::with_empty_mask(crop_reflect(slide, ox, oy, size), SampleLabel::tissue);
    patch.origin_x = ox;
    patch.origin_y = oy;
    out.push_back(std::move(patch));
  }
  return out;
}

// --- dataset statistics ----------------------------------------------------

DatasetStats dataset_stats(std::span<const Image> patches) {
  if (patches.empty()) throw EmptyInput("no patches");
  const int channels = patches.front().channels();
  // Integer histograms make the result independent of patch order.
  std::vector<std::array<std::uint64_t, 256>> hist(static_cast<std::size_t>(channels));
  for (auto& h : hist) h.fill(0);
  std::uint64_t pixels = 0;
  for (const Image& patch : patches) {
    if (patch.channels() != channels) throw DimensionError("patches have different channel counts");
    const std::size_t n = patch.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
      auto p = patch.pixel(i);
      for (std::size_t c = 0; c < p.size(); ++c) ++hist[c][p[c]];
    }
    pixels += n;
  }
  if (pixels == 0) throw EmptyInput("patches contain no pixels");

  DatasetStats stats;
  for (const auto& h : hist) {
    std::uint64_t sum = 0;
    for (std::size_t v = 0; v < 256; ++v) sum += v * h[v];
    const double mean = static_cast<double>(sum) / (255.0 * static_cast<double>(pixels));
    double var = 0.0;
    for (std::size_t v = 0; v < 256; ++v) {
      const double d = static_cast<double>(v) / 255.0 - mean;
      var += static_cast<double>(h[v]) * d * d;
    }
    var /= static_cast<double>(pixels);
    if (!(var > 0.0)) {
      throw DegenerateImage("a channel has zero variance (mean " + std::to_string(mean) + ")");
    }
    stats.mean.push_back(mean);
    stats.std.push_back(std::sqrt(var));
  }
  return stats;
}

std::string format_dataset_stats(const DatasetStats& stats) {
  nlohmann::ordered_json doc;
  doc["mean"] = stats.mean;
  doc["std"] = stats.std;
  return doc.dump(2) + "\n";
}

DatasetStats parse_dataset_stats(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    DatasetStats stats{doc.at("mean").get<std::vector<double>>(),
                       doc.at("std").get<std::vector<double>>()};
    if (stats.mean.size() != stats.std.size() || stats.mean.empty()) {
      throw ParseError("mean and std must be non-empty and equally long");
    }
    return stats;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset stats document: ") + e.what());
  }
}

}  // namespace stainkit
