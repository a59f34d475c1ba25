#include "stainkit/stain_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "text_io.hpp"

namespace stainkit {

namespace {

constexpr double kMinAngularSpreadDeg = 1.0;
constexpr double kTinyComponent = 1e-8;

struct ColourCount {
  std::uint32_t key;
  std::uint64_t count;
  Eigen::Vector3d od;
};

struct TissueColours {
  std::vector<ColourCount> colours;  // sorted by key
  std::uint64_t total = 0;
};

// Distinct colours of the pixels that pass the OD threshold, in key order.
TissueColours collect_tissue_colours(const Image& image, const MacenkoParams& params) {
  require_channels(image, 3, "stain estimation");
  std::unordered_map<std::uint32_t, std::uint64_t> histogram;
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto p = image.pixel(i);
    const std::uint32_t key = (std::uint32_t{p[0]} << 16) | (std::uint32_t{p[1]} << 8) | p[2];
    ++histogram[key];
  }
  std::vector<std::uint32_t> keys;
  keys.reserve(histogram.size());
  for (const auto& [key, count] : histogram) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  TissueColours out;
  for (std::uint32_t key : keys) {
    const Eigen::Vector3d od(intensity_to_od((key >> 16) & 0xff, params.i0),
                             intensity_to_od((key >> 8) & 0xff, params.i0),
                             intensity_to_od(key & 0xff, params.i0));
    if (od.maxCoeff() < params.od_threshold) continue;
    const std::uint64_t count = histogram[key];
    out.colours.push_back({key, count, od.cwiseMax(0.0)});
    out.total += count;
  }
  return out;
}

// Linear-interpolation percentile over (value, count) pairs sorted by value.
double weighted_percentile(const std::vector<std::pair<double, std::uint64_t>>& sorted,
                           std::uint64_t total, double p) {
  const double rank = p / 100.0 * static_cast<double>(total - 1);
  const auto lower = static_cast<std::uint64_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lower);
  auto order_statistic = [&](std::uint64_t k) {
    std::uint64_t seen = 0;
    for (const auto& [value, count] : sorted) {
      seen += count;
      if (k < seen) return value;
    }
    return sorted.back().first;
  };
  const double a = order_statistic(lower);
  if (frac == 0.0) return a;
  const double b = order_statistic(std::min(lower + 1, total - 1));
  return a + frac * (b - a);
}

std::vector<double> weighted_concentration_max(const TissueColours& tissue, const StainMatrix& m,
                                               double p) {
  const Deconvolver solver(m);
  std::vector<double> out;
  for (std::size_t s = 0; s < m.size(); ++s) {
    std::vector<std::pair<double, std::uint64_t>> values;
    values.reserve(tissue.colours.size());
    for (const auto& c : tissue.colours) {
      values.emplace_back(std::max(0.0, solver.solve(c.od)[static_cast<Eigen::Index>(s)]), c.count);
    }
    std::sort(values.begin(), values.end());
    out.push_back(weighted_percentile(values, tissue.total, p));
  }
  return out;
}

Eigen::Vector3d non_negative_direction(Eigen::Vector3d v) {
  if (v.sum() < 0.0) v = -v;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) < kTinyComponent) v[i] = 0.0;
    // Extreme percentiles of a noisy cloud can leave the positive octant
    // slightly; absorbance cannot be negative.
    if (v[i] < 0.0) v[i] = 0.0;
  }
  const double norm = v.norm();
  if (!(norm > 0.0)) {
    throw DegenerateStainDistribution("estimated stain direction has no positive component");
  }
  return v / norm;
}

}  // namespace

void MacenkoParams::validate() const {
  if (!(od_threshold > 0.0 && od_threshold < 2.0)) {
    throw ConfigError("od_threshold must lie in (0, 2)");
  }
  if (!(angle_percentile > 0.0 && angle_percentile < 50.0)) {
    throw ConfigError("angle_percentile must lie in (0, 50)");
  }
  if (!(concentration_percentile > 50.0 && concentration_percentile <= 100.0)) {
    throw ConfigError("concentration_percentile must lie in (50, 100]");
  }
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw ConfigError("i0 must be positive");
}

StainProfile::StainProfile(StainMatrix matrix, std::array<double, 2> robust_max)
    : matrix_(std::move(matrix)), robust_max_(robust_max) {
  if (matrix_.size() != 2) {
    throw InvalidStainMatrix("a stain profile holds exactly 2 stains, got " +
                             std::to_string(matrix_.size()));
  }
  for (double v : robust_max_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidStainMatrix("robust_max must be positive and finite");
    }
  }
}

StainProfile estimate_stain_profile(const Image& image, const MacenkoParams& params) {
  params.validate();
  const TissueColours tissue = collect_tissue_colours(image, params);
  if (tissue.total < params.min_tissue_pixels || tissue.total < 2) {
    throw InsufficientTissue(std::to_string(tissue.total) + " pixels above OD threshold, need " +
                             std::to_string(params.min_tissue_pixels));
  }

  const double total = static_cast<double>(tissue.total);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : tissue.colours) mean += static_cast<double>(c.count) * c.od;
  mean /= total;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& c : tissue.colours) {
    const Eigen::Vector3d d = c.od - mean;
    cov += static_cast<double>(c.count) * (d * d.transpose());
  }
  cov /= total;

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw DegenerateStainDistribution("OD covariance eigen-decomposition failed");
  }
  const Eigen::Vector3d e1 = eig.eigenvectors().col(2);
  const Eigen::Vector3d e2 = eig.eigenvectors().col(1);

  // Angles are measured from the in-plane direction of the mean OD. The OD
  // cloud sits in the positive octant, a cone narrower than a half-plane, so
  // these angles never wrap.
  Eigen::Vector2d ref(mean.dot(e1), mean.dot(e2));
  if (!(ref.norm() > 0.0)) throw DegenerateStainDistribution("OD cloud has no in-plane extent");
  ref.normalize();
  const Eigen::Vector2d ref_perp(-ref.y(), ref.x());

  std::vector<std::pair<double, std::uint64_t>> angles;
  angles.reserve(tissue.colours.size());
  for (const auto& c : tissue.colours) {
    const Eigen::Vector2d p(c.od.dot(e1), c.od.dot(e2));
    angles.emplace_back(std::atan2(p.dot(ref_perp), p.dot(ref)), c.count);
  }
  std::sort(angles.begin(), angles.end());
  const double lo = weighted_percentile(angles, tissue.total, params.angle_percentile);
  const double hi = weighted_percentile(angles, tissue.total, 100.0 - params.angle_percentile);
  const double spread_deg = (hi - lo) * 180.0 / std::numbers::pi;
  if (!(spread_deg >= kMinAngularSpreadDeg)) {
    throw DegenerateStainDistribution("angular spread " + std::to_string(spread_deg) +
                                      " deg is below 1 deg");
  }

  auto to_od_space = [&](double phi) {
    const Eigen::Vector2d d = std::cos(phi) * ref + std::sin(phi) * ref_perp;
    return non_negative_direction(d.x() * e1 + d.y() * e2);
  };
  Eigen::Vector3d first = to_od_space(lo);
  Eigen::Vector3d second = to_od_space(hi);
  if (second[0] > first[0]) std::swap(first, second);

  StainMatrix matrix;
  try {
    matrix = StainMatrix({{"haematoxylin", first}, {"secondary", second}});
  } catch (const InvalidStainMatrix& e) {
    throw DegenerateStainDistribution(std::string("estimated stain vectors unusable: ") + e.what());
  }

  const auto maxima = weighted_concentration_max(tissue, matrix, params.concentration_percentile);
  if (!(maxima[0] > 0.0) || !(maxima[1] > 0.0)) {
    throw DegenerateStainDistribution("a stain has zero robust concentration");
  }
  return StainProfile(std::move(matrix), {maxima[0], maxima[1]});
}

std::vector<double> tissue_concentration_max(const Image& image, const StainMatrix& m,
                                             const MacenkoParams& params) {
  params.validate();
  const TissueColours tissue = collect_tissue_colours(image, params);
  if (tissue.total == 0) throw InsufficientTissue("no pixel above the OD threshold");
  return weighted_concentration_max(tissue, m, params.concentration_percentile);
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw EmptyInput("percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(rank));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lower);
  if (frac == 0.0) return sorted[lower];
  return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

ConcentrationScales concentration_scales(const ConcentrationMap& c, double p) {
  if (c.empty() || c.pixel_count() == 0) throw EmptyInput("empty concentration map");
  const int k = c.stain_count();
  ConcentrationScales out;
  std::vector<double> plane(c.pixel_count());
  for (int s = 0; s < k; ++s) {
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = c.pixel(i)[static_cast<std::size_t>(s)];
    const double v = percentile(plane, p);
    const bool absent = !(v > 0.0);
    out.scale.push_back(absent ? 1.0 : v);
    out.absent.push_back(absent);
  }
  return out;
}

// --- documents -------------------------------------------------------------

StainProfile parse_stain_profile(std::string_view text) {
  const StainMatrixDocument base = parse_stain_matrix(text);
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto maxima = doc.at("robust_max").get<std::vector<double>>();
    if (maxima.size() != 2) throw ParseError("robust_max must have 2 entries");
    return StainProfile(base.matrix, {maxima[0], maxima[1]});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stain profile document: ") + e.what());
  }
}

std::string format_stain_profile(const StainProfile& profile, double i0) {
  auto doc = nlohmann::ordered_json::parse(format_stain_matrix(profile.matrix(), i0));
  doc["robust_max"] = {profile.robust_max()[0], profile.robust_max()[1]};
  return doc.dump(2) + "\n";
}

StainProfile read_stain_profile(const std::filesystem::path& path) {
  return parse_stain_profile(detail::read_text_file(path));
}

void write_stain_profile(const std::filesystem::path& path, const StainProfile& profile,
                         double i0) {
  detail::write_text_file(path, format_stain_profile(profile, i0));
}

}  // namespace stainkit
