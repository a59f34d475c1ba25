#include "stainkit/stain_math.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "json.hpp"
#include "text_io.hpp"

namespace stainkit {

namespace {

constexpr double kMinStainAngleDeg = 1.0;
// Normalised components this close to zero are treated as zero.
constexpr double kNegativeTolerance = 1e-12;

Eigen::Vector3d validated_unit(const Eigen::Vector3d& v, const std::string& name) {
  if (!v.allFinite()) throw InvalidStainMatrix("stain '" + name + "' has non-finite components");
  const double norm = v.norm();
  if (!(norm > 0.0)) throw InvalidStainMatrix("stain '" + name + "' is the zero vector");
  Eigen::Vector3d u = v / norm;
  for (int i = 0; i < 3; ++i) {
    if (u[i] < -kNegativeTolerance) {
      throw InvalidStainMatrix("stain '" + name + "' has a negative OD component");
    }
    if (u[i] < 0.0) u[i] = 0.0;
  }
  return u / u.norm();
}

}  // namespace

double angle_degrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = a.normalized().dot(b.normalized());
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

StainMatrix::StainMatrix(std::vector<Stain> stains) : stains_(std::move(stains)) {
  if (stains_.size() < 2 || stains_.size() > 3) {
    throw InvalidStainMatrix("a stain matrix holds 2 or 3 stains, got " +
                             std::to_string(stains_.size()));
  }
  for (auto& s : stains_) s.od = validated_unit(s.od, s.name);
  for (std::size_t i = 0; i < stains_.size(); ++i) {
    for (std::size_t j = i + 1; j < stains_.size(); ++j) {
      if (angle_degrees(stains_[i].od, stains_[j].od) <= kMinStainAngleDeg) {
        throw InvalidStainMatrix("stains '" + stains_[i].name + "' and '" + stains_[j].name +
                                 "' are parallel");
      }
    }
  }
}

Eigen::Matrix3d StainMatrix::basis() const {
  Eigen::Matrix3d m;
  m.col(0) = stains_.at(0).od;
  m.col(1) = stains_.at(1).od;
  if (stains_.size() == 3) {
    m.col(2) = stains_[2].od;
  } else {
    m.col(2) = stains_[0].od.cross(stains_[1].od).normalized();
  }
  return m;
}

bool StainMatrix::operator==(const StainMatrix& other) const {
  if (stains_.size() != other.stains_.size()) return false;
  for (std::size_t i = 0; i < stains_.size(); ++i) {
    if (stains_[i].name != other.stains_[i].name || stains_[i].od != other.stains_[i].od) {
      return false;
    }
  }
  return true;
}

namespace presets {

StainMatrix haematoxylin_eosin() {
  return StainMatrix({{"haematoxylin", {0.650, 0.704, 0.286}}, {"eosin", {0.072, 0.990, 0.105}}});
}

StainMatrix haematoxylin_dab() {
  return StainMatrix({{"haematoxylin", {0.650, 0.704, 0.286}}, {"dab", {0.268, 0.570, 0.776}}});
}

StainMatrix haematoxylin_eosin_dab() {
  return StainMatrix({{"haematoxylin", {0.650, 0.704, 0.286}},
                      {"eosin", {0.072, 0.990, 0.105}},
                      {"dab", {0.268, 0.570, 0.776}}});
}

StainMatrix by_name(std::string_view name) {
  if (name == "he") return haematoxylin_eosin();
  if (name == "hdab") return haematoxylin_dab();
  if (name == "hed") return haematoxylin_eosin_dab();
  throw ConfigError("unknown stain preset '" + std::string(name) + "'");
}

}  // namespace presets

// --- optical density -------------------------------------------------------

double intensity_to_od(double v, double i0) { return -std::log10((v + 1.0) / (i0 + 1.0)); }

std::uint8_t od_to_intensity(double od, double i0) {
  if (!(od >= 0.0)) throw DomainError("optical density must be non-negative and finite");
  return to_u8((i0 + 1.0) * std::pow(10.0, -od) - 1.0);
}

ODImage rgb_to_od(const Image& image, double i0) {
  require_channels(image, 3, "rgb_to_od");
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw DomainError("i0 must be positive and finite");
  // Values brighter than i0 carry no absorbance.
  std::array<double, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    lut[static_cast<std::size_t>(v)] = std::max(0.0, intensity_to_od(v, i0));
  }

  ODImage od(image.width(), image.height());
  auto src = image.data();
  auto dst = od.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return od;
}

Image od_to_rgb(const ODImage& od, double i0) {
  Image out(od.width(), od.height(), 3);
  auto src = od.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = od_to_intensity(src[i], i0);
  return out;
}

// --- deconvolution ---------------------------------------------------------

Deconvolver::Deconvolver(const StainMatrix& m) : matrix_(m) {
  if (m.size() < 2) throw InvalidStainMatrix("empty stain matrix");
  const Eigen::Matrix3d basis = m.basis();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(basis);
  const Eigen::Vector3d sv = svd.singularValues();
  condition_ = sv[2] > 0.0 ? sv[0] / sv[2] : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxConditionNumber)) {
    throw SingularStainMatrix("stain basis condition number " + std::to_string(condition_) +
                              " exceeds 1e6");
  }
  inverse_ = basis.inverse();
}

ConcentrationMap Deconvolver::operator()(const ODImage& od) const {
  const int k = static_cast<int>(stain_count());
  ConcentrationMap c(od.width(), od.height(), k);
  const std::size_t n = od.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto p = od.pixel(i);
    const Eigen::Vector3d x = inverse_ * Eigen::Vector3d(p[0], p[1], p[2]);
    auto q = c.pixel(i);
    for (int s = 0; s < k; ++s) q[static_cast<std::size_t>(s)] = std::max(0.0, x[s]);
  }
  return c;
}

ConcentrationMap deconvolve(const ODImage& od, const StainMatrix& m) { return Deconvolver(m)(od); }

Deconvolution deconvolve_with_residual(const ODImage& od, const StainMatrix& m) {
  Deconvolution out{deconvolve(od, m), Raster<double>(od.width(), od.height(), 1)};
  const ODImage back = compose_od(out.concentrations, m);
  const std::size_t n = od.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto a = od.pixel(i);
    auto b = back.pixel(i);
    const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
    out.residual.data()[i] = std::sqrt(dr * dr + dg * dg + db * db);
  }
  return out;
}

ODImage compose_od(const ConcentrationMap& c, const StainMatrix& m) {
  if (static_cast<std::size_t>(c.stain_count()) != m.size()) {
    throw DimensionError("concentration map has " + std::to_string(c.stain_count()) +
                         " stains, matrix has " + std::to_string(m.size()));
  }
  const int k = c.stain_count();
  ODImage od(c.width(), c.height());
  const std::size_t n = c.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto q = c.pixel(i);
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int s = 0; s < k; ++s) acc += q[static_cast<std::size_t>(s)] * m.vector(s);
    auto p = od.pixel(i);
    p[0] = acc[0];
    p[1] = acc[1];
    p[2] = acc[2];
  }
  return od;
}

Image reconstruct(const ConcentrationMap& c, const StainMatrix& m, double i0) {
  ODImage od = compose_od(c, m);
  // Negative concentrations can only come from a caller-built map; treat
  // them as absent stain rather than failing the whole image.
  for (double& v : od.data()) v = std::max(0.0, v);
  return od_to_rgb(od, i0);
}

// --- documents -------------------------------------------------------------

StainMatrixDocument parse_stain_matrix(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stain matrix document: ") + e.what());
  }
  try {
    StainMatrixDocument out;
    out.i0 = doc.value("i0", kDefaultIntensity);
    std::vector<Stain> stains;
    for (const auto& s : doc.at("stains")) {
      const auto od = s.at("od").get<std::vector<double>>();
      if (od.size() != 3) throw InvalidStainMatrix("stain vector must have 3 components");
      stains.push_back({s.value("name", "stain" + std::to_string(stains.size())),
                        Eigen::Vector3d(od[0], od[1], od[2])});
    }
    out.matrix = StainMatrix(std::move(stains));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stain matrix document: ") + e.what());
  }
}

std::string format_stain_matrix(const StainMatrix& m, double i0) {
  nlohmann::ordered_json doc;
  doc["i0"] = i0;
  doc["stains"] = nlohmann::ordered_json::array();
  for (const auto& s : m.stains()) {
    doc["stains"].push_back({{"name", s.name}, {"od", {s.od[0], s.od[1], s.od[2]}}});
  }
  return doc.dump(2) + "\n";
}

StainMatrixDocument read_stain_matrix(const std::filesystem::path& path) {
  return parse_stain_matrix(detail::read_text_file(path));
}

void write_stain_matrix(const std::filesystem::path& path, const StainMatrix& m, double i0) {
  detail::write_text_file(path, format_stain_matrix(m, i0));
}

StainMatrix load_stain_matrix(std::string_view preset_or_path) {
  if (preset_or_path == "he" || preset_or_path == "hdab" || preset_or_path == "hed") {
    return presets::by_name(preset_or_path);
  }
  return read_stain_matrix(std::filesystem::path(preset_or_path)).matrix;
}

}  // namespace stainkit
