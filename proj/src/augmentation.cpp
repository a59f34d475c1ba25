#include "stainkit/augmentation.hpp"

#include <cmath>
#include <numbers>

#include "filtering.hpp"

namespace stainkit {

namespace {

// Fork tags; one independent stream per pipeline step.
enum StreamTag : std::uint64_t {
  kGates = 1,
  kElastic,
  kAffine,
  kNoise,
  kBlur,
  kBrightness,
  kColour,
  kContrast,
  kStain,
  kStrategy,
};

struct CoordinateField {
  std::vector<double> x;
  std::vector<double> y;
};

double sample_bilinear(const Image& image, double x, double y, int c) {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double fx = x - fx0;
  const double fy = y - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const int w = image.width();
  const int h = image.height();
  const int xa = detail::reflect_index(x0, w);
  const int xb = detail::reflect_index(x0 + 1, w);
  const int ya = detail::reflect_index(y0, h);
  const int yb = detail::reflect_index(y0 + 1, h);
  const double top = (1.0 - fx) * image.at(xa, ya, c) + fx * image.at(xb, ya, c);
  const double bottom = (1.0 - fx) * image.at(xa, yb, c) + fx * image.at(xb, yb, c);
  return (1.0 - fy) * top + fy * bottom;
}

// Samples image (bilinear) and mask (nearest) at the source coordinates of
// every output pixel.
Sample resample(const Sample& sample, const CoordinateField& field) {
  Sample out{Image(sample.image.width(), sample.image.height(), sample.image.channels()),
             Image(sample.mask.width(), sample.mask.height(), 1), sample.label};
  const int w = sample.image.width();
  const int h = sample.image.height();
  const int channels = sample.image.channels();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x);
      const double sx = field.x[i];
      const double sy = field.y[i];
      for (int c = 0; c < channels; ++c) out.image.at(x, y, c) = to_u8(sample_bilinear(sample.image, sx, sy, c));
      const int nx = detail::reflect_index(static_cast<int>(std::floor(sx + 0.5)), w);
      const int ny = detail::reflect_index(static_cast<int>(std::floor(sy + 0.5)), h);
      out.mask.at(x, y) = sample.mask.at(nx, ny);
    }
  }
  return out;
}

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.low) || !std::isfinite(r.high) || r.low > r.high) {
    throw ConfigError(std::string(name) + " range must be finite with low <= high");
  }
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " probability must lie in [0, 1]");
}

double draw(SeededRng& rng, const Range& r) { return rng.uniform(r.low, r.high); }

double mean_grey(const Image& image) {
  std::uint64_t sum = 0;
  const std::size_t n = image.pixel_count();
  if (n == 0) return 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = image.pixel(i);
    sum += image.channels() == 3 ? greyscale_value(p[0], p[1], p[2]) : p[0];
  }
  return static_cast<double>(sum) / static_cast<double>(n);
}

}  // namespace

// --- labels & enums --------------------------------------------------------

std::string_view to_string(SampleLabel label) {
  return label == SampleLabel::glomerulus ? "glomerulus" : "tissue";
}

SampleLabel parse_sample_label(std::string_view text) {
  if (text == "glomerulus") return SampleLabel::glomerulus;
  if (text == "tissue") return SampleLabel::tissue;
  throw ConfigError("unknown sample label '" + std::string(text) + "'");
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::rgb: return "rgb";
    case Strategy::greyscale: return "greyscale";
    case Strategy::haematoxylin: return "haematoxylin";
    case Strategy::channel_swap: return "channel_swap";
    case Strategy::colour_transfer: return "colour_transfer";
  }
  return "rgb";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "rgb") return Strategy::rgb;
  if (text == "greyscale") return Strategy::greyscale;
  if (text == "haematoxylin") return Strategy::haematoxylin;
  if (text == "channel_swap") return Strategy::channel_swap;
  if (text == "colour_transfer") return Strategy::colour_transfer;
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(PixelOp op) {
  switch (op) {
    case PixelOp::noise: return "noise";
    case PixelOp::blur: return "blur";
    case PixelOp::brightness: return "brightness";
    case PixelOp::colour: return "colour";
    case PixelOp::contrast: return "contrast";
  }
  return "noise";
}

PixelOp parse_pixel_op(std::string_view text) {
  if (text == "noise") return PixelOp::noise;
  if (text == "blur") return PixelOp::blur;
  if (text == "brightness") return PixelOp::brightness;
  if (text == "colour") return PixelOp::colour;
  if (text == "contrast") return PixelOp::contrast;
  throw ConfigError("unknown pixel augmentation '" + std::string(text) + "'");
}

// --- sample & config -------------------------------------------------------

Sample Sample::with_empty_mask(Image image, SampleLabel label) {
  Image mask(image.width(), image.height(), 1, 0);
  return Sample{std::move(image), std::move(mask), label};
}

void Sample::validate() const {
  if (mask.channels() != 1 || mask.width() != image.width() || mask.height() != image.height()) {
    throw DimensionError("mask must be single-channel with the image's dimensions");
  }
  for (std::uint8_t v : mask.data()) {
    if (v != 0 && v != 255) throw DomainError("mask values must be 0 or 255");
  }
}

void ElasticParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("elastic sigma must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("elastic alpha must be >= 0");
}

AugmentationConfig AugmentationConfig::disabled() {
  AugmentationConfig cfg;
  cfg.probability = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  cfg.elastic.alpha = 0.0;
  cfg.strategy = Strategy::rgb;
  return cfg;
}

void AugmentationConfig::validate() const {
  check_probability(probability.affine, "affine");
  check_probability(probability.noise, "noise");
  check_probability(probability.blur, "blur");
  check_probability(probability.brightness, "brightness");
  check_probability(probability.colour, "colour");
  check_probability(probability.contrast, "contrast");
  check_probability(probability.stain, "stain");
  check_probability(flip_probability, "flip");
  check_probability(elastic_probability, "elastic");
  check_range(rotation_deg, "rotation_deg");
  check_range(shift_px, "shift_px");
  check_range(zoom, "zoom");
  if (!(zoom.low > 0.0)) throw ConfigError("zoom must be positive");
  check_range(noise_sigma, "noise_sigma");
  check_range(blur_sigma, "blur_sigma");
  check_range(brightness, "brightness");
  check_range(colour, "colour");
  check_range(contrast, "contrast");
  if (noise_sigma.low < 0.0 || blur_sigma.low < 0.0 || brightness.low < 0.0 ||
      colour.low < 0.0 || contrast.low < 0.0) {
    throw ConfigError("photometric magnitudes must be non-negative");
  }
  check_range(stain_alpha, "stain_alpha");
  check_range(stain_beta, "stain_beta");
  elastic.validate();
  if (strategy == Strategy::colour_transfer) {
    const auto& ct = colour_transfer;
    if (ct.stainings.empty()) throw ConfigError("colour_transfer needs at least one staining pool");
    if (ct.source_index >= ct.stainings.size()) throw ConfigError("source_index out of range");
    for (std::size_t i = 0; i < ct.stainings.size(); ++i) {
      if (i != ct.source_index && ct.stainings[i].profiles.empty()) {
        throw ConfigError("staining pool '" + ct.stainings[i].name + "' has no profiles");
      }
    }
    ct.macenko.validate();
  }
}

// --- geometric -------------------------------------------------------------

AffineParams draw_affine(const AugmentationConfig& cfg, SeededRng& rng) {
  AffineParams p;
  p.rotation_deg = draw(rng, cfg.rotation_deg);
  p.shift_x = draw(rng, cfg.shift_px);
  p.shift_y = draw(rng, cfg.shift_px);
  p.zoom = draw(rng, cfg.zoom);
  const bool h = rng.bernoulli(cfg.flip_probability);
  const bool v = rng.bernoulli(cfg.flip_probability);
  p.flip_horizontal = cfg.horizontal_flip && h;
  p.flip_vertical = cfg.vertical_flip && v;
  return p;
}

Sample apply_affine(const Sample& sample, const AffineParams& params) {
  sample.validate();
  if (!(params.zoom > 0.0)) throw ConfigError("zoom must be positive");
  const int w = sample.image.width();
  const int h = sample.image.height();
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  // Inverse map: p = c + F R(-theta) (q - c - t) / zoom.
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double fx = params.flip_horizontal ? -1.0 : 1.0;
  const double fy = params.flip_vertical ? -1.0 : 1.0;

  CoordinateField field{std::vector<double>(sample.image.pixel_count()),
                        std::vector<double>(sample.image.pixel_count())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (x - cx - params.shift_x) / params.zoom;
      const double dy = (y - cy - params.shift_y) / params.zoom;
      const double rx = cos_t * dx + sin_t * dy;
      const double ry = -sin_t * dx + cos_t * dy;
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x);
      field.x[i] = cx + fx * rx;
      field.y[i] = cy + fy * ry;
    }
  }
  return resample(sample, field);
}

Sample affine_augment(const Sample& sample, const AugmentationConfig& cfg, SeededRng& rng) {
  return apply_affine(sample, draw_affine(cfg, rng));
}

Sample elastic_deform(const Sample& sample, const ElasticParams& params, SeededRng& rng) {
  params.validate();
  sample.validate();
  if (params.alpha == 0.0) return sample;
  const int w = sample.image.width();
  const int h = sample.image.height();
  const std::size_t n = sample.image.pixel_count();

  // Interleaved (u, v) displacement plane.
  std::vector<double> field(2 * n);
  for (std::size_t i = 0; i < n; ++i) field[2 * i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) field[2 * i + 1] = rng.uniform(-1.0, 1.0);
  detail::gaussian_filter_plane(field, w, h, 2, 0, params.sigma);
  detail::gaussian_filter_plane(field, w, h, 2, 1, params.sigma);

  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    peak = std::max(peak, std::hypot(field[2 * i], field[2 * i + 1]));
  }
  if (!(peak > 0.0)) return sample;
  const double scale = params.alpha / peak;

  CoordinateField coords{std::vector<double>(n), std::vector<double>(n)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x);
      coords.x[i] = x + scale * field[2 * i];
      coords.y[i] = y + scale * field[2 * i + 1];
    }
  }
  return resample(sample, coords);
}

// --- photometric -----------------------------------------------------------

Image add_gaussian_noise(const Image& image, double sigma, SeededRng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  if (sigma == 0.0) return image;
  Image out = image;
  for (auto& v : out.data()) v = to_u8(v + sigma * rng.normal());
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("blur sigma must be >= 0");
  if (sigma == 0.0) return image;
  std::vector<double> plane(image.data().begin(), image.data().end());
  for (int c = 0; c < image.channels(); ++c) {
    detail::gaussian_filter_plane(plane, image.width(), image.height(), image.channels(), c, sigma);
  }
  Image out(image.width(), image.height(), image.channels());
  for (std::size_t i = 0; i < plane.size(); ++i) out.data()[i] = to_u8(plane[i]);
  return out;
}

Image enhance_brightness(const Image& image, double factor) {
  if (!(factor >= 0.0)) throw ConfigError("brightness factor must be >= 0");
  Image out = image;
  for (auto& v : out.data()) v = to_u8(factor * v);
  return out;
}

Image enhance_colour(const Image& image, double factor) {
  if (!(factor >= 0.0)) throw ConfigError("colour factor must be >= 0");
  if (image.channels() != 3) return image;  // a grey image is its own greyscale
  Image out = image;
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    auto p = out.pixel(i);
    const double g = greyscale_value(p[0], p[1], p[2]);
    for (auto& v : p) v = to_u8(g + factor * (v - g));
  }
  return out;
}

Image enhance_contrast(const Image& image, double factor) {
  if (!(factor >= 0.0)) throw ConfigError("contrast factor must be >= 0");
  const double mu = mean_grey(image);
  Image out = image;
  for (auto& v : out.data()) v = to_u8(mu + factor * (v - mu));
  return out;
}

Image pixel_augment(const Image& image, PixelOp op, double magnitude, SeededRng& rng) {
  switch (op) {
    case PixelOp::noise: return add_gaussian_noise(image, magnitude, rng);
    case PixelOp::blur: return gaussian_blur(image, magnitude);
    case PixelOp::brightness: return enhance_brightness(image, magnitude);
    case PixelOp::colour: return enhance_colour(image, magnitude);
    case PixelOp::contrast: return enhance_contrast(image, magnitude);
  }
  throw ConfigError("unknown pixel augmentation");
}

Image stain_variation(const Image& image, const StainMatrix& m, const StainPerturbation& p,
                      double i0) {
  if (p.alpha.size() != m.size() || p.beta.size() != m.size()) {
    throw DimensionError("stain perturbation needs one alpha and one beta per stain");
  }
  ConcentrationMap c = deconvolve(rgb_to_od(image, i0), m);
  const std::size_t n = c.pixel_count();
  const std::size_t k = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto q = c.pixel(i);
    for (std::size_t s = 0; s < k; ++s) q[s] = std::max(0.0, (1.0 + p.alpha[s]) * q[s] + p.beta[s]);
  }
  return reconstruct(c, m, i0);
}

Image stain_variation(const Image& image, const StainMatrix& m, Range alpha_range,
                      Range beta_range, SeededRng& rng, double i0) {
  StainPerturbation p;
  for (std::size_t s = 0; s < m.size(); ++s) {
    p.alpha.push_back(draw(rng, alpha_range));
    p.beta.push_back(draw(rng, beta_range));
  }
  return stain_variation(image, m, p, i0);
}

// --- pipeline --------------------------------------------------------------

Sample augment_sample(const Sample& sample, const AugmentationConfig& cfg, const SeededRng& rng,
                      AugmentationTrace* trace) {
  cfg.validate();
  sample.validate();
  require_channels(sample.image, 3, "augment_sample");

  AugmentationTrace local;
  AugmentationTrace& t = trace ? *trace : local;
  t = AugmentationTrace{};

  // All gates are drawn up front, in a fixed order, from one stream.
  SeededRng gates = rng.fork(kGates);
  const double g_elastic = gates.uniform();
  const double g_affine = gates.uniform();
  const double g_noise = gates.uniform();
  const double g_blur = gates.uniform();
  const double g_brightness = gates.uniform();
  const double g_colour = gates.uniform();
  const double g_contrast = gates.uniform();
  const double g_stain = gates.uniform();

  Sample out = sample;

  t.elastic = cfg.elastic_always || g_elastic < cfg.elastic_probability;
  if (t.elastic) {
    SeededRng r = rng.fork(kElastic);
    out = elastic_deform(out, cfg.elastic, r);
  }
  t.affine = g_affine < cfg.probability.affine;
  if (t.affine) {
    SeededRng r = rng.fork(kAffine);
    out = affine_augment(out, cfg, r);
  }

  auto photometric = [&](bool& fired, double gate, double p, std::uint64_t tag, PixelOp op,
                         const Range& range) {
    fired = gate < p;
    if (!fired) return;
    SeededRng r = rng.fork(tag);
    const double magnitude = draw(r, range);
    out.image = pixel_augment(out.image, op, magnitude, r);
  };
  photometric(t.noise, g_noise, cfg.probability.noise, kNoise, PixelOp::noise, cfg.noise_sigma);
  photometric(t.blur, g_blur, cfg.probability.blur, kBlur, PixelOp::blur, cfg.blur_sigma);
  photometric(t.brightness, g_brightness, cfg.probability.brightness, kBrightness,
              PixelOp::brightness, cfg.brightness);
  photometric(t.colour, g_colour, cfg.probability.colour, kColour, PixelOp::colour, cfg.colour);
  photometric(t.contrast, g_contrast, cfg.probability.contrast, kContrast, PixelOp::contrast,
              cfg.contrast);

  t.stain = g_stain < cfg.probability.stain;
  if (t.stain) {
    SeededRng r = rng.fork(kStain);
    out.image = stain_variation(out.image, cfg.stain_matrix, cfg.stain_alpha, cfg.stain_beta, r);
  }

  SeededRng strategy_rng = rng.fork(kStrategy);
  switch (cfg.strategy) {
    case Strategy::rgb:
      break;
    case Strategy::greyscale:
      out.image = to_greyscale(out.image);
      break;
    case Strategy::haematoxylin:
      out.image = extract_haematoxylin(out.image, cfg.haematoxylin_matrix);
      break;
    case Strategy::channel_swap: {
      const ChannelPermutation perm = ChannelPermutation::random(strategy_rng);
      t.permutation = perm;
      out.image = channel_swap(out.image, perm);
      break;
    }
    case Strategy::colour_transfer: {
      const auto& ct = cfg.colour_transfer;
      const std::size_t pick = strategy_rng.index(ct.stainings.size());
      t.staining = pick;
      if (pick == ct.source_index) break;
      const auto& pool = ct.stainings[pick].profiles;
      const StainProfile& target = pool[strategy_rng.index(pool.size())];
      try {
        const StainProfile source =
            ct.source_profile ? *ct.source_profile : estimate_stain_profile(out.image, ct.macenko);
        out.image = colour_transfer(out.image, source, target, ct.macenko.i0);
        t.transferred = true;
      } catch (const InsufficientTissue& e) {
        t.skipped_reason = e.name();
      } catch (const DegenerateStainDistribution& e) {
        t.skipped_reason = e.name();
      }
      break;
    }
  }
  return out;
}

Sample augment_sample(const Sample& sample, const AugmentationConfig& cfg, std::uint64_t seed,
                      std::uint64_t index, AugmentationTrace* trace) {
  return augment_sample(sample, cfg, SeededRng(seed, index), trace);
}

FloatImage standardize(const Image& image, std::span<const double> mean,
                       std::span<const double> std) {
  const auto channels = static_cast<std::size_t>(image.channels());
  auto pick = [&](std::span<const double> v, std::size_t c, const char* name) {
    if (v.size() == channels) return v[c];
    if (v.size() == 1) return v[0];
    throw ConfigError(std::string(name) + " needs 1 or " + std::to_string(channels) + " values");
  };
  std::vector<double> m(channels), s(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    m[c] = pick(mean, c, "mean");
    s[c] = pick(std, c, "std");
    if (!(s[c] > 0.0)) throw ConfigError("std must be positive");
  }
  FloatImage out(image.width(), image.height(), image.channels());
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::size_t c = i % channels;
    dst[i] = static_cast<float>((src[i] / 255.0 - m[c]) / s[c]);
  }
  return out;
}

}  // namespace stainkit
