#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stainkit/errors.hpp"

namespace stainkit {

/// Row-major, channel-interleaved 2D raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    check_shape();
    data_.assign(expected_size(), fill);
  }

  Raster(int width, int height, int channels, std::vector<T> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_shape();
    if (data_.size() != expected_size()) {
      throw DimensionError("raster buffer holds " + std::to_string(data_.size()) +
                           " values, expected " + std::to_string(expected_size()));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  T& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  std::span<T> pixel(std::size_t i) noexcept {
    return {data_.data() + i * static_cast<std::size_t>(channels_),
            static_cast<std::size_t>(channels_)};
  }
  std::span<const T> pixel(std::size_t i) const noexcept {
    return {data_.data() + i * static_cast<std::size_t>(channels_),
            static_cast<std::size_t>(channels_)};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& buffer() noexcept { return data_; }
  const std::vector<T>& buffer() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t expected_size() const noexcept {
    return pixel_count() * static_cast<std::size_t>(channels_);
  }
  void check_shape() const {
    if (width_ < 0 || height_ < 0 || channels_ <= 0) {
      throw DimensionError("invalid raster shape " + std::to_string(width_) + "x" +
                           std::to_string(height_) + "x" + std::to_string(channels_));
    }
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

/// 8-bit raster, 1 or 3 channels.
using Image = Raster<std::uint8_t>;

/// Real-valued raster produced by standardisation.
using FloatImage = Raster<float>;

/// Three non-negative optical densities per pixel.
class ODImage : public Raster<double> {
 public:
  ODImage() : Raster<double>(0, 0, 3) {}
  ODImage(int width, int height, double fill = 0.0) : Raster<double>(width, height, 3, fill) {}
  ODImage(int width, int height, std::vector<double> data)
      : Raster<double>(width, height, 3, std::move(data)) {}
};

/// Per-pixel, per-stain concentrations (OD units); channels() == stain count.
class ConcentrationMap : public Raster<double> {
 public:
  ConcentrationMap() = default;
  ConcentrationMap(int width, int height, int stain_count, double fill = 0.0)
      : Raster<double>(width, height, stain_count, fill) {}
  ConcentrationMap(int width, int height, int stain_count, std::vector<double> data)
      : Raster<double>(width, height, stain_count, std::move(data)) {}

  int stain_count() const noexcept { return channels(); }
};

/// Round half to even and clamp into the 8-bit range.
inline std::uint8_t to_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::nearbyint(v));
}

inline void require_channels(const Image& image, int channels, const char* what) {
  if (image.channels() != channels) {
    throw ChannelCountError(std::string(what) + " expects a " + std::to_string(channels) +
                            "-channel image, got " + std::to_string(image.channels()));
  }
}

}  // namespace stainkit
