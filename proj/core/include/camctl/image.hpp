#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace camctl {

/// Dense row-major 2-D raster.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  T* row(int y) noexcept { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const T* row(int y) const noexcept { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<float>;
using ImageU16 = Image<std::uint16_t>;

/// Separable Gaussian blur with clamp-to-edge borders. sigma <= 0 returns a copy.
ImageF gaussian_blur(const ImageF& src, double sigma);

/// Area-average resample to (width, height).
ImageF resize_area(const ImageF& src, int width, int height);

/// Converts quantized codes to [0, 1] floats by dividing by max_code.
ImageF to_unit_float(const ImageU16& src, int max_code);

/// Mean of all pixels; 0 for an empty image.
double mean_value(const ImageF& img);

}  // namespace camctl
