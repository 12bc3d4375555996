#ifndef STCHO_VOLUME_HPP
#define STCHO_VOLUME_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stcho/error.hpp"

namespace stcho {

/// Dense W x H x K array. Storage is row-major within a slice and slices are
/// consecutive, so element (x, y, z) lives at (z * H + y) * W + x.
template <typename T>
class Volume {
public:
  Volume() = default;
  Volume(std::size_t width, std::size_t height, std::size_t depth, T fill = T{})
      : width_(width), height_(height), depth_(depth), data_(width * height * depth, fill) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t slice_size() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t x, std::size_t y, std::size_t z) noexcept {
    return data_[(z * height_ + y) * width_ + x];
  }
  const T& operator()(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data_[(z * height_ + y) * width_ + x];
  }

  std::span<T> slice(std::size_t z) noexcept {
    return std::span<T>(data_).subspan(z * slice_size(), slice_size());
  }
  std::span<const T> slice(std::size_t z) const noexcept {
    return std::span<const T>(data_).subspan(z * slice_size(), slice_size());
  }

  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_shape(const Volume& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && depth_ == other.depth_;
  }

  friend bool operator==(const Volume&, const Volume&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t depth_ = 0;
  std::vector<T> data_;
};

}  // namespace stcho

#endif  // STCHO_VOLUME_HPP
