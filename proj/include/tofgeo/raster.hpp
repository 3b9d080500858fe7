#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tofgeo/common.hpp"

namespace tofgeo {

/// Row-major raster with an explicit validity mask. Invalid pixels are
/// masked, never sentinel values, so arithmetic cannot silently use them.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, const T& fill = T{}, bool valid = false)
      : width_(width),
        height_(height),
        values_(static_cast<size_t>(width) * height, fill),
        mask_(static_cast<size_t>(width) * height, valid ? 1 : 0) {
    require(width > 0 && height > 0, "raster: size must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::ptrdiff_t size() const { return static_cast<std::ptrdiff_t>(values_.size()); }
  bool empty() const { return values_.empty(); }

  bool same_size(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U>
  bool same_size(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool in_bounds(int u, int v) const {
    return u >= 0 && u < width_ && v >= 0 && v < height_;
  }

  std::ptrdiff_t index(int u, int v) const {
    return static_cast<std::ptrdiff_t>(v) * width_ + u;
  }

  const T& at(int u, int v) const { return values_[index(u, v)]; }
  T& at(int u, int v) { return values_[index(u, v)]; }
  const T& operator[](std::ptrdiff_t i) const { return values_[i]; }
  T& operator[](std::ptrdiff_t i) { return values_[i]; }

  bool valid(int u, int v) const { return mask_[index(u, v)] != 0; }
  bool valid(std::ptrdiff_t i) const { return mask_[i] != 0; }

  void set(int u, int v, const T& value) {
    values_[index(u, v)] = value;
    mask_[index(u, v)] = 1;
  }
  void set(std::ptrdiff_t i, const T& value) {
    values_[i] = value;
    mask_[i] = 1;
  }
  void invalidate(int u, int v) { mask_[index(u, v)] = 0; }
  void invalidate(std::ptrdiff_t i) { mask_[i] = 0; }

  std::ptrdiff_t valid_count() const {
    std::ptrdiff_t n = 0;
    for (uint8_t m : mask_) n += m;
    return n;
  }

  const std::vector<T>& values() const { return values_; }
  const std::vector<uint8_t>& mask() const { return mask_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
  std::vector<uint8_t> mask_;
};

/// Per-pixel z-depth along the optical axis, millimeters.
using DepthMap = Raster<double>;
/// Per-pixel modulation amplitude, arbitrary linear units.
using ConfidenceMap = Raster<double>;
/// Per-pixel expected absolute depth error, millimeters.
using ErrorMap = Raster<double>;
/// Per-pixel unit normal in the camera frame, oriented so normal . ray < 0.
using NormalMap = Raster<Eigen::Vector3d>;

inline void validate_depth_map(const DepthMap& depth) {
  for (std::ptrdiff_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid(i)) continue;
    require(std::isfinite(depth[i]) && depth[i] > 0.0,
            "depth map: valid pixels must be finite and positive");
  }
}

}  // namespace tofgeo
