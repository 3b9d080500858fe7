#pragma once

#include <Eigen/Core>

#include "tofgeo/common.hpp"

namespace tofgeo {

/// Pinhole model. Pixel (u, v) at z-depth z backprojects to
/// z * ((u - cx) / fx, (v - cy) / fy, 1), millimeters, camera frame.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    require(fx > 0.0 && fy > 0.0, "intrinsics: focal lengths must be positive");
    require(width > 0 && height > 0, "intrinsics: raster size must be positive");
    require(cx >= 0.0 && cx < width, "intrinsics: cx out of raster");
    require(cy >= 0.0 && cy < height, "intrinsics: cy out of raster");
  }

  /// Unnormalized viewing-ray direction through pixel (u, v); z component is 1.
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  /// Intrinsics for the same camera at a raster scaled by an integer factor.
  CameraIntrinsics scaled(int factor) const {
    return {fx * factor, fy * factor, cx * factor, cy * factor,
            width * factor, height * factor};
  }
};

}  // namespace tofgeo
