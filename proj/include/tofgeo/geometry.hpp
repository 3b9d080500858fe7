#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tofgeo/camera.hpp"
#include "tofgeo/pointcloud.hpp"
#include "tofgeo/raster.hpp"

namespace tofgeo {

/// One point per valid pixel, row-major, so the pixel <-> point
/// correspondence is recoverable by walking the mask in the same order.
inline PointCloud backproject(const DepthMap& depth, const CameraIntrinsics& k) {
  require(depth.width() == k.width && depth.height() == k.height,
          "backproject: depth raster size must match intrinsics");
  PointCloud cloud;
  cloud.points.reserve(static_cast<size_t>(depth.valid_count()));
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      cloud.points.push_back(depth.at(u, v) * k.ray(u, v));
    }
  }
  return cloud;
}

struct ProjectResult {
  DepthMap depth;
  int dropped = 0;  // points behind the camera or outside the raster
};

/// Rasterizes a cloud with a z-buffer: collisions keep the smallest z,
/// ties the smallest point index. Sequential by contract so ties are stable.
inline ProjectResult project(const PointCloud& cloud, const CameraIntrinsics& k) {
  ProjectResult out{DepthMap(k.width, k.height), 0};
  for (const auto& p : cloud.points) {
    if (!(p.z() > 0.0)) {
      ++out.dropped;
      continue;
    }
    const int u = static_cast<int>(std::lround(k.fx * p.x() / p.z() + k.cx));
    const int v = static_cast<int>(std::lround(k.fy * p.y() / p.z() + k.cy));
    if (!out.depth.in_bounds(u, v)) {
      ++out.dropped;
      continue;
    }
    if (!out.depth.valid(u, v) || p.z() < out.depth.at(u, v)) {
      out.depth.set(u, v, p.z());
    }
  }
  return out;
}

namespace detail {

/// Smallest-eigenvalue eigenvector of the covariance of the backprojected
/// window around (u, v). Requires >= 3 valid window pixels.
inline bool window_plane_normal(const DepthMap& depth, const CameraIntrinsics& k,
                                int u, int v, int window, Eigen::Vector3d* normal,
                                Eigen::Vector3d* centroid = nullptr,
                                double* spread_mad = nullptr) {
  const int half = window / 2;
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<size_t>(window) * window);
  for (int dv = -half; dv <= half; ++dv) {
    for (int du = -half; du <= half; ++du) {
      const int uu = u + du;
      const int vv = v + dv;
      if (!depth.in_bounds(uu, vv) || !depth.valid(uu, vv)) continue;
      pts.push_back(depth.at(uu, vv) * k.ray(uu, vv));
    }
  }
  if (pts.size() < 3) return false;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (es.info() != Eigen::Success) return false;
  *normal = es.eigenvectors().col(0);
  if (centroid) *centroid = mean;

  if (spread_mad) {
    // Robust spread of the plane-fit residuals: MAD scaled to sigma.
    std::vector<double> res(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      res[i] = std::abs(normal->dot(pts[i] - mean));
    }
    std::nth_element(res.begin(), res.begin() + res.size() / 2, res.end());
    *spread_mad = 1.4826 * res[res.size() / 2];
  }
  return true;
}

}  // namespace detail

/// PCA plane-fit normals. Pixels with fewer than 3 valid window
/// neighbors are invalid; normals are flipped so normal . ray < 0.
inline NormalMap normals_from_depth(const DepthMap& depth, const CameraIntrinsics& k,
                                    int window = 5) {
  require(window >= 3 && window % 2 == 1, "normals_from_depth: window must be odd >= 3");
  require(depth.width() == k.width && depth.height() == k.height,
          "normals_from_depth: depth raster size must match intrinsics");
  NormalMap normals(depth.width(), depth.height(), Eigen::Vector3d::UnitZ());
  parallel_for(0, depth.height(), [&](std::ptrdiff_t v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, static_cast<int>(v))) continue;
      Eigen::Vector3d n;
      if (!detail::window_plane_normal(depth, k, u, static_cast<int>(v), window, &n)) {
        continue;
      }
      if (n.dot(k.ray(u, static_cast<double>(v))) > 0.0) n = -n;
      normals.set(u, static_cast<int>(v), n);
    }
  });
  return normals;
}

/// Maps points by R p + t and normals by R.
inline PointCloud transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(t.rotation * n);
  return out;
}

}  // namespace tofgeo
