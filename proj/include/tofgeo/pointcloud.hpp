#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "tofgeo/common.hpp"

namespace tofgeo {

/// Unordered 3D points, millimeters, with optional index-aligned unit normals.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;

  bool has_normals() const { return !normals.empty(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void validate() const {
    for (const auto& p : points) {
      require(p.allFinite(), "point cloud: coordinates must be finite");
    }
    if (has_normals()) {
      require(normals.size() == points.size(),
              "point cloud: normals must align with points");
      for (const auto& n : normals) {
        require(std::abs(n.norm() - 1.0) < 1e-6, "point cloud: normals must be unit");
      }
    }
  }
};

/// Proper rigid motion p -> R p + t, millimeters.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  bool is_rigid(double tol = 1e-9) const {
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }

  void validate() const {
    require(is_rigid(), "rigid transform: rotation must be orthonormal with det +1");
    require(translation.allFinite(), "rigid transform: translation must be finite");
  }
};

/// Composition: (a * b)(p) = a(b(p)).
inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

inline RigidTransform rotation_about_axis(const Eigen::Vector3d& axis, double radians,
                                          const Eigen::Vector3d& translation =
                                              Eigen::Vector3d::Zero()) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  return t;
}

/// Rotation angle in radians between two rotations (geodesic distance).
inline double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace tofgeo
