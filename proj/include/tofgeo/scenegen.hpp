#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "tofgeo/camera.hpp"
#include "tofgeo/geometry.hpp"
#include "tofgeo/pointcloud.hpp"
#include "tofgeo/raster.hpp"

namespace tofgeo {

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
};

/// Points X with normal . X = offset.
struct Plane {
  Eigen::Vector3d normal = -Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

using Primitive = std::variant<Sphere, Box, Plane>;

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::uint64_t rng_seed = 0;

  void validate() const {
    require(!primitives.empty(), "scene: need at least one primitive");
    for (const auto& prim : primitives) {
      std::visit(
          [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Sphere>) {
              require(p.center.allFinite() && std::isfinite(p.radius) && p.radius > 0.0,
                      "scene: sphere parameters must be finite, radius positive");
            } else if constexpr (std::is_same_v<T, Box>) {
              require(p.center.allFinite() && p.half_extents.allFinite() &&
                          (p.half_extents.array() > 0.0).all(),
                      "scene: box parameters must be finite, extents positive");
            } else {
              require(p.normal.allFinite() && p.normal.norm() > 0.0 &&
                          std::isfinite(p.offset),
                      "scene: plane normal must be nonzero and finite");
            }
          },
          prim);
    }
  }
};

struct CorruptionSpec {
  double depth_noise_sigma_mm = 0.0;
  RigidTransform misalignment;  // applied to the ground-truth cloud
  double hole_fraction = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    require(depth_noise_sigma_mm >= 0.0, "corruption: sigma must be non-negative");
    require(hole_fraction >= 0.0 && hole_fraction < 1.0,
            "corruption: hole fraction must be in [0, 1)");
  }
};

namespace detail {

struct RayHit {
  double z = std::numeric_limits<double>::infinity();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  bool hit = false;
};

/// Rays start at the origin with direction d (z component 1), so the ray
/// parameter equals the z-depth directly.
inline void intersect(const Sphere& s, const Eigen::Vector3d& d, RayHit* best) {
  const double a = d.squaredNorm();
  const double b = -2.0 * d.dot(s.center);
  const double c = s.center.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t > 1e-9 && t < best->z) {
      best->z = t;
      best->normal = (t * d - s.center).normalized();
      best->hit = true;
      break;  // roots are ordered, the first positive one is nearest
    }
  }
}

inline void intersect(const Box& box, const Eigen::Vector3d& d, RayHit* best) {
  const Eigen::Matrix3d rot = box.rotation.toRotationMatrix();
  const Eigen::Vector3d dir = rot.transpose() * d;
  const Eigen::Vector3d org = rot.transpose() * (-box.center);
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1, far_axis = -1;
  double near_sign = 1.0, far_sign = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (std::abs(org[a]) > box.half_extents[a]) return;
      continue;
    }
    double t1 = (-box.half_extents[a] - org[a]) / dir[a];
    double t2 = (box.half_extents[a] - org[a]) / dir[a];
    double sign = -1.0;
    if (t1 > t2) {
      std::swap(t1, t2);
      sign = 1.0;
    }
    if (t1 > t_near) {
      t_near = t1;
      near_axis = a;
      near_sign = sign;
    }
    if (t2 < t_far) {
      t_far = t2;
      far_axis = a;
      far_sign = -sign;
    }
    if (t_near > t_far) return;
  }
  const bool entering = t_near > 1e-9;
  const double t = entering ? t_near : t_far;  // ray origin inside: exit face
  const int axis = entering ? near_axis : far_axis;
  const double sign = entering ? near_sign : far_sign;
  if (t <= 1e-9 || t >= best->z || axis < 0) return;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
  local[axis] = sign;
  best->z = t;
  best->normal = rot * local;
  best->hit = true;
}

inline void intersect(const Plane& plane, const Eigen::Vector3d& d, RayHit* best) {
  const double denom = plane.normal.dot(d);
  if (std::abs(denom) < 1e-15) return;
  const double t = plane.offset / denom;
  if (t <= 1e-9 || t >= best->z) return;
  best->z = t;
  best->normal = plane.normal.normalized();
  best->hit = true;
}

}  // namespace detail

/// Analytic raycast of the scene: nearest primitive hit per pixel gives the
/// z-depth and the exact surface normal, oriented toward the camera.
inline std::pair<DepthMap, NormalMap> render_depth(const SceneSpec& spec,
                                                   const CameraIntrinsics& k) {
  spec.validate();
  k.validate();
  DepthMap depth(k.width, k.height);
  NormalMap normals(k.width, k.height, Eigen::Vector3d::UnitZ());
  parallel_for(0, k.height, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d d = k.ray(u, v);
      detail::RayHit best;
      for (const auto& prim : spec.primitives) {
        std::visit([&](const auto& p) { detail::intersect(p, d, &best); }, prim);
      }
      if (!best.hit) continue;
      Eigen::Vector3d n = best.normal;
      if (n.dot(d) > 0.0) n = -n;
      depth.set(u, v, best.z);
      normals.set(u, v, n);
    }
  });
  return {std::move(depth), std::move(normals)};
}

/// Injects seeded Gaussian depth noise, punches random holes, and misaligns
/// the ground-truth cloud. Deterministic for a given seed: noise then hole
/// draws each walk valid pixels in row-major order.
inline std::pair<DepthMap, PointCloud> corrupt(const DepthMap& depth,
                                               const PointCloud& cloud,
                                               const CorruptionSpec& c) {
  c.validate();
  std::mt19937_64 rng(c.rng_seed);
  DepthMap out = depth;
  if (c.depth_noise_sigma_mm > 0.0) {
    std::normal_distribution<double> noise(0.0, c.depth_noise_sigma_mm);
    for (std::ptrdiff_t i = 0; i < out.size(); ++i) {
      if (!out.valid(i)) continue;
      out.set(i, std::max(1e-3, out[i] + noise(rng)));
    }
  }
  if (c.hole_fraction > 0.0) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::ptrdiff_t i = 0; i < out.size(); ++i) {
      if (!out.valid(i)) continue;
      if (uniform(rng) < c.hole_fraction) out.invalidate(i);
    }
  }
  return {std::move(out), transform(cloud, c.misalignment)};
}

}  // namespace tofgeo
