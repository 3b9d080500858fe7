#pragma once

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "tofgeo/geometry.hpp"
#include "tofgeo/raster.hpp"

namespace tofgeo {

struct RefineConfig {
  int iterations = 3;
  int window = 5;
  double normal_affinity_gamma = 2.0;
  double blend = 0.5;  // update mixing factor in (0, 1]

  void validate() const {
    require(iterations >= 1, "refine: iterations must be >= 1");
    require(window >= 3 && window % 2 == 1, "refine: window must be odd >= 3");
    require(blend > 0.0 && blend <= 1.0, "refine: blend must be in (0, 1]");
  }
};

/// Depth-to-normal kernel: PCA plane fit over the window neighborhood.
inline NormalMap depth_to_normal(const DepthMap& depth, const CameraIntrinsics& k,
                                 const RefineConfig& cfg = {}) {
  cfg.validate();
  return normals_from_depth(depth, k, cfg.window);
}

/// Normal-to-depth kernel: every valid window neighbor proposes the depth at
/// which the pixel ray meets the neighbor's tangent plane (taken with the
/// pixel's own normal); proposals are averaged with normal-affinity weights
/// max(0, n_p . n_q)^gamma and mixed into the old depth. Grazing pixels
/// (|n . ray| < 1e-6) and pixels with no usable proposal keep their depth.
inline DepthMap normal_to_depth(const DepthMap& depth, const NormalMap& normals,
                                const CameraIntrinsics& k, const RefineConfig& cfg = {}) {
  cfg.validate();
  require(depth.same_size(normals), "normal_to_depth: raster sizes must match");
  require(depth.width() == k.width && depth.height() == k.height,
          "normal_to_depth: raster size must match intrinsics");

  DepthMap out(depth.width(), depth.height());
  const int half = cfg.window / 2;
  parallel_for(0, depth.height(), [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const double z = depth.at(u, v);
      out.set(u, v, z);
      if (!normals.valid(u, v)) continue;
      const Eigen::Vector3d n = normals.at(u, v);
      const Eigen::Vector3d ray = k.ray(u, v);
      const double denom = n.dot(ray);
      if (std::abs(denom) < 1e-6) continue;

      double weight_sum = 0.0;
      double proposal_sum = 0.0;
      for (int dv = -half; dv <= half; ++dv) {
        for (int du = -half; du <= half; ++du) {
          if (du == 0 && dv == 0) continue;
          const int uu = u + du;
          const int vv = v + dv;
          if (!depth.in_bounds(uu, vv)) continue;
          if (!depth.valid(uu, vv) || !normals.valid(uu, vv)) continue;
          const double affinity = n.dot(normals.at(uu, vv));
          if (affinity <= 0.0) continue;
          const Eigen::Vector3d neighbor = depth.at(uu, vv) * k.ray(uu, vv);
          const double proposal = n.dot(neighbor) / denom;
          if (!std::isfinite(proposal) || proposal <= 0.0) continue;
          const double w = std::pow(affinity, cfg.normal_affinity_gamma);
          weight_sum += w;
          proposal_sum += w * proposal;
        }
      }
      if (weight_sum <= 0.0) continue;
      const double updated = (1.0 - cfg.blend) * z + cfg.blend * (proposal_sum / weight_sum);
      if (std::isfinite(updated) && updated > 0.0) out.set(u, v, updated);
    }
  });
  return out;
}

namespace detail {

inline NormalMap blend_normals(const NormalMap& current, const NormalMap& fresh,
                               double blend, const CameraIntrinsics& k) {
  NormalMap out(current.width(), current.height(), Eigen::Vector3d::UnitZ());
  for (int v = 0; v < current.height(); ++v) {
    for (int u = 0; u < current.width(); ++u) {
      const bool has_cur = current.valid(u, v);
      const bool has_new = fresh.valid(u, v);
      if (!has_cur && !has_new) continue;
      Eigen::Vector3d n;
      if (has_cur && has_new) {
        n = (1.0 - blend) * current.at(u, v) + blend * fresh.at(u, v);
        if (n.norm() < 1e-9) n = fresh.at(u, v);  // near-antipodal mix
      } else {
        n = has_new ? fresh.at(u, v) : current.at(u, v);
      }
      n.normalize();
      if (n.dot(k.ray(u, v)) > 0.0) n = -n;
      out.set(u, v, n);
    }
  }
  return out;
}

}  // namespace detail

/// Iterates normal-to-depth then depth-to-normal, blending the refreshed
/// normals into the current ones. Exact plane inputs are a fixed point.
inline std::pair<DepthMap, NormalMap> joint_refine(const DepthMap& depth,
                                                   const NormalMap& normals,
                                                   const CameraIntrinsics& k,
                                                   const RefineConfig& cfg = {}) {
  cfg.validate();
  DepthMap d = depth;
  NormalMap n = normals;
  for (int it = 0; it < cfg.iterations; ++it) {
    d = normal_to_depth(d, n, k, cfg);
    const NormalMap fresh = normals_from_depth(d, k, cfg.window);
    n = detail::blend_normals(n, fresh, cfg.blend, k);
  }
  return {std::move(d), std::move(n)};
}

/// Heuristic expected-error map: robust spread (MAD x 1.4826) of the
/// residuals from the best-fit window plane, floored at 0.1 mm. Stands in
/// for a learned error predictor as the e_p input of the reweighted loss.
inline ErrorMap estimate_error_map(const DepthMap& depth, const CameraIntrinsics& k,
                                   int window = 5) {
  require(window >= 3 && window % 2 == 1, "estimate_error_map: window must be odd >= 3");
  require(depth.width() == k.width && depth.height() == k.height,
          "estimate_error_map: raster size must match intrinsics");
  constexpr double kFloorMm = 0.1;
  ErrorMap err(depth.width(), depth.height());
  parallel_for(0, depth.height(), [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      Eigen::Vector3d n;
      double spread = 0.0;
      if (detail::window_plane_normal(depth, k, u, v, window, &n, nullptr, &spread)) {
        err.set(u, v, std::max(kFloorMm, spread));
      } else {
        err.set(u, v, kFloorMm);
      }
    }
  });
  return err;
}

}  // namespace tofgeo
