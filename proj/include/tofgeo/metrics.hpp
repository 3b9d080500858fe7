#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "tofgeo/geometry.hpp"
#include "tofgeo/raster.hpp"

namespace tofgeo {

/// Depth errors over mutually valid pixels, millimeters. ABS and SQ divide
/// by the ground-truth depth (ABS unitless, SQ in mm).
struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel_mm = 0.0;
  double rmse_mm = 0.0;
  double mae_mm = 0.0;
  std::ptrdiff_t n_valid = 0;
};

struct NormalMetrics {
  double mae_rad = 0.0;
  double pct_within_20deg = 0.0;
  std::ptrdiff_t n_valid = 0;
};

inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  require(pred.same_size(gt), "depth metrics: raster sizes must match");
  std::vector<double> abs_terms, sq_terms, se_terms, ae_terms;
  for (std::ptrdiff_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid(i) || !gt.valid(i)) continue;
    const double diff = pred[i] - gt[i];
    abs_terms.push_back(std::abs(diff) / gt[i]);
    sq_terms.push_back(diff * diff / gt[i]);
    se_terms.push_back(diff * diff);
    ae_terms.push_back(std::abs(diff));
  }
  if (abs_terms.empty()) {
    throw NumericalError("depth metrics: no common valid pixels");
  }
  const double n = static_cast<double>(abs_terms.size());
  DepthMetrics m;
  m.abs_rel = ordered_sum(abs_terms) / n;
  m.sq_rel_mm = ordered_sum(sq_terms) / n;
  m.rmse_mm = std::sqrt(ordered_sum(se_terms) / n);
  m.mae_mm = ordered_sum(ae_terms) / n;
  m.n_valid = static_cast<std::ptrdiff_t>(abs_terms.size());
  return m;
}

inline NormalMetrics normal_metrics(const NormalMap& pred, const NormalMap& gt) {
  require(pred.same_size(gt), "normal metrics: raster sizes must match");
  const double limit = 20.0 * std::numbers::pi / 180.0;
  std::vector<double> angles;
  std::ptrdiff_t within = 0;
  for (std::ptrdiff_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid(i) || !gt.valid(i)) continue;
    const double c = std::clamp(pred[i].dot(gt[i]), -1.0, 1.0);
    const double angle = std::acos(c);
    angles.push_back(angle);
    if (angle < limit) ++within;
  }
  if (angles.empty()) {
    throw NumericalError("normal metrics: no common valid pixels");
  }
  NormalMetrics m;
  m.mae_rad = ordered_sum(angles) / static_cast<double>(angles.size());
  m.pct_within_20deg = static_cast<double>(within) / static_cast<double>(angles.size());
  m.n_valid = static_cast<std::ptrdiff_t>(angles.size());
  return m;
}

/// Projects the ground-truth cloud onto the prediction's raster, derives
/// normals for both maps with the same plane-fit window, and evaluates
/// depth and normal metrics over the common mask.
inline std::pair<DepthMetrics, NormalMetrics> evaluate_pair(const DepthMap& pred_depth,
                                                            const PointCloud& gt_cloud,
                                                            const CameraIntrinsics& k,
                                                            int window = 5) {
  require(pred_depth.width() == k.width && pred_depth.height() == k.height,
          "evaluate_pair: prediction size must match intrinsics");
  const DepthMap gt_depth = project(gt_cloud, k).depth;
  const NormalMap pred_normals = normals_from_depth(pred_depth, k, window);
  const NormalMap gt_normals = normals_from_depth(gt_depth, k, window);
  return {depth_metrics(pred_depth, gt_depth), normal_metrics(pred_normals, gt_normals)};
}

}  // namespace tofgeo
