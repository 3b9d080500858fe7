#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tofgeo/geometry.hpp"
#include "tofgeo/nnsearch.hpp"
#include "tofgeo/raster.hpp"

namespace tofgeo {

struct ReweightedL1Config {
  double delta_mm = 20.0;
  double epsilon = 0.001;
  bool mean_reduction = false;  // the printed form sums over pixels

  void validate() const {
    require(delta_mm > 0.0, "reweighted l1: delta must be positive");
    require(epsilon > 0.0, "reweighted l1: epsilon must be positive");
  }
};

struct JitterConfig {
  double offset_mm = 10.0;  // 1 centimeter

  void validate() const { require(offset_mm > 0.0, "jitter: offset must be positive"); }
};

/// Scalar loss plus whichever gradients the operation defines. point_grad
/// aligns index-wise with the first cloud argument; rasters with the
/// prediction raster.
struct LossReport {
  double value = 0.0;
  std::optional<Raster<double>> depth_grad;
  std::vector<Eigen::Vector3d> point_grad;
  std::optional<Raster<Eigen::Vector3d>> normal_grad;
  Eigen::Vector3d selected_jitter = Eigen::Vector3d::Zero();
  int selected_jitter_index = 0;  // 0 identity, then +x, -x, +y, -y, +z, -z
  std::ptrdiff_t excluded = 0;
  std::ptrdiff_t n_valid = 0;
  double l1_term = 0.0;       // weighted components of the combined loss
  double chamfer_term = 0.0;
};

/// Per-pixel weight lambda = gt / (err + eps), quadratic within delta of the
/// ground truth and linear beyond it; the two branches agree at the boundary.
inline LossReport reweighted_smoothed_l1(const DepthMap& pred, const DepthMap& gt,
                                         const ErrorMap& err,
                                         const ReweightedL1Config& cfg = {},
                                         bool with_grad = true) {
  cfg.validate();
  require(pred.same_size(gt) && pred.same_size(err),
          "reweighted l1: raster sizes must match");

  LossReport report;
  if (with_grad) report.depth_grad.emplace(pred.width(), pred.height(), 0.0);
  std::vector<double> terms;
  terms.reserve(static_cast<size_t>(pred.size()));
  for (std::ptrdiff_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid(i) || !gt.valid(i) || !err.valid(i)) continue;
    const double diff = pred[i] - gt[i];
    const double lambda = gt[i] / (err[i] + cfg.epsilon);
    double term, grad;
    if (std::abs(diff) < cfg.delta_mm) {
      const double scaled = diff / cfg.delta_mm;
      term = 0.5 * lambda * scaled * scaled;
      grad = lambda * diff / (cfg.delta_mm * cfg.delta_mm);
    } else {
      term = lambda * (std::abs(diff) / cfg.delta_mm - 0.5);
      grad = lambda * (diff > 0.0 ? 1.0 : -1.0) / cfg.delta_mm;
    }
    terms.push_back(term);
    if (with_grad) report.depth_grad->set(i, grad);
  }
  if (terms.empty()) {
    throw NumericalError("reweighted l1: no common valid pixels");
  }
  report.n_valid = static_cast<std::ptrdiff_t>(terms.size());
  report.value = ordered_sum(terms);
  if (cfg.mean_reduction) {
    const double n = static_cast<double>(terms.size());
    report.value /= n;
    if (with_grad) {
      for (std::ptrdiff_t i = 0; i < report.depth_grad->size(); ++i) {
        if (report.depth_grad->valid(i)) (*report.depth_grad)[i] /= n;
      }
    }
  }
  return report;
}

namespace detail {

struct ChamferSide {
  std::vector<double> terms;
  std::vector<std::int64_t> nn;
};

/// One directional sum of the Chamfer loss with the source cloud shifted by
/// `offset`. The reverse direction reuses the unshifted index by querying
/// q - offset.
inline ChamferSide chamfer_terms(const std::vector<Eigen::Vector3d>& queries,
                                 const PointIndex& index,
                                 const Eigen::Vector3d& offset, bool keep_nn) {
  ChamferSide side;
  side.terms.resize(queries.size());
  if (keep_nn) side.nn.resize(queries.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(queries.size()), [&](std::ptrdiff_t i) {
    const NearestResult r = index.nearest(queries[i] + offset);
    side.terms[i] = r.squared_dist;
    if (keep_nn) side.nn[i] = r.id;
  });
  return side;
}

}  // namespace detail

/// Standard Chamfer loss: sum of squared nearest-neighbor distances in both
/// directions, mm^2. The gradient treats nearest assignments as fixed.
inline LossReport chamfer(const PointCloud& p, const PointCloud& q,
                          bool with_grad = true) {
  require(!p.empty() && !q.empty(), "chamfer: clouds must be non-empty");
  const PointIndex index_q(q);
  const PointIndex index_p(p);
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  const auto forward = detail::chamfer_terms(p.points, index_q, zero, with_grad);
  const auto reverse = detail::chamfer_terms(q.points, index_p, zero, with_grad);

  LossReport report;
  report.value = ordered_sum(forward.terms) + ordered_sum(reverse.terms);
  report.n_valid = static_cast<std::ptrdiff_t>(p.size() + q.size());
  if (with_grad) {
    report.point_grad.assign(p.size(), Eigen::Vector3d::Zero());
    for (size_t i = 0; i < p.size(); ++i) {
      report.point_grad[i] = 2.0 * (p.points[i] - q.points[forward.nn[i]]);
    }
    for (size_t j = 0; j < q.size(); ++j) {
      const std::int64_t a = reverse.nn[j];
      report.point_grad[a] += 2.0 * (p.points[a] - q.points[j]);
    }
  }
  return report;
}

namespace detail {

inline std::array<Eigen::Vector3d, 7> jitter_offsets(double offset_mm) {
  return {Eigen::Vector3d::Zero(),
          Eigen::Vector3d(offset_mm, 0, 0),  Eigen::Vector3d(-offset_mm, 0, 0),
          Eigen::Vector3d(0, offset_mm, 0),  Eigen::Vector3d(0, -offset_mm, 0),
          Eigen::Vector3d(0, 0, offset_mm),  Eigen::Vector3d(0, 0, -offset_mm)};
}

}  // namespace detail

/// Chamfer over the identity and the six +-axis shifts of P, keeping the
/// lowest of the seven scores. Ties go to the identity, then to the fixed
/// axis order. The gradient is evaluated at the winning shift, which is the
/// identity map on point coordinates.
inline LossReport robust_chamfer(const PointCloud& p, const PointCloud& q,
                                 const JitterConfig& cfg = {}, bool with_grad = true) {
  cfg.validate();
  require(!p.empty() && !q.empty(), "robust chamfer: clouds must be non-empty");
  const PointIndex index_q(q);
  const PointIndex index_p(p);
  const auto offsets = detail::jitter_offsets(cfg.offset_mm);

  int best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int o = 0; o < 7; ++o) {
    const auto forward = detail::chamfer_terms(p.points, index_q, offsets[o], false);
    const auto reverse = detail::chamfer_terms(q.points, index_p, -offsets[o], false);
    const double value = ordered_sum(forward.terms) + ordered_sum(reverse.terms);
    if (value < best_value) {
      best_value = value;
      best = o;
    }
  }

  LossReport report;
  report.value = best_value;
  report.selected_jitter = offsets[best];
  report.selected_jitter_index = best;
  report.n_valid = static_cast<std::ptrdiff_t>(p.size() + q.size());
  if (with_grad) {
    const auto forward = detail::chamfer_terms(p.points, index_q, offsets[best], true);
    const auto reverse = detail::chamfer_terms(q.points, index_p, -offsets[best], true);
    report.point_grad.assign(p.size(), Eigen::Vector3d::Zero());
    for (size_t i = 0; i < p.size(); ++i) {
      report.point_grad[i] =
          2.0 * (p.points[i] + offsets[best] - q.points[forward.nn[i]]);
    }
    for (size_t j = 0; j < q.size(); ++j) {
      const std::int64_t a = reverse.nn[j];
      report.point_grad[a] += 2.0 * (p.points[a] + offsets[best] - q.points[j]);
    }
  }
  return report;
}

/// Mean over valid pixels of 1 - cos(angle between prediction and ground
/// truth). Zero-length vectors at valid pixels are excluded and counted.
inline LossReport cosine_loss(const NormalMap& pred, const NormalMap& gt,
                              bool with_grad = true) {
  require(pred.same_size(gt), "cosine loss: raster sizes must match");
  LossReport report;
  if (with_grad) {
    report.normal_grad.emplace(pred.width(), pred.height(), Eigen::Vector3d::Zero());
  }
  std::vector<double> terms;
  std::vector<std::ptrdiff_t> pixels;
  for (std::ptrdiff_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid(i) || !gt.valid(i)) continue;
    const double norm1 = pred[i].norm();
    const double norm2 = gt[i].norm();
    if (norm1 < 1e-12 || norm2 < 1e-12) {
      ++report.excluded;
      continue;
    }
    const Eigen::Vector3d u = pred[i] / norm1;
    const Eigen::Vector3d v = gt[i] / norm2;
    terms.push_back(1.0 - u.dot(v));
    pixels.push_back(i);
    if (with_grad) {
      // d(1 - u.v)/d n1 = -(v - (u.v) u) / |n1|
      report.normal_grad->set(i, -(v - u.dot(v) * u) / norm1);
    }
  }
  if (terms.empty()) {
    throw NumericalError("cosine loss: no common valid pixels");
  }
  const double n = static_cast<double>(terms.size());
  report.n_valid = static_cast<std::ptrdiff_t>(terms.size());
  report.value = ordered_sum(terms) / n;
  if (with_grad) {
    for (std::ptrdiff_t i : pixels) (*report.normal_grad)[i] /= n;
  }
  return report;
}

struct CombinedLossConfig {
  double w_l1 = 1.0;
  double w_chamfer = 1.0;
  bool normalize_chamfer = true;  // scale the 3D term by 1 / (|P| + |Q|)
  bool jitter = true;
  JitterConfig jitter_cfg{};
  ReweightedL1Config l1{};
};

/// Combined 2D + 3D objective: w1 * reweighted smoothed l1 against the
/// ground-truth depth plus w2 * robust Chamfer between the backprojected
/// prediction and the ground-truth cloud. The Chamfer point gradient chains
/// onto depth through d point / d z = pixel ray.
inline LossReport combined_depth_loss(const DepthMap& pred, const PointCloud& gt_cloud,
                                      const DepthMap& gt_depth, const ErrorMap& err,
                                      const CameraIntrinsics& k,
                                      const CombinedLossConfig& cfg = {},
                                      bool with_grad = true) {
  require(pred.width() == k.width && pred.height() == k.height,
          "combined loss: prediction size must match intrinsics");
  LossReport report;
  report.depth_grad.emplace(pred.width(), pred.height(), 0.0);

  if (cfg.w_l1 != 0.0) {
    const LossReport l1 = reweighted_smoothed_l1(pred, gt_depth, err, cfg.l1, with_grad);
    report.l1_term = cfg.w_l1 * l1.value;
    if (with_grad) {
      for (std::ptrdiff_t i = 0; i < pred.size(); ++i) {
        if (l1.depth_grad->valid(i)) {
          report.depth_grad->set(i, cfg.w_l1 * (*l1.depth_grad)[i]);
        }
      }
    }
  }

  if (cfg.w_chamfer != 0.0) {
    const PointCloud p = backproject(pred, k);
    const LossReport ch =
        cfg.jitter ? robust_chamfer(p, gt_cloud, cfg.jitter_cfg, with_grad)
                   : chamfer(p, gt_cloud, with_grad);
    const double scale =
        cfg.normalize_chamfer
            ? cfg.w_chamfer / static_cast<double>(p.size() + gt_cloud.size())
            : cfg.w_chamfer;
    report.chamfer_term = scale * ch.value;
    report.selected_jitter = ch.selected_jitter;
    report.selected_jitter_index = ch.selected_jitter_index;
    if (with_grad) {
      std::size_t point_id = 0;
      for (int v = 0; v < pred.height(); ++v) {
        for (int u = 0; u < pred.width(); ++u) {
          if (!pred.valid(u, v)) continue;
          const double g = scale * ch.point_grad[point_id].dot(k.ray(u, v));
          if (report.depth_grad->valid(u, v)) {
            report.depth_grad->at(u, v) += g;
          } else {
            report.depth_grad->set(u, v, g);
          }
          ++point_id;
        }
      }
    }
  } else if (with_grad) {
    // gradient is defined on every valid prediction pixel even without the 3D term
    for (std::ptrdiff_t i = 0; i < pred.size(); ++i) {
      if (pred.valid(i) && !report.depth_grad->valid(i)) report.depth_grad->set(i, 0.0);
    }
  }

  report.value = report.l1_term + report.chamfer_term;
  report.n_valid = pred.valid_count();
  if (!with_grad) report.depth_grad.reset();
  return report;
}

}  // namespace tofgeo
