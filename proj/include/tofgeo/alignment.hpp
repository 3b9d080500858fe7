#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tofgeo/geometry.hpp"
#include "tofgeo/nnsearch.hpp"
#include "tofgeo/pointcloud.hpp"

namespace tofgeo {

struct ICPConfig {
  int max_iterations = 50;
  double convergence_eps_mm = 1e-4;   // stop when RMS residual change drops below
  double max_pair_distance_mm = 100.0;
  double trim_fraction = 0.1;         // worst correspondences dropped per iteration

  void validate() const {
    require(max_iterations >= 1, "icp: max_iterations must be >= 1");
    require(trim_fraction >= 0.0 && trim_fraction < 0.5,
            "icp: trim_fraction must be in [0, 0.5)");
    require(max_pair_distance_mm > 0.0, "icp: pair distance gate must be positive");
  }
};

struct ICPResult {
  RigidTransform transform;  // maps source into the target frame
  double rms_residual_mm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

struct Correspondences {
  std::vector<Eigen::Vector3d> src;  // transformed source points
  std::vector<Eigen::Vector3d> tgt;
  double rms = 0.0;
};

/// Gated nearest-neighbor pairs, trimmed of the worst fraction by distance.
inline Correspondences gather_correspondences(const PointCloud& source,
                                              const RigidTransform& t,
                                              const PointIndex& target_index,
                                              const PointCloud& target,
                                              const ICPConfig& cfg) {
  struct Pair {
    double d2;
    std::int64_t src_id;
    std::int64_t tgt_id;
  };
  const double gate2 = cfg.max_pair_distance_mm * cfg.max_pair_distance_mm;
  std::vector<Eigen::Vector3d> moved(source.size());
  std::vector<NearestResult> nn(source.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(source.size()), [&](std::ptrdiff_t i) {
    moved[i] = t.apply(source.points[i]);
    nn[i] = target_index.nearest(moved[i]);
  });
  std::vector<Pair> pairs;
  pairs.reserve(source.size());
  for (size_t i = 0; i < source.size(); ++i) {
    if (nn[i].squared_dist <= gate2) {
      pairs.push_back({nn[i].squared_dist, static_cast<std::int64_t>(i), nn[i].id});
    }
  }
  const auto keep = static_cast<size_t>(
      std::ceil((1.0 - cfg.trim_fraction) * static_cast<double>(pairs.size())));
  if (keep < pairs.size()) {
    std::nth_element(pairs.begin(), pairs.begin() + keep, pairs.end(),
                     [](const Pair& a, const Pair& b) {
                       return a.d2 != b.d2 ? a.d2 < b.d2 : a.src_id < b.src_id;
                     });
    pairs.resize(keep);
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return a.src_id < b.src_id;
    });
  }

  Correspondences out;
  out.src.reserve(pairs.size());
  out.tgt.reserve(pairs.size());
  double sum = 0.0;
  for (const Pair& pr : pairs) {
    out.src.push_back(moved[pr.src_id]);
    out.tgt.push_back(target.points[pr.tgt_id]);
    sum += pr.d2;
  }
  out.rms = pairs.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(pairs.size()));
  return out;
}

/// Closed-form least-squares rigid motion mapping src onto tgt (Kabsch).
inline RigidTransform kabsch(const std::vector<Eigen::Vector3d>& src,
                             const std::vector<Eigen::Vector3d>& tgt) {
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d tgt_mean = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    src_mean += src[i];
    tgt_mean += tgt[i];
  }
  src_mean /= static_cast<double>(src.size());
  tgt_mean /= static_cast<double>(src.size());

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    h += (src[i] - src_mean) * (tgt[i] - tgt_mean).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = tgt_mean - t.rotation * src_mean;
  return t;
}

}  // namespace detail

/// Point-to-point ICP with distance gating and trimming. Any update that
/// would raise the trimmed RMS on the current correspondence set is
/// rejected, so the residual is non-increasing per accepted step.
inline ICPResult icp(const PointCloud& source, const PointCloud& target,
                     const RigidTransform& init = RigidTransform::identity(),
                     const ICPConfig& cfg = {}) {
  cfg.validate();
  require(source.size() >= 3 && target.size() >= 3,
          "icp: clouds must have at least 3 points");
  const PointIndex target_index(target);

  ICPResult result;
  result.transform = init;
  double prev_rms = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    auto corr = detail::gather_correspondences(source, result.transform, target_index,
                                               target, cfg);
    if (corr.src.size() < 3) {
      throw NumericalError("icp: fewer than 3 correspondences survive gating");
    }
    result.iterations = iter + 1;
    result.rms_residual_mm = corr.rms;
    if (std::abs(prev_rms - corr.rms) < cfg.convergence_eps_mm) {
      result.converged = true;
      break;
    }
    prev_rms = corr.rms;

    const RigidTransform update = detail::kabsch(corr.src, corr.tgt);
    double sum = 0.0;
    for (size_t i = 0; i < corr.src.size(); ++i) {
      sum += (update.apply(corr.src[i]) - corr.tgt[i]).squaredNorm();
    }
    const double updated_rms = std::sqrt(sum / static_cast<double>(corr.src.size()));
    // least squares cannot raise the residual; the slack absorbs fp noise
    if (updated_rms > corr.rms + 1e-9) break;
    result.transform = update * result.transform;
    result.rms_residual_mm = updated_rms;
  }
  return result;
}

/// Fuses per-scene ICP results into one rig transform: arithmetic mean of
/// translations, chordal L2 mean of rotations (principal eigenvector of the
/// hemisphere-aligned quaternion outer-product sum).
inline RigidTransform average_transforms(const std::vector<ICPResult>& results) {
  require(!results.empty(), "average_transforms: need at least one result");

  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix4d accum = Eigen::Matrix4d::Zero();
  Eigen::Quaterniond first(results.front().transform.rotation);
  for (const ICPResult& r : results) {
    translation += r.transform.translation;
    Eigen::Quaterniond qu(r.transform.rotation);
    if (qu.dot(first) < 0.0) qu.coeffs() = -qu.coeffs();
    accum += qu.coeffs() * qu.coeffs().transpose();
  }
  translation /= static_cast<double>(results.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(accum);
  const Eigen::Vector4d principal = es.eigenvectors().col(3);  // largest eigenvalue
  Eigen::Quaterniond mean(principal(3), principal(0), principal(1), principal(2));
  mean.normalize();

  RigidTransform out;
  out.rotation = mean.toRotationMatrix();
  out.translation = translation;
  return out;
}

}  // namespace tofgeo
