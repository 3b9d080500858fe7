#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tofgeo/losses.hpp"
#include "tofgeo/raster.hpp"

namespace tofgeo {

struct OptimizeConfig {
  int steps = 200;
  double step_size = 0.0;  // <= 0 tunes from the first gradient
  double momentum = 0.9;
  int log_every = 10;      // progress print cadence, trace records every step
  CombinedLossConfig loss{};

  void validate() const {
    require(steps >= 1, "optimizer: steps must be >= 1");
    require(momentum >= 0.0 && momentum < 1.0, "optimizer: momentum must be in [0, 1)");
  }
};

struct TraceEntry {
  int step = 0;
  double total = 0.0;
  double l1_term = 0.0;
  double chamfer_term = 0.0;
  int selected_jitter = 0;
};

inline const char* jitter_label(int index) {
  static constexpr const char* kLabels[7] = {"identity", "+x", "-x", "+y", "-y", "+z", "-z"};
  return (index >= 0 && index < 7) ? kLabels[index] : "?";
}

struct OptimizeResult {
  DepthMap depth;
  std::vector<TraceEntry> trace;
};

/// Momentum gradient descent on the combined loss with step-halving
/// backtracking, so the loss trace is non-increasing. Nearest-neighbor
/// assignments (and the winning jitter) are re-evaluated every step.
/// Invalid pixels are never modified.
inline OptimizeResult optimize_depth(const DepthMap& init, const PointCloud& gt_cloud,
                                     const DepthMap& gt_depth, const ErrorMap& err,
                                     const CameraIntrinsics& k,
                                     const OptimizeConfig& cfg = {}) {
  cfg.validate();
  validate_depth_map(init);

  OptimizeResult result;
  result.depth = init;
  LossReport report = combined_depth_loss(result.depth, gt_cloud, gt_depth, err, k,
                                          cfg.loss, /*with_grad=*/true);
  result.trace.push_back({0, report.value, report.l1_term, report.chamfer_term,
                          report.selected_jitter_index});

  double base_step = cfg.step_size;
  if (base_step <= 0.0) {
    // first-step line-search seed: largest pixel moves 10 mm
    double max_grad = 0.0;
    for (std::ptrdiff_t i = 0; i < report.depth_grad->size(); ++i) {
      if (report.depth_grad->valid(i)) {
        max_grad = std::max(max_grad, std::abs((*report.depth_grad)[i]));
      }
    }
    base_step = max_grad > 0.0 ? 10.0 / max_grad : 1.0;
  }

  Raster<double> velocity(init.width(), init.height(), 0.0, true);
  for (int step = 1; step <= cfg.steps; ++step) {
    for (std::ptrdiff_t i = 0; i < velocity.size(); ++i) {
      const double g = report.depth_grad->valid(i) ? (*report.depth_grad)[i] : 0.0;
      velocity[i] = cfg.momentum * velocity[i] + g;
    }

    auto propose = [&](double eta) {
      DepthMap candidate = result.depth;
      for (std::ptrdiff_t i = 0; i < candidate.size(); ++i) {
        if (!candidate.valid(i) || !report.depth_grad->valid(i)) continue;
        candidate.set(i, std::max(1e-3, candidate[i] - eta * velocity[i]));
      }
      return candidate;
    };

    // backtracking restarts from the tuned base step every iteration
    auto line_search = [&](DepthMap* candidate, LossReport* cand_report) {
      double eta = base_step;
      *candidate = propose(eta);
      *cand_report = combined_depth_loss(*candidate, gt_cloud, gt_depth, err, k, cfg.loss, true);
      int halvings = 0;
      while (cand_report->value > report.value && halvings < 10) {
        eta /= 2.0;
        ++halvings;
        *candidate = propose(eta);
        *cand_report = combined_depth_loss(*candidate, gt_cloud, gt_depth, err, k, cfg.loss, true);
      }
      return cand_report->value <= report.value;
    };

    DepthMap candidate;
    LossReport cand_report;
    if (!line_search(&candidate, &cand_report)) {
      // momentum can point uphill; restart from the raw gradient before giving up
      for (std::ptrdiff_t i = 0; i < velocity.size(); ++i) {
        velocity[i] = report.depth_grad->valid(i) ? (*report.depth_grad)[i] : 0.0;
      }
      if (!line_search(&candidate, &cand_report)) break;
    }

    result.depth = std::move(candidate);
    report = std::move(cand_report);
    result.trace.push_back({step, report.value, report.l1_term, report.chamfer_term,
                            report.selected_jitter_index});
  }
  return result;
}

}  // namespace tofgeo
