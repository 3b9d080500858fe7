#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "tofgeo/raster.hpp"

namespace tofgeo {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Dual-frequency 4-phase correlation frame. Channels are frequency-major:
/// f0 at phase offsets 0/90/180/270 degrees, then f1.
struct RawToFFrame {
  int width = 0;
  int height = 0;
  std::array<double, 2> freqs_hz{20e6, 100e6};
  std::array<std::vector<double>, 8> channels;

  void validate() const {
    require(width > 0 && height > 0, "raw frame: size must be positive");
    require(freqs_hz[0] > 0.0 && freqs_hz[1] > 0.0 && freqs_hz[0] != freqs_hz[1],
            "raw frame: frequencies must be positive and distinct");
    for (const auto& ch : channels) {
      require(ch.size() == static_cast<size_t>(width) * height,
              "raw frame: channel raster size mismatch");
    }
  }
};

struct SimulationConfig {
  std::array<double, 2> freqs_hz{20e6, 100e6};
  double amplitude = 1.0;
  double offset = 0.0;
  double shot_noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    require(amplitude > 0.0, "simulation: amplitude must be positive");
    require(shot_noise_sigma >= 0.0, "simulation: noise sigma must be non-negative");
    require(freqs_hz[0] > 0.0 && freqs_hz[1] > 0.0 && freqs_hz[0] != freqs_hz[1],
            "simulation: frequencies must be positive and distinct");
  }
};

/// Modulation phase for z-depth in millimeters: 4 pi f z / c.
inline double tof_phase(double depth_mm, double freq_hz) {
  return 4.0 * std::numbers::pi * freq_hz * (depth_mm / 1000.0) / kSpeedOfLight;
}

inline double wrap_phase(double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(phase, two_pi);
  if (w < 0.0) w += two_pi;
  return w;
}

inline double circular_distance(double a, double b) {
  const double two_pi = 2.0 * std::numbers::pi;
  double d = std::abs(wrap_phase(a) - wrap_phase(b));
  return std::min(d, two_pi - d);
}

/// Ideal 4-bucket correlation: channel(theta) = offset + A cos(phi - theta)
/// plus i.i.d. Gaussian shot noise. Invalid pixels return with amplitude 0.
/// Noise is drawn in row-major pixel order (8 draws per pixel) so frames are
/// bit-identical for a given seed.
inline RawToFFrame simulate_raw(const DepthMap& gt_depth, const SimulationConfig& cfg) {
  cfg.validate();
  validate_depth_map(gt_depth);
  RawToFFrame frame;
  frame.width = gt_depth.width();
  frame.height = gt_depth.height();
  frame.freqs_hz = cfg.freqs_hz;
  for (auto& ch : frame.channels) {
    ch.assign(static_cast<size_t>(frame.width) * frame.height, 0.0);
  }

  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const bool noisy = cfg.shot_noise_sigma > 0.0;

  std::ptrdiff_t i = 0;
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u, ++i) {
      const bool valid = gt_depth.valid(i);
      const double z = valid ? gt_depth[i] : 0.0;
      for (int f = 0; f < 2; ++f) {
        const double phi = tof_phase(z, cfg.freqs_hz[f]);
        for (int q = 0; q < 4; ++q) {
          const double theta = q * (std::numbers::pi / 2.0);
          double sample = cfg.offset;
          if (valid) sample += cfg.amplitude * std::cos(phi - theta);
          if (noisy) sample += cfg.shot_noise_sigma * noise(rng);
          frame.channels[f * 4 + q][i] = sample;
        }
      }
    }
  }
  return frame;
}

struct DecodeResult {
  Raster<double> phase;  // [0, 2 pi)
  ConfidenceMap confidence;
};

/// Standard 4-bucket decode for one frequency:
///   phase = atan2(C90 - C270, C0 - C180), confidence = amplitude estimate.
inline DecodeResult decode_phase(const RawToFFrame& frame, int freq_index) {
  frame.validate();
  require(freq_index == 0 || freq_index == 1, "decode: freq_index must be 0 or 1");
  const auto& c0 = frame.channels[freq_index * 4 + 0];
  const auto& c90 = frame.channels[freq_index * 4 + 1];
  const auto& c180 = frame.channels[freq_index * 4 + 2];
  const auto& c270 = frame.channels[freq_index * 4 + 3];

  DecodeResult out{Raster<double>(frame.width, frame.height, 0.0, true),
                   ConfidenceMap(frame.width, frame.height, 0.0, true)};
  const std::ptrdiff_t n = out.phase.size();
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double re = c0[i] - c180[i];
    const double im = c90[i] - c270[i];
    out.phase[i] = wrap_phase(std::atan2(im, re));
    out.confidence[i] = 0.5 * std::sqrt(re * re + im * im);
  }
  return out;
}

struct UnwrapConfig {
  double residual_threshold_rad = 0.5;
  double min_confidence = 0.0;  // pixels at or below are invalid
};

/// Chinese-remainder style search over wrap counts of the second frequency.
/// Candidate depths from phase2 are scored by how well they predict phase1;
/// pixels whose best circular residual exceeds the threshold are invalid.
/// Unambiguous range is c / (2 gcd(f1, f2)).
inline DepthMap unwrap_dual_frequency(const Raster<double>& phase1,
                                      const Raster<double>& phase2,
                                      const std::array<double, 2>& freqs_hz,
                                      const UnwrapConfig& cfg = {},
                                      const ConfidenceMap* conf1 = nullptr,
                                      const ConfidenceMap* conf2 = nullptr) {
  require(phase1.same_size(phase2), "unwrap: phase rasters must match in size");
  const auto f1_int = static_cast<std::int64_t>(std::llround(freqs_hz[0]));
  const auto f2_int = static_cast<std::int64_t>(std::llround(freqs_hz[1]));
  require(f1_int > 0 && f2_int > 0, "unwrap: frequencies must be positive integer Hz");
  const std::int64_t wrap_counts = f2_int / std::gcd(f1_int, f2_int);

  const double f1 = freqs_hz[0];
  const double f2 = freqs_hz[1];
  const double two_pi = 2.0 * std::numbers::pi;
  // mm of depth per radian of phase at f2
  const double mm_per_rad = kSpeedOfLight / (4.0 * std::numbers::pi * f2) * 1000.0;

  DepthMap depth(phase1.width(), phase1.height());
  for (std::ptrdiff_t i = 0; i < phase1.size(); ++i) {
    if (!phase1.valid(i) || !phase2.valid(i)) continue;
    if (conf1 && (*conf1)[i] <= cfg.min_confidence) continue;
    if (conf2 && (*conf2)[i] <= cfg.min_confidence) continue;

    double best_resid = std::numeric_limits<double>::infinity();
    double best_depth = 0.0;
    for (std::int64_t k = 0; k < wrap_counts; ++k) {
      const double z_mm = (phase2[i] + two_pi * static_cast<double>(k)) * mm_per_rad;
      const double predicted1 = wrap_phase(tof_phase(z_mm, f1));
      const double resid = circular_distance(predicted1, phase1[i]);
      if (resid < best_resid) {
        best_resid = resid;
        best_depth = z_mm;
      }
    }
    if (best_resid <= cfg.residual_threshold_rad && best_depth > 0.0) {
      depth.set(i, best_depth);
    }
  }
  return depth;
}

/// Per-pixel mean over the frames where the pixel is valid; a pixel stays
/// valid iff it is valid in at least half of the frames.
inline DepthMap average_frames(const std::vector<DepthMap>& frames) {
  require(!frames.empty(), "average_frames: need at least one frame");
  const DepthMap& first = frames.front();
  for (const auto& f : frames) {
    require(f.same_size(first), "average_frames: frame sizes must match");
  }
  DepthMap out(first.width(), first.height());
  const auto n = static_cast<std::ptrdiff_t>(frames.size());
  for (std::ptrdiff_t i = 0; i < first.size(); ++i) {
    double sum = 0.0;
    std::ptrdiff_t count = 0;
    for (const auto& f : frames) {
      if (!f.valid(i)) continue;
      sum += f[i];
      ++count;
    }
    if (2 * count >= n && count > 0) out.set(i, sum / static_cast<double>(count));
  }
  return out;
}

}  // namespace tofgeo
