#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tofgeo/tofgeo.hpp"

namespace testutil {

inline tofgeo::CameraIntrinsics intrinsics(int width, int height, double focal) {
  return {focal, focal, (width - 1) / 2.0, (height - 1) / 2.0, width, height};
}

/// Exact z-depth raster of the 3D plane normal . X = offset.
inline tofgeo::DepthMap plane_depth(const tofgeo::CameraIntrinsics& k,
                                    const Eigen::Vector3d& normal, double offset) {
  tofgeo::DepthMap depth(k.width, k.height);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double denom = normal.dot(k.ray(u, v));
      if (std::abs(denom) < 1e-12) continue;
      const double z = offset / denom;
      if (z > 0.0) depth.set(u, v, z);
    }
  }
  return depth;
}

inline tofgeo::DepthMap constant_depth(const tofgeo::CameraIntrinsics& k, double z) {
  return tofgeo::DepthMap(k.width, k.height, z, true);
}

inline tofgeo::PointCloud random_cloud(std::size_t count, std::mt19937_64& rng,
                                       double extent_mm = 500.0,
                                       const Eigen::Vector3d& center = {0, 0, 1000}) {
  std::uniform_real_distribution<double> coord(-extent_mm, extent_mm);
  tofgeo::PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    cloud.points.push_back(center + Eigen::Vector3d(coord(rng), coord(rng), coord(rng)));
  }
  return cloud;
}

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    path_ = base / ("tofgeo_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tofgeo::IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
