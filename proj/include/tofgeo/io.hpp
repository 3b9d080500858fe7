#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tofgeo/alignment.hpp"
#include "tofgeo/camera.hpp"
#include "tofgeo/metrics.hpp"
#include "tofgeo/optimizer.hpp"
#include "tofgeo/pointcloud.hpp"
#include "tofgeo/raster.hpp"
#include "tofgeo/scenegen.hpp"
#include "tofgeo/tofsim.hpp"

namespace tofgeo {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace detail {

inline constexpr std::uint32_t kCanonicalNanF32 = 0x7FC00000u;

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated file: " + path);
  return value;
}

inline void write_f32(std::ofstream& out, double value, bool valid) {
  std::uint32_t bits =
      valid ? std::bit_cast<std::uint32_t>(static_cast<float>(value)) : kCanonicalNanF32;
  write_raw(out, bits);
}

/// %.17g round-trips doubles exactly and keeps text formats byte-stable.
inline std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace detail

// --- TFDR: scalar raster (depth / confidence / error), f32, NaN = invalid ---

inline void write_tfdr(const std::string& path, const Raster<double>& raster) {
  auto out = detail::open_output(path);
  out.write("TFDR", 4);
  detail::write_raw(out, static_cast<std::uint32_t>(raster.width()));
  detail::write_raw(out, static_cast<std::uint32_t>(raster.height()));
  for (std::ptrdiff_t i = 0; i < raster.size(); ++i) {
    detail::write_f32(out, raster[i], raster.valid(i));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Raster<double> read_tfdr(const std::string& path) {
  auto in = detail::open_input(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TFDR", 4) != 0) throw IoError("not a TFDR file: " + path);
  const auto w = detail::read_raw<std::uint32_t>(in, path);
  const auto h = detail::read_raw<std::uint32_t>(in, path);
  require(w > 0 && h > 0, "TFDR: degenerate raster size in " + path);
  Raster<double> raster(static_cast<int>(w), static_cast<int>(h));
  for (std::ptrdiff_t i = 0; i < raster.size(); ++i) {
    const float v = std::bit_cast<float>(detail::read_raw<std::uint32_t>(in, path));
    if (!std::isnan(v)) raster.set(i, v);
  }
  return raster;
}

// --- TFNR: normal raster, 3 x f32 per pixel ---

inline void write_tfnr(const std::string& path, const NormalMap& normals) {
  auto out = detail::open_output(path);
  out.write("TFNR", 4);
  detail::write_raw(out, static_cast<std::uint32_t>(normals.width()));
  detail::write_raw(out, static_cast<std::uint32_t>(normals.height()));
  for (std::ptrdiff_t i = 0; i < normals.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      detail::write_f32(out, normals[i][a], normals.valid(i));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline NormalMap read_tfnr(const std::string& path) {
  auto in = detail::open_input(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TFNR", 4) != 0) throw IoError("not a TFNR file: " + path);
  const auto w = detail::read_raw<std::uint32_t>(in, path);
  const auto h = detail::read_raw<std::uint32_t>(in, path);
  require(w > 0 && h > 0, "TFNR: degenerate raster size in " + path);
  NormalMap normals(static_cast<int>(w), static_cast<int>(h), Eigen::Vector3d::UnitZ());
  for (std::ptrdiff_t i = 0; i < normals.size(); ++i) {
    Eigen::Vector3d n;
    bool valid = true;
    for (int a = 0; a < 3; ++a) {
      const float v = std::bit_cast<float>(detail::read_raw<std::uint32_t>(in, path));
      if (std::isnan(v)) valid = false;
      n[a] = v;
    }
    if (valid) normals.set(i, n);
  }
  return normals;
}

// --- TFRW: raw correlation frame, 8 channels channel-major ---

inline void write_tfrw(const std::string& path, const RawToFFrame& frame) {
  frame.validate();
  auto out = detail::open_output(path);
  out.write("TFRW", 4);
  detail::write_raw(out, static_cast<std::uint32_t>(frame.width));
  detail::write_raw(out, static_cast<std::uint32_t>(frame.height));
  detail::write_raw(out, static_cast<std::uint8_t>(8));
  detail::write_raw(out, frame.freqs_hz[0]);
  detail::write_raw(out, frame.freqs_hz[1]);
  for (const auto& channel : frame.channels) {
    for (double v : channel) {
      detail::write_raw(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline RawToFFrame read_tfrw(const std::string& path) {
  auto in = detail::open_input(path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TFRW", 4) != 0) throw IoError("not a TFRW file: " + path);
  RawToFFrame frame;
  frame.width = static_cast<int>(detail::read_raw<std::uint32_t>(in, path));
  frame.height = static_cast<int>(detail::read_raw<std::uint32_t>(in, path));
  const auto channels = detail::read_raw<std::uint8_t>(in, path);
  if (channels != 8) throw IoError("TFRW: expected 8 channels in " + path);
  frame.freqs_hz[0] = detail::read_raw<double>(in, path);
  frame.freqs_hz[1] = detail::read_raw<double>(in, path);
  require(frame.width > 0 && frame.height > 0, "TFRW: degenerate raster size in " + path);
  const auto n = static_cast<size_t>(frame.width) * frame.height;
  for (auto& channel : frame.channels) {
    channel.resize(n);
    for (auto& v : channel) {
      v = std::bit_cast<float>(detail::read_raw<std::uint32_t>(in, path));
    }
  }
  frame.validate();
  return frame;
}

// --- PLY: binary little-endian, float x y z (+ optional nx ny nz) ---

inline void write_ply(const std::string& path, const PointCloud& cloud) {
  auto out = detail::open_output(path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals()) {
    out << "property float nx\nproperty float ny\nproperty float nz\n";
  }
  out << "end_header\n";
  for (size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      detail::write_raw(out, std::bit_cast<std::uint32_t>(
                                 static_cast<float>(cloud.points[i][a])));
    }
    if (cloud.has_normals()) {
      for (int a = 0; a < 3; ++a) {
        detail::write_raw(out, std::bit_cast<std::uint32_t>(
                                   static_cast<float>(cloud.normals[i][a])));
      }
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline PointCloud read_ply(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw IoError("not a PLY file: " + path);

  size_t vertex_count = 0;
  std::vector<std::string> properties;
  bool binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string word;
    tokens >> word;
    if (word == "format") {
      std::string kind;
      tokens >> kind;
      binary_le = (kind == "binary_little_endian");
    } else if (word == "comment") {
      continue;
    } else if (word == "element") {
      std::string name;
      tokens >> name >> vertex_count;
      if (name != "vertex") throw IoError("PLY: only vertex elements supported: " + path);
    } else if (word == "property") {
      std::string type, name;
      tokens >> type >> name;
      if (type != "float") throw IoError("PLY: only float properties supported: " + path);
      properties.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!binary_le) throw IoError("PLY: expected binary_little_endian: " + path);
  const bool has_normals = properties.size() == 6;
  const std::vector<std::string> want_xyz = {"x", "y", "z"};
  const std::vector<std::string> want_all = {"x", "y", "z", "nx", "ny", "nz"};
  if (properties != want_xyz && properties != want_all) {
    throw IoError("PLY: expected x y z [nx ny nz] float layout: " + path);
  }

  PointCloud cloud;
  cloud.points.resize(vertex_count);
  if (has_normals) cloud.normals.resize(vertex_count);
  for (size_t i = 0; i < vertex_count; ++i) {
    for (int a = 0; a < 3; ++a) {
      cloud.points[i][a] = std::bit_cast<float>(detail::read_raw<std::uint32_t>(in, path));
    }
    if (has_normals) {
      for (int a = 0; a < 3; ++a) {
        cloud.normals[i][a] = std::bit_cast<float>(detail::read_raw<std::uint32_t>(in, path));
      }
    }
  }
  return cloud;
}

// --- intrinsics: key = value text ---

inline void write_intrinsics(const std::string& path, const CameraIntrinsics& k) {
  auto out = detail::open_output(path);
  out << "fx = " << detail::fmt(k.fx) << "\nfy = " << detail::fmt(k.fy)
      << "\ncx = " << detail::fmt(k.cx) << "\ncy = " << detail::fmt(k.cy)
      << "\nwidth = " << k.width << "\nheight = " << k.height << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline CameraIntrinsics read_intrinsics(const std::string& path) {
  auto in = detail::open_input(path);
  std::map<std::string, double> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("intrinsics: expected key = value: " + path);
    std::istringstream key_in(line.substr(0, eq));
    std::istringstream val_in(line.substr(eq + 1));
    std::string key;
    double value;
    key_in >> key;
    if (!(val_in >> value)) throw IoError("intrinsics: bad value in " + path);
    kv[key] = value;
  }
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
    if (!kv.count(key)) throw IoError(std::string("intrinsics: missing ") + key + ": " + path);
  }
  CameraIntrinsics k{kv["fx"], kv["fy"], kv["cx"], kv["cy"],
                     static_cast<int>(kv["width"]), static_cast<int>(kv["height"])};
  k.validate();
  return k;
}

// --- rig transform: comment header, then 12 numbers (rows of R, then t) ---

struct TransformFile {
  RigidTransform transform;
  double rms_mm = 0.0;
  int scenes = 0;
};

inline void write_transform(const std::string& path, const TransformFile& t) {
  auto out = detail::open_output(path);
  out << "# rigid transform: rows of R, then t (mm)\n";
  out << "# rms_mm = " << detail::fmt(t.rms_mm) << "\n";
  out << "# scenes = " << t.scenes << "\n";
  for (int r = 0; r < 3; ++r) {
    out << detail::fmt(t.transform.rotation(r, 0)) << " "
        << detail::fmt(t.transform.rotation(r, 1)) << " "
        << detail::fmt(t.transform.rotation(r, 2)) << "\n";
  }
  out << detail::fmt(t.transform.translation(0)) << " "
      << detail::fmt(t.transform.translation(1)) << " "
      << detail::fmt(t.transform.translation(2)) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline TransformFile read_transform(const std::string& path) {
  auto in = detail::open_input(path);
  TransformFile t;
  std::vector<double> numbers;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key, eq;
      meta >> key >> eq;
      if (eq == "=") {
        if (key == "rms_mm") meta >> t.rms_mm;
        if (key == "scenes") meta >> t.scenes;
      }
      continue;
    }
    std::istringstream vals(line);
    double v;
    while (vals >> v) numbers.push_back(v);
  }
  if (numbers.size() != 12) throw IoError("transform: expected 12 numbers: " + path);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.transform.rotation(r, c) = numbers[r * 3 + c];
  }
  for (int a = 0; a < 3; ++a) t.transform.translation(a) = numbers[9 + a];
  t.transform.validate();
  return t;
}

// --- scene spec: one primitive per line ---

inline void write_scene_spec(const std::string& path, const SceneSpec& spec) {
  auto out = detail::open_output(path);
  out << "seed " << spec.rng_seed << "\n";
  for (const auto& prim : spec.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Sphere>) {
            out << "sphere " << detail::fmt(p.center.x()) << " " << detail::fmt(p.center.y())
                << " " << detail::fmt(p.center.z()) << " " << detail::fmt(p.radius) << "\n";
          } else if constexpr (std::is_same_v<T, Box>) {
            out << "box " << detail::fmt(p.center.x()) << " " << detail::fmt(p.center.y())
                << " " << detail::fmt(p.center.z()) << " " << detail::fmt(p.half_extents.x())
                << " " << detail::fmt(p.half_extents.y()) << " "
                << detail::fmt(p.half_extents.z()) << " " << detail::fmt(p.rotation.w()) << " "
                << detail::fmt(p.rotation.x()) << " " << detail::fmt(p.rotation.y()) << " "
                << detail::fmt(p.rotation.z()) << "\n";
          } else {
            out << "plane " << detail::fmt(p.normal.x()) << " " << detail::fmt(p.normal.y())
                << " " << detail::fmt(p.normal.z()) << " " << detail::fmt(p.offset) << "\n";
          }
        },
        prim);
  }
  if (!out) throw IoError("write failed: " + path);
}

inline SceneSpec read_scene_spec(const std::string& path) {
  auto in = detail::open_input(path);
  SceneSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream tokens(line);
    std::string kind;
    tokens >> kind;
    const std::string where = path + ":" + std::to_string(line_no);
    if (kind == "seed") {
      if (!(tokens >> spec.rng_seed)) throw ContractViolation("scene: bad seed at " + where);
    } else if (kind == "sphere") {
      Sphere s;
      if (!(tokens >> s.center.x() >> s.center.y() >> s.center.z() >> s.radius)) {
        throw ContractViolation("scene: sphere needs cx cy cz r at " + where);
      }
      spec.primitives.emplace_back(s);
    } else if (kind == "box") {
      Box b;
      double qw, qx, qy, qz;
      if (!(tokens >> b.center.x() >> b.center.y() >> b.center.z() >> b.half_extents.x() >>
            b.half_extents.y() >> b.half_extents.z() >> qw >> qx >> qy >> qz)) {
        throw ContractViolation("scene: box needs cx cy cz hx hy hz qw qx qy qz at " + where);
      }
      b.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
      spec.primitives.emplace_back(b);
    } else if (kind == "plane") {
      Plane p;
      if (!(tokens >> p.normal.x() >> p.normal.y() >> p.normal.z() >> p.offset)) {
        throw ContractViolation("scene: plane needs nx ny nz d at " + where);
      }
      spec.primitives.emplace_back(p);
    } else {
      throw ContractViolation("scene: unknown primitive '" + kind + "' at " + where);
    }
  }
  spec.validate();
  return spec;
}

// --- CSV reports ---

inline void write_metrics_csv(const std::string& path, const DepthMetrics& d,
                              const NormalMetrics* n = nullptr) {
  auto out = detail::open_output(path);
  out << "abs_rel,sq_rel_mm,rmse_mm,mae_mm,normal_mae_rad,normal_pct_20deg,n_valid\n";
  out << detail::fmt(d.abs_rel) << "," << detail::fmt(d.sq_rel_mm) << ","
      << detail::fmt(d.rmse_mm) << "," << detail::fmt(d.mae_mm) << ","
      << (n ? detail::fmt(n->mae_rad) : "") << ","
      << (n ? detail::fmt(n->pct_within_20deg) : "") << "," << d.n_valid << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
  auto out = detail::open_output(path);
  out << "step,total,l1_term,chamfer_term,selected_jitter\n";
  for (const auto& e : trace) {
    out << e.step << "," << detail::fmt(e.total) << "," << detail::fmt(e.l1_term) << ","
        << detail::fmt(e.chamfer_term) << "," << jitter_label(e.selected_jitter) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace tofgeo
