#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/common.hpp"
#include "fullfields/shape.hpp"
#include "fullfields/udf_data.hpp"
#include "fullfields/voxel.hpp"

namespace ff {

// ---------------------------------------------------------------------------
// Atomic file writes: write-then-rename so readers never observe a torn file.
// ---------------------------------------------------------------------------

template <typename WriteFn>
void atomic_write(const std::filesystem::path& path, WriteFn&& fn, bool binary = false) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    fn(out);
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("unexpected end of file");
  return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw std::runtime_error(what + ": bad magic, not a " + std::string(magic, 4) + " file");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mesh formats: ASCII OBJ and OFF, triangles only.
// ---------------------------------------------------------------------------

inline void write_obj(const std::filesystem::path& path, const SurfaceShape& shape) {
  atomic_write(path, [&](std::ostream& out) {
    out.precision(12);
    for (const auto& v : shape.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& f : shape.faces)
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  });
}

inline SurfaceShape read_obj(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  SurfaceShape s;
  s.id = path.stem().string();
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x >> v.y >> v.z;
      if (ls.fail()) throw std::runtime_error("malformed OBJ vertex in " + path.string());
      s.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        ls >> tok;
        if (tok.empty()) throw std::runtime_error("non-triangle OBJ face in " + path.string());
        f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;  // ignore vt/vn refs
      }
      std::string extra;
      if (ls >> extra) throw std::runtime_error("non-triangle OBJ face in " + path.string());
      s.faces.push_back(f);
    }
  }
  return s;
}

inline void write_off(const std::filesystem::path& path, const SurfaceShape& shape) {
  atomic_write(path, [&](std::ostream& out) {
    out.precision(12);
    out << "OFF\n" << shape.vertices.size() << ' ' << shape.faces.size() << " 0\n";
    for (const auto& v : shape.vertices) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& f : shape.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  });
}

inline SurfaceShape read_off(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string header;
  in >> header;
  if (header != "OFF") throw std::runtime_error("not an OFF file: " + path.string());
  size_t nv = 0, nf = 0, ne = 0;
  in >> nv >> nf >> ne;
  SurfaceShape s;
  s.id = path.stem().string();
  s.vertices.resize(nv);
  for (auto& v : s.vertices) in >> v.x >> v.y >> v.z;
  for (size_t f = 0; f < nf; ++f) {
    int arity = 0;
    in >> arity;
    if (arity != 3) throw std::runtime_error("non-triangle OFF face in " + path.string());
    std::array<int, 3> face{};
    in >> face[0] >> face[1] >> face[2];
    s.faces.push_back(face);
  }
  if (in.fail()) throw std::runtime_error("malformed OFF file: " + path.string());
  return s;
}

// ---------------------------------------------------------------------------
// Point cloud formats: ASCII PLY and plain `x y z` text.
// ---------------------------------------------------------------------------

inline void write_ply(const std::filesystem::path& path, const std::vector<Vec3>& points) {
  atomic_write(path, [&](std::ostream& out) {
    out.precision(9);
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    for (const auto& p : points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  });
}

inline std::vector<Vec3> read_ply(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw std::runtime_error("not a PLY file: " + path.string());
  size_t count = 0;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (tag == "element") {
      std::string what;
      ls >> what;
      if (what == "vertex") ls >> count;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw std::runtime_error("only ASCII PLY is supported: " + path.string());
  std::vector<Vec3> pts(count);
  for (auto& p : pts) in >> p.x >> p.y >> p.z;
  if (in.fail()) throw std::runtime_error("malformed PLY file: " + path.string());
  return pts;
}

inline void write_xyz(const std::filesystem::path& path, const std::vector<Vec3>& points) {
  atomic_write(path, [&](std::ostream& out) {
    out.precision(9);
    for (const auto& p : points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  });
}

inline std::vector<Vec3> read_xyz(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Vec3> pts;
  Vec3 p;
  while (in >> p.x >> p.y >> p.z) pts.push_back(p);
  return pts;
}

// Dispatch on extension; .obj/.off load as meshes, .ply/.xyz as clouds.
inline SurfaceShape read_shape(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (ext == ".obj") return read_obj(path);
  if (ext == ".off") return read_off(path);
  if (ext == ".ply" || ext == ".xyz") {
    SurfaceShape s;
    s.id = path.stem().string();
    s.vertices = ext == ".ply" ? read_ply(path) : read_xyz(path);
    return s;
  }
  throw std::runtime_error("unsupported shape format: " + path.string());
}

// ---------------------------------------------------------------------------
// UDF1: query points and clamped distances, little-endian f32.
// Layout: "UDF1" | u32 count | f32 clamp | count*3 f32 points | count f32 dist.
// ---------------------------------------------------------------------------

inline void write_udf_samples(const std::filesystem::path& path, const UdfSampleSet& set) {
  atomic_write(path, [&](std::ostream& out) {
    out.write("UDF1", 4);
    detail::write_pod(out, uint32_t(set.size()));
    detail::write_pod(out, float(set.clamp_value));
    for (const auto& p : set.points) {
      detail::write_pod(out, float(p.x));
      detail::write_pod(out, float(p.y));
      detail::write_pod(out, float(p.z));
    }
    for (double d : set.distances) detail::write_pod(out, float(d));
  }, /*binary=*/true);
}

inline UdfSampleSet read_udf_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  detail::expect_magic(in, "UDF1", path.string());
  uint32_t count = detail::read_pod<uint32_t>(in);
  UdfSampleSet set;
  set.clamp_value = detail::read_pod<float>(in);
  set.points.resize(count);
  for (auto& p : set.points) {
    p.x = detail::read_pod<float>(in);
    p.y = detail::read_pod<float>(in);
    p.z = detail::read_pod<float>(in);
  }
  set.distances.resize(count);
  for (auto& d : set.distances) d = detail::read_pod<float>(in);
  return set;
}

// ---------------------------------------------------------------------------
// TOK1: token sequences, u16 tokens.
// Layout: "TOK1" | u32 sequences | u32 length | tokens row-major.
// ---------------------------------------------------------------------------

inline void write_token_dataset(const std::filesystem::path& path,
                                const std::vector<std::vector<int>>& sequences) {
  if (sequences.empty()) throw std::invalid_argument("write_token_dataset: empty dataset");
  size_t len = sequences.front().size();
  atomic_write(path, [&](std::ostream& out) {
    out.write("TOK1", 4);
    detail::write_pod(out, uint32_t(sequences.size()));
    detail::write_pod(out, uint32_t(len));
    for (const auto& seq : sequences) {
      if (seq.size() != len)
        throw std::invalid_argument("write_token_dataset: ragged sequence lengths");
      for (int t : seq) {
        if (t < 0 || t > 0xffff)
          throw std::invalid_argument("write_token_dataset: token out of u16 range");
        detail::write_pod(out, uint16_t(t));
      }
    }
  }, /*binary=*/true);
}

inline std::vector<std::vector<int>> read_token_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  detail::expect_magic(in, "TOK1", path.string());
  uint32_t count = detail::read_pod<uint32_t>(in);
  uint32_t len = detail::read_pod<uint32_t>(in);
  std::vector<std::vector<int>> seqs(count, std::vector<int>(len));
  for (auto& seq : seqs)
    for (auto& t : seq) t = detail::read_pod<uint16_t>(in);
  return seqs;
}

// ---------------------------------------------------------------------------
// VOX1: binary occupancy grid.
// Layout: "VOX1" | u32 resolution | R^3 u8 cells.
// ---------------------------------------------------------------------------

inline void write_voxel_grid(const std::filesystem::path& path, const VoxelGrid& grid) {
  atomic_write(path, [&](std::ostream& out) {
    out.write("VOX1", 4);
    detail::write_pod(out, uint32_t(grid.resolution));
    out.write(reinterpret_cast<const char*>(grid.occupancy.data()),
              std::streamsize(grid.occupancy.size()));
  }, /*binary=*/true);
}

inline VoxelGrid read_voxel_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  detail::expect_magic(in, "VOX1", path.string());
  VoxelGrid grid;
  grid.resolution = int(detail::read_pod<uint32_t>(in));
  grid.occupancy.resize(size_t(grid.resolution) * grid.resolution * grid.resolution);
  in.read(reinterpret_cast<char*>(grid.occupancy.data()), std::streamsize(grid.occupancy.size()));
  if (!in) throw std::runtime_error("truncated VOX1 file: " + path.string());
  return grid;
}

}  // namespace ff
