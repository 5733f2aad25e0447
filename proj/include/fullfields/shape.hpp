#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/common.hpp"

namespace ff {

// Triangle mesh or raw point cloud in the unit frame. Faces are optional;
// an empty face list marks a point-cloud-only shape.
struct SurfaceShape {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string id;

  bool has_faces() const { return !faces.empty(); }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

inline Aabb bounding_box(const std::vector<Vec3>& pts) {
  Aabb box;
  for (const auto& p : pts) box.expand(p);
  return box;
}

// Checks index validity and face non-degeneracy (area above tolerance).
inline void validate_shape(const SurfaceShape& s, double area_tol = 1e-12) {
  if (s.vertices.empty()) throw std::invalid_argument("empty geometry");
  const int n = int(s.vertices.size());
  for (size_t f = 0; f < s.faces.size(); ++f) {
    const auto& t = s.faces[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n)
        throw std::invalid_argument("face " + std::to_string(f) + " references vertex " +
                                    std::to_string(t[k]) + " outside [0, " +
                                    std::to_string(n) + ")");
    }
    if (triangle_area(s.vertices[t[0]], s.vertices[t[1]], s.vertices[t[2]]) <= area_tol)
      throw std::invalid_argument("face " + std::to_string(f) + " is degenerate");
  }
}

// Center at the bounding-box center and scale uniformly so the longest bbox
// side equals 1. Result lives in [-0.5, 0.5]^3. Idempotent.
inline SurfaceShape normalize_shape(const SurfaceShape& raw) {
  if (raw.vertices.empty()) throw std::invalid_argument("empty geometry");
  Aabb box = bounding_box(raw.vertices);
  Vec3 c = box.center();
  Vec3 e = box.extent();
  double longest = std::max({e.x, e.y, e.z});
  double scale = longest > 0.0 ? 1.0 / longest : 1.0;

  SurfaceShape out;
  out.id = raw.id;
  out.faces = raw.faces;
  out.vertices.reserve(raw.vertices.size());
  for (const auto& v : raw.vertices) out.vertices.push_back((v - c) * scale);
  return out;
}

// Cumulative area table for area-weighted triangle sampling.
inline std::vector<double> face_area_cdf(const SurfaceShape& s) {
  std::vector<double> cdf(s.faces.size());
  double acc = 0.0;
  for (size_t f = 0; f < s.faces.size(); ++f) {
    const auto& t = s.faces[f];
    acc += triangle_area(s.vertices[t[0]], s.vertices[t[1]], s.vertices[t[2]]);
    cdf[f] = acc;
  }
  return cdf;
}

inline Vec3 sample_triangle_point(const Vec3& a, const Vec3& b, const Vec3& c, Rng& rng) {
  double u = rng.uniform(), v = rng.uniform();
  if (u + v > 1.0) { u = 1.0 - u; v = 1.0 - v; }
  return a + (b - a) * u + (c - a) * v;
}

// n surface points: area-weighted over triangles for meshes, a random subset
// of vertices for face-less clouds (which requires n <= vertex count).
inline std::vector<Vec3> sample_surface(const SurfaceShape& shape, size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_surface: n must be >= 1");
  std::vector<Vec3> out;
  out.reserve(n);

  if (shape.has_faces()) {
    std::vector<double> cdf = face_area_cdf(shape);
    double total = cdf.back();
    if (total <= 0.0) throw std::invalid_argument("shape has zero total surface area");
    for (size_t i = 0; i < n; ++i) {
      double r = rng.uniform() * total;
      size_t f = std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin();
      if (f >= cdf.size()) f = cdf.size() - 1;
      const auto& t = shape.faces[f];
      out.push_back(sample_triangle_point(shape.vertices[t[0]], shape.vertices[t[1]],
                                          shape.vertices[t[2]], rng));
    }
    return out;
  }

  if (n > shape.vertices.size())
    throw std::invalid_argument("sample_surface: requested " + std::to_string(n) +
                                " points from a face-less shape with only " +
                                std::to_string(shape.vertices.size()) + " vertices");
  // Partial Fisher-Yates: first n entries of a random permutation.
  std::vector<uint32_t> idx(shape.vertices.size());
  std::iota(idx.begin(), idx.end(), 0u);
  for (size_t i = 0; i < n; ++i) {
    size_t j = i + size_t(rng.uniform_index(idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(shape.vertices[idx[i]]);
  }
  return out;
}

}  // namespace ff
