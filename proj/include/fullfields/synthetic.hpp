#pragma once

#include <string>
#include <vector>

#include "fullfields/common.hpp"
#include "fullfields/shape.hpp"

namespace ff {

// UV sphere centered at `center`. Tessellation chord error is about
// r * (1 - cos(pi / segments)); pick segments accordingly when a mesh has to
// stand in for the analytic sphere.
inline SurfaceShape uv_sphere(double radius, int rings, int segments,
                              const Vec3& center = {0, 0, 0}, const std::string& id = "sphere") {
  SurfaceShape s;
  s.id = id;
  s.vertices.push_back(center + Vec3{0, 0, radius});   // north pole
  for (int i = 1; i < rings; ++i) {
    double theta = M_PI * double(i) / double(rings);
    double z = radius * std::cos(theta);
    double rs = radius * std::sin(theta);
    for (int j = 0; j < segments; ++j) {
      double phi = 2.0 * M_PI * double(j) / double(segments);
      s.vertices.push_back(center + Vec3{rs * std::cos(phi), rs * std::sin(phi), z});
    }
  }
  s.vertices.push_back(center + Vec3{0, 0, -radius});  // south pole
  int south = int(s.vertices.size()) - 1;

  auto ring_vertex = [&](int ring, int j) { return 1 + (ring - 1) * segments + (j % segments); };
  for (int j = 0; j < segments; ++j)
    s.faces.push_back({0, ring_vertex(1, j), ring_vertex(1, j + 1)});
  for (int i = 1; i < rings - 1; ++i) {
    for (int j = 0; j < segments; ++j) {
      int a = ring_vertex(i, j), b = ring_vertex(i, j + 1);
      int c = ring_vertex(i + 1, j), d = ring_vertex(i + 1, j + 1);
      s.faces.push_back({a, c, d});
      s.faces.push_back({a, d, b});
    }
  }
  for (int j = 0; j < segments; ++j)
    s.faces.push_back({south, ring_vertex(rings - 1, j + 1), ring_vertex(rings - 1, j)});
  return s;
}

// Axis-aligned box shell with each face split into subdiv x subdiv quads.
inline SurfaceShape box_shell(const Vec3& half_extent, int subdiv,
                              const Vec3& center = {0, 0, 0}, const std::string& id = "box") {
  SurfaceShape s;
  s.id = id;
  auto add_face = [&](const Vec3& origin, const Vec3& du, const Vec3& dv) {
    int base = int(s.vertices.size());
    for (int i = 0; i <= subdiv; ++i)
      for (int j = 0; j <= subdiv; ++j)
        s.vertices.push_back(origin + du * (double(i) / subdiv) + dv * (double(j) / subdiv));
    auto at = [&](int i, int j) { return base + i * (subdiv + 1) + j; };
    for (int i = 0; i < subdiv; ++i)
      for (int j = 0; j < subdiv; ++j) {
        s.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
        s.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
      }
  };
  const Vec3& h = half_extent;
  add_face(center + Vec3{+h.x, -h.y, -h.z}, {0, 2 * h.y, 0}, {0, 0, 2 * h.z});
  add_face(center + Vec3{-h.x, -h.y, -h.z}, {0, 0, 2 * h.z}, {0, 2 * h.y, 0});
  add_face(center + Vec3{-h.x, +h.y, -h.z}, {2 * h.x, 0, 0}, {0, 0, 2 * h.z});
  add_face(center + Vec3{-h.x, -h.y, -h.z}, {0, 0, 2 * h.z}, {2 * h.x, 0, 0});
  add_face(center + Vec3{-h.x, -h.y, +h.z}, {2 * h.x, 0, 0}, {0, 2 * h.y, 0});
  add_face(center + Vec3{-h.x, -h.y, -h.z}, {0, 2 * h.y, 0}, {2 * h.x, 0, 0});
  return s;
}

struct SyntheticOptions {
  int min_shells = 1;
  int max_shells = 3;
  enum class Primitives { mixed, spheres, boxes };
  Primitives primitives = Primitives::mixed;
  int sphere_rings = 16;
  int sphere_segments = 24;
  int box_subdiv = 6;
};

inline SurfaceShape merge_shapes(const std::vector<SurfaceShape>& parts, const std::string& id) {
  SurfaceShape out;
  out.id = id;
  for (const auto& p : parts) {
    int base = int(out.vertices.size());
    out.vertices.insert(out.vertices.end(), p.vertices.begin(), p.vertices.end());
    for (const auto& f : p.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

// Nested-shell fixtures standing in for real interior-rich scans: 1-3
// concentric shells, sphere or box primitives, randomized radii and small
// inner offsets. Each shape is derived from (seed, index) alone, so the
// dataset is byte-identical across calls and stable under reordering.
inline std::vector<SurfaceShape> make_synthetic_nested_dataset(
    size_t count, uint64_t seed, const SyntheticOptions& opt = {}) {
  if (count < 1) throw std::invalid_argument("make_synthetic_nested_dataset: count must be >= 1");
  std::vector<SurfaceShape> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Rng rng(splitmix64(seed ^ splitmix64(0x5e57ed5ull + i)));
    int span = opt.max_shells - opt.min_shells + 1;
    int shells = opt.min_shells + int(i % size_t(span));

    auto pick_sphere = [&]() {
      switch (opt.primitives) {
        case SyntheticOptions::Primitives::spheres: return true;
        case SyntheticOptions::Primitives::boxes: return false;
        default: return rng.uniform() < 0.5;
      }
    };

    std::vector<SurfaceShape> parts;
    double scale = 0.5 * rng.uniform(0.8, 1.0);
    Vec3 center{0, 0, 0};
    for (int sh = 0; sh < shells; ++sh) {
      bool sphere = pick_sphere();
      if (sphere) {
        parts.push_back(uv_sphere(scale, opt.sphere_rings, opt.sphere_segments, center));
      } else {
        Vec3 h{scale, scale * rng.uniform(0.7, 1.0), scale * rng.uniform(0.7, 1.0)};
        parts.push_back(box_shell(h, opt.box_subdiv, center));
      }
      // Next shell nests strictly inside this one.
      double factor = rng.uniform(0.45, 0.65);
      double offset = scale * (1.0 - factor) * 0.15;
      center = center + Vec3{offset * rng.uniform(-1, 1), offset * rng.uniform(-1, 1),
                             offset * rng.uniform(-1, 1)};
      scale *= factor;
    }

    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04zu", i);
    out.push_back(normalize_shape(merge_shapes(parts, id)));
  }
  return out;
}

}  // namespace ff
