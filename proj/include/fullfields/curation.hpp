#pragma once

#include <string>
#include <vector>

#include "fullfields/bvh.hpp"
#include "fullfields/common.hpp"
#include "fullfields/shape.hpp"

namespace ff {

struct CurationRecord {
  std::string shape_id;
  size_t interior_point_count = 0;
  size_t total_point_count = 1;
  bool accepted = false;

  double interior_fraction() const {
    return double(interior_point_count) / double(total_point_count);
  }
};

// A surface sample counts as interior when the majority of six axis-aligned
// rays from it cross the mesh an odd number of times. Tangent hits and the
// sample's own triangle fall out of the vote instead of poisoning it, which
// keeps the test usable on non-watertight meshes. Face-less shapes have no
// crossable surface and report zero interior points.
inline CurationRecord curate_internal(const SurfaceShape& shape, double threshold,
                                      Rng& rng, size_t sample_count = 2048) {
  CurationRecord rec;
  rec.shape_id = shape.id;
  rec.total_point_count = sample_count;

  bool degenerate = !shape.has_faces();
  if (!degenerate) {
    // All-coplanar meshes have no interior either.
    Aabb box = bounding_box(shape.vertices);
    Vec3 e = box.extent();
    degenerate = std::min({e.x, e.y, e.z}) < 1e-9;
  }

  if (!degenerate) {
    TriangleBvh bvh(shape);
    std::vector<Vec3> samples = sample_surface(shape, sample_count, rng);
    for (const auto& p : samples) {
      int odd = 0;
      for (int axis = 0; axis < 3; ++axis)
        for (int sign : {-1, 1})
          odd += bvh.ray_crossings(p, axis, sign) % 2;
      if (odd >= 4) ++rec.interior_point_count;
    }
  }

  rec.accepted = rec.interior_fraction() >= threshold;
  return rec;
}

}  // namespace ff
