#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/common.hpp"

namespace ff {

// Binary occupancy grid over [-0.5, 0.5]^3. Linear index is row-major with z
// fastest: cell (ix, iy, iz) -> (ix * R + iy) * R + iz.
struct VoxelGrid {
  int resolution = 0;
  std::vector<uint8_t> occupancy;  // R^3 entries, 0 or 1

  size_t cell_count() const { return occupancy.size(); }
  size_t index(int ix, int iy, int iz) const {
    return (size_t(ix) * resolution + iy) * resolution + iz;
  }
  uint8_t at(int ix, int iy, int iz) const { return occupancy[index(ix, iy, iz)]; }
};

// Half-open bins over [-0.5, 0.5); the +0.5 boundary is clamped into the last
// bin so every in-range point lands in a cell.
inline int voxel_bin(double v, int resolution) {
  int b = int(std::floor((v + 0.5) * resolution));
  if (b == resolution) b = resolution - 1;
  return b;
}

inline VoxelGrid voxelize(const std::vector<Vec3>& points, int resolution) {
  if (resolution < 2) throw std::invalid_argument("voxelize: resolution must be >= 2");
  VoxelGrid grid;
  grid.resolution = resolution;
  grid.occupancy.assign(size_t(resolution) * resolution * resolution, 0);
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    if (!in_unit_cube(p))
      throw std::invalid_argument("voxelize: point " + std::to_string(i) +
                                  " lies outside [-0.5, 0.5]^3");
    grid.occupancy[grid.index(voxel_bin(p.x, resolution), voxel_bin(p.y, resolution),
                              voxel_bin(p.z, resolution))] = 1;
  }
  return grid;
}

}  // namespace ff
