#pragma once

// Analytic distance fields and small helpers shared by the unit and
// acceptance suites.

#include <cmath>
#include <vector>

#include "fullfields/common.hpp"
#include "fullfields/extraction.hpp"

namespace ff::testing {

inline UdfField sphere_field(double radius, bool with_gradient = true) {
  UdfField f;
  f.evaluate = [radius](const Vec3& p) { return std::abs(norm(p) - radius); };
  if (with_gradient) {
    f.gradient = [radius](const Vec3& p) {
      double n = norm(p);
      if (n < 1e-12) return Vec3{0, 0, 0};
      double sign = n >= radius ? 1.0 : -1.0;
      return p * (sign / n);
    };
  }
  return f;
}

inline UdfField nested_spheres_field(std::vector<double> radii, bool with_gradient = true) {
  UdfField f;
  f.evaluate = [radii](const Vec3& p) {
    double n = norm(p);
    double best = std::numeric_limits<double>::max();
    for (double r : radii) best = std::min(best, std::abs(n - r));
    return best;
  };
  if (with_gradient) {
    f.gradient = [radii](const Vec3& p) {
      double n = norm(p);
      if (n < 1e-12) return Vec3{0, 0, 0};
      double best = std::numeric_limits<double>::max();
      double best_r = radii.front();
      for (double r : radii) {
        if (std::abs(n - r) < best) {
          best = std::abs(n - r);
          best_r = r;
        }
      }
      return p * ((n >= best_r ? 1.0 : -1.0) / n);
    };
  }
  return f;
}

// 48-bin direction histogram: octant (8) x ordering of |x|,|y|,|z| (6).
inline int direction_bin(const Vec3& p) {
  int octant = (p.x >= 0 ? 1 : 0) | (p.y >= 0 ? 2 : 0) | (p.z >= 0 ? 4 : 0);
  double a = std::abs(p.x), b = std::abs(p.y), c = std::abs(p.z);
  int perm;
  if (a >= b && b >= c) perm = 0;
  else if (a >= c && c >= b) perm = 1;
  else if (b >= a && a >= c) perm = 2;
  else if (b >= c && c >= a) perm = 3;
  else if (c >= a && a >= b) perm = 4;
  else perm = 5;
  return octant * 6 + perm;
}

}  // namespace ff::testing
