#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fullfields/common.hpp"
#include "fullfields/shape.hpp"

namespace ff {

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  Vec3 bp = p - b;
  double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  Vec3 cp = p - c;
  double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }

  double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Bounding-volume hierarchy over triangles. Median split on the longest axis
// of centroid bounds; exact nearest-point queries with branch-and-bound, plus
// axis-aligned ray crossing counts for the interior parity test.
class TriangleBvh {
 public:
  TriangleBvh() = default;

  explicit TriangleBvh(const SurfaceShape& shape) {
    if (!shape.has_faces()) throw std::invalid_argument("TriangleBvh: shape has no faces");
    tris_.reserve(shape.faces.size());
    for (const auto& f : shape.faces)
      tris_.push_back({shape.vertices[f[0]], shape.vertices[f[1]], shape.vertices[f[2]]});
    build();
  }

  size_t triangle_count() const { return tris_.size(); }

  // Exact unsigned distance from p to the triangle set.
  double distance(const Vec3& p) const {
    double best2 = std::numeric_limits<double>::max();
    nearest(0, p, best2);
    return std::sqrt(best2);
  }

  // Number of triangle crossings along the axis-aligned ray from origin in
  // direction sign*e_axis. Grazing hits at t <= t_min are not counted.
  int ray_crossings(const Vec3& origin, int axis, int sign, double t_min = 1e-9) const {
    int count = 0;
    crossings(0, origin, axis, sign, t_min, count);
    return count;
  }

 private:
  struct Tri { Vec3 a, b, c; };
  struct Node {
    Aabb box;
    int left = -1, right = -1;  // internal node when left >= 0
    uint32_t first = 0, count = 0;
  };

  void build() {
    index_.resize(tris_.size());
    std::iota(index_.begin(), index_.end(), 0u);
    nodes_.clear();
    nodes_.reserve(2 * tris_.size() / kLeafSize + 2);
    build_node(0, uint32_t(tris_.size()));
  }

  int build_node(uint32_t first, uint32_t count) {
    Node node;
    node.first = first;
    node.count = count;
    Aabb centroid_box;
    for (uint32_t i = first; i < first + count; ++i) {
      const Tri& t = tris_[index_[i]];
      node.box.expand(t.a);
      node.box.expand(t.b);
      node.box.expand(t.c);
      centroid_box.expand((t.a + t.b + t.c) / 3.0);
    }
    int self = int(nodes_.size());
    nodes_.push_back(node);
    if (count <= kLeafSize) return self;

    Vec3 e = centroid_box.extent();
    int axis = e.x >= e.y ? (e.x >= e.z ? 0 : 2) : (e.y >= e.z ? 1 : 2);
    uint32_t mid = first + count / 2;
    std::nth_element(index_.begin() + first, index_.begin() + mid,
                     index_.begin() + first + count, [&](uint32_t lhs, uint32_t rhs) {
                       const Tri& lt = tris_[lhs];
                       const Tri& rt = tris_[rhs];
                       return (lt.a[axis] + lt.b[axis] + lt.c[axis]) <
                              (rt.a[axis] + rt.b[axis] + rt.c[axis]);
                     });
    // Split can degenerate when all centroids coincide; keep the leaf then.
    if (mid == first || mid == first + count) return self;

    int l = build_node(first, mid - first);
    int r = build_node(mid, first + count - mid);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void nearest(int ni, const Vec3& p, double& best2) const {
    const Node& n = nodes_[ni];
    if (n.box.dist2(p) >= best2) return;
    if (n.left < 0) {
      for (uint32_t i = n.first; i < n.first + n.count; ++i) {
        const Tri& t = tris_[index_[i]];
        best2 = std::min(best2, norm2(p - closest_point_on_triangle(p, t.a, t.b, t.c)));
      }
      return;
    }
    double dl = nodes_[n.left].box.dist2(p);
    double dr = nodes_[n.right].box.dist2(p);
    if (dl <= dr) {
      nearest(n.left, p, best2);
      nearest(n.right, p, best2);
    } else {
      nearest(n.right, p, best2);
      nearest(n.left, p, best2);
    }
  }

  static bool ray_hits_box(const Aabb& box, const Vec3& o, int axis, int sign) {
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      if (o[a] < box.lo[a] || o[a] > box.hi[a]) return false;
    }
    return sign > 0 ? box.hi[axis] >= o[axis] : box.lo[axis] <= o[axis];
  }

  void crossings(int ni, const Vec3& o, int axis, int sign, double t_min, int& count) const {
    const Node& n = nodes_[ni];
    if (!ray_hits_box(n.box, o, axis, sign)) return;
    if (n.left < 0) {
      Vec3 dir{0, 0, 0};
      dir[axis] = double(sign);
      for (uint32_t i = n.first; i < n.first + n.count; ++i) {
        const Tri& t = tris_[index_[i]];
        double hit;
        if (ray_triangle(o, dir, t, hit) && hit > t_min) ++count;
      }
      return;
    }
    crossings(n.left, o, axis, sign, t_min, count);
    crossings(n.right, o, axis, sign, t_min, count);
  }

  // Moller-Trumbore.
  static bool ray_triangle(const Vec3& o, const Vec3& d, const Tri& t, double& t_hit) {
    constexpr double eps = 1e-12;
    Vec3 e1 = t.b - t.a, e2 = t.c - t.a;
    Vec3 h = cross(d, e2);
    double det = dot(e1, h);
    if (std::abs(det) < eps) return false;
    double inv = 1.0 / det;
    Vec3 s = o - t.a;
    double u = dot(s, h) * inv;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 q = cross(s, e1);
    double v = dot(d, q) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    t_hit = dot(e2, q) * inv;
    return t_hit > 0.0;
  }

  static constexpr uint32_t kLeafSize = 8;
  std::vector<Tri> tris_;
  std::vector<uint32_t> index_;
  std::vector<Node> nodes_;
};

// kd-tree for exact nearest-neighbor over a fixed point set; backs the UDF of
// face-less clouds.
class PointKdTree {
 public:
  PointKdTree() = default;

  explicit PointKdTree(std::vector<Vec3> points) : pts_(std::move(points)) {
    if (pts_.empty()) throw std::invalid_argument("PointKdTree: empty point set");
    index_.resize(pts_.size());
    std::iota(index_.begin(), index_.end(), 0u);
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    build_node(0, uint32_t(pts_.size()));
  }

  double distance(const Vec3& p) const { return std::sqrt(distance2(p)); }

  double distance2(const Vec3& p) const {
    double best2 = std::numeric_limits<double>::max();
    nearest(0, p, best2);
    return best2;
  }

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;
    uint32_t first = 0, count = 0;
  };

  int build_node(uint32_t first, uint32_t count) {
    Node node;
    node.first = first;
    node.count = count;
    for (uint32_t i = first; i < first + count; ++i) node.box.expand(pts_[index_[i]]);
    int self = int(nodes_.size());
    nodes_.push_back(node);
    if (count <= kLeafSize) return self;

    Vec3 e = node.box.extent();
    int axis = e.x >= e.y ? (e.x >= e.z ? 0 : 2) : (e.y >= e.z ? 1 : 2);
    uint32_t mid = first + count / 2;
    std::nth_element(index_.begin() + first, index_.begin() + mid,
                     index_.begin() + first + count,
                     [&](uint32_t l, uint32_t r) { return pts_[l][axis] < pts_[r][axis]; });
    int l = build_node(first, mid - first);
    int r = build_node(mid, first + count - mid);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void nearest(int ni, const Vec3& p, double& best2) const {
    const Node& n = nodes_[ni];
    if (n.box.dist2(p) >= best2) return;
    if (n.left < 0) {
      for (uint32_t i = n.first; i < n.first + n.count; ++i)
        best2 = std::min(best2, norm2(p - pts_[index_[i]]));
      return;
    }
    double dl = nodes_[n.left].box.dist2(p);
    double dr = nodes_[n.right].box.dist2(p);
    if (dl <= dr) {
      nearest(n.left, p, best2);
      nearest(n.right, p, best2);
    } else {
      nearest(n.right, p, best2);
      nearest(n.left, p, best2);
    }
  }

  static constexpr uint32_t kLeafSize = 16;
  std::vector<Vec3> pts_;
  std::vector<uint32_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace ff
