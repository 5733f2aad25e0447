#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "fullfields/bvh.hpp"
#include "fullfields/common.hpp"
#include "fullfields/shape.hpp"

namespace ff {

// Query points with clamped ground-truth unsigned distances.
struct UdfSampleSet {
  std::vector<Vec3> points;
  std::vector<double> distances;
  double clamp_value = 0.1;

  size_t size() const { return points.size(); }
};

// Exact distance evaluator for one shape: point-to-triangle over a BVH when
// faces exist, nearest neighbor against a dense surface sample otherwise.
class GroundTruthUdf {
 public:
  GroundTruthUdf(const SurfaceShape& shape, Rng& rng, size_t cloud_fallback_samples = 100000) {
    if (shape.has_faces()) {
      bvh_ = std::make_unique<TriangleBvh>(shape);
    } else {
      std::vector<Vec3> pts = shape.vertices;
      if (pts.size() < cloud_fallback_samples) {
        // Face-less inputs are treated as already-dense samples of the
        // surface; nothing to densify beyond what the cloud provides.
        (void)rng;
      } else {
        pts = sample_surface(shape, cloud_fallback_samples, rng);
      }
      kd_ = std::make_unique<PointKdTree>(std::move(pts));
    }
  }

  double operator()(const Vec3& p) const {
    return bvh_ ? bvh_->distance(p) : kd_->distance(p);
  }

 private:
  std::unique_ptr<TriangleBvh> bvh_;
  std::unique_ptr<PointKdTree> kd_;
};

inline UdfSampleSet ground_truth_udf(const SurfaceShape& shape, const std::vector<Vec3>& queries,
                                     double clamp, Rng& rng) {
  if (clamp <= 0.0) throw std::invalid_argument("ground_truth_udf: clamp must be > 0");
  GroundTruthUdf field(shape, rng);
  UdfSampleSet set;
  set.clamp_value = clamp;
  set.points = queries;
  set.distances.reserve(queries.size());
  for (const auto& q : queries) set.distances.push_back(std::min(clamp, field(q)));
  return set;
}

// Training query distribution: a uniform share of the cube plus near-surface
// samples jittered with per-point sigma drawn from `sigmas`. Jittered points
// are clamped back into the unit frame.
inline std::vector<Vec3> sample_training_queries(const SurfaceShape& shape, size_t n,
                                                 const std::vector<double>& sigmas,
                                                 double uniform_fraction, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_training_queries: n must be >= 1");
  if (uniform_fraction < 0.0 || uniform_fraction > 1.0)
    throw std::invalid_argument("sample_training_queries: uniform_fraction outside [0, 1]");
  size_t n_uniform = size_t(std::floor(uniform_fraction * double(n)));
  size_t n_surface = n - n_uniform;
  if (n_surface > 0 && sigmas.empty())
    throw std::invalid_argument("sample_training_queries: sigmas empty but uniform_fraction < 1");

  std::vector<Vec3> out;
  out.reserve(n);
  for (size_t i = 0; i < n_uniform; ++i) out.push_back(rng.uniform_in_unit_cube());
  if (n_surface > 0) {
    std::vector<Vec3> anchors = sample_surface(shape, n_surface, rng);
    for (const auto& a : anchors) {
      double sigma = sigmas[rng.uniform_index(sigmas.size())];
      Vec3 p = a + Vec3{sigma * rng.normal(), sigma * rng.normal(), sigma * rng.normal()};
      out.push_back(clamp_to_unit_cube(p));
    }
  }
  return out;
}

}  // namespace ff
