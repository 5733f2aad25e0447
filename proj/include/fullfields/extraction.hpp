#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fullfields/common.hpp"

namespace ff {

// A queryable distance field. `evaluate` is required; `gradient` and the
// batched path are optional accelerators (learned decoders plug in
// evaluate_batch and get consumed through finite differences).
struct UdfField {
  std::function<double(const Vec3&)> evaluate;
  std::function<Vec3(const Vec3&)> gradient;
  std::function<std::vector<double>(const std::vector<Vec3>&)> evaluate_batch;

  double eval(const Vec3& p) const { return evaluate(p); }

  std::vector<double> eval_batch(const std::vector<Vec3>& pts) const {
    if (evaluate_batch) return evaluate_batch(pts);
    std::vector<double> out(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) out[i] = evaluate(pts[i]);
    return out;
  }
};

struct ExtractionConfig {
  int num_seeds = 8000;
  int projection_steps = 7;
  double acceptance_eps = 5e-3;
  int densify_rounds = 3;
  double densify_noise = 0.01;
  double step_damping = 1.0;
  double gradient_h = 1e-4;  // finite-difference step when no gradient is given

  void validate() const {
    if (acceptance_eps <= 0.0) throw std::invalid_argument("extraction: acceptance_eps <= 0");
    if (projection_steps < 1) throw std::invalid_argument("extraction: projection_steps < 1");
    if (num_seeds < 1) throw std::invalid_argument("extraction: num_seeds < 1");
    if (densify_rounds < 0) throw std::invalid_argument("extraction: densify_rounds < 0");
    if (step_damping <= 0.0 || step_damping > 1.0)
      throw std::invalid_argument("extraction: step_damping outside (0, 1]");
  }
};

// Central differences per axis, degrading to one-sided against the cube
// boundary. The two probes per axis are clamped into the cube and the actual
// probe separation divides, so the boundary case needs no special branch.
inline Vec3 fd_gradient(const std::function<double(const Vec3&)>& f, const Vec3& p, double h) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 hi = p, lo = p;
    hi[a] = std::min(0.5, p[a] + h);
    lo[a] = std::max(-0.5, p[a] - h);
    g[a] = (f(hi) - f(lo)) / (hi[a] - lo[a]);
  }
  return g;
}

inline UdfField finite_difference_gradient(const UdfField& field, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
  UdfField out = field;
  auto eval = field.evaluate;
  out.gradient = [eval, h](const Vec3& p) { return fd_gradient(eval, p, h); };
  return out;
}

struct ProjectionResult {
  std::vector<Vec3> points;
  std::vector<uint8_t> converged;  // descent held and no stationary gradient was hit
};

namespace detail_extract {

// Batched gradients: analytic if provided, else finite differences through
// the field's batch path (6 probes per point).
inline std::vector<Vec3> gradients(const UdfField& field, const std::vector<Vec3>& pts,
                                   double h) {
  std::vector<Vec3> out(pts.size());
  if (field.gradient) {
    for (size_t i = 0; i < pts.size(); ++i) out[i] = field.gradient(pts[i]);
    return out;
  }
  std::vector<Vec3> probes;
  probes.reserve(pts.size() * 6);
  for (const auto& p : pts)
    for (int a = 0; a < 3; ++a) {
      Vec3 hi = p, lo = p;
      hi[a] = std::min(0.5, p[a] + h);
      lo[a] = std::max(-0.5, p[a] - h);
      probes.push_back(hi);
      probes.push_back(lo);
    }
  std::vector<double> vals = field.eval_batch(probes);
  for (size_t i = 0; i < pts.size(); ++i)
    for (int a = 0; a < 3; ++a) {
      const Vec3& hi = probes[i * 6 + size_t(a) * 2];
      const Vec3& lo = probes[i * 6 + size_t(a) * 2 + 1];
      out[i][a] = (vals[i * 6 + size_t(a) * 2] - vals[i * 6 + size_t(a) * 2 + 1]) /
                  (hi[a] - lo[a]);
    }
  return out;
}

}  // namespace detail_extract

// Iterative projection p <- p - damping * UDF(p) * grad/|grad|, clamped into
// the cube after every step. A vanishing gradient leaves the point where it
// is and marks it; so does a net increase in field value.
inline ProjectionResult project(const std::vector<Vec3>& points, const UdfField& field,
                                const ExtractionConfig& cfg) {
  cfg.validate();
  ProjectionResult res;
  res.points = points;
  res.converged.assign(points.size(), 1);
  if (points.empty()) return res;

  for (const auto& p : points)
    if (!in_unit_cube(p, 1e-9))
      throw std::invalid_argument("project: seed point outside the unit cube");

  std::vector<double> initial = field.eval_batch(res.points);
  for (int step = 0; step < cfg.projection_steps; ++step) {
    std::vector<double> vals = step == 0 ? initial : field.eval_batch(res.points);
    std::vector<Vec3> grads = detail_extract::gradients(field, res.points, cfg.gradient_h);
    for (size_t i = 0; i < res.points.size(); ++i) {
      double gn = norm(grads[i]);
      if (gn < 1e-12) {
        if (vals[i] > 0.0) res.converged[i] = 0;  // stationary off-surface
        continue;
      }
      res.points[i] =
          clamp_to_unit_cube(res.points[i] - grads[i] * (cfg.step_damping * vals[i] / gn));
    }
  }
  std::vector<double> final_vals = field.eval_batch(res.points);
  for (size_t i = 0; i < res.points.size(); ++i)
    if (final_vals[i] > initial[i]) res.converged[i] = 0;
  return res;
}

struct ExtractionStats {
  int num_seeds = 0;
  size_t accepted_initial = 0;
  std::vector<size_t> accepted_per_round;
  size_t before_dedup = 0;
  size_t after_dedup = 0;
  double rejection_rate = 0.0;
};

struct ExtractionResult {
  std::vector<Vec3> points;
  ExtractionStats stats;
};

namespace detail_extract {

// First-seen-wins dedup on a 1e-4 grid; order-stable, hence deterministic.
inline std::vector<Vec3> dedup(const std::vector<Vec3>& pts, double cell = 1e-4) {
  std::unordered_map<uint64_t, uint8_t> seen;
  seen.reserve(pts.size() * 2);
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    auto bin = [cell](double v) { return uint64_t(int64_t(std::floor(v / cell)) + (1ll << 40)); };
    uint64_t key = splitmix64(bin(p.x) ^ splitmix64(bin(p.y) ^ splitmix64(bin(p.z))));
    if (seen.emplace(key, 1).second) out.push_back(p);
  }
  return out;
}

}  // namespace detail_extract

// Seeds -> project -> filter at acceptance_eps, then densify rounds that
// jitter the freshest accepted batch and re-project it.
inline ExtractionResult extract_dense_cloud(const UdfField& field, const ExtractionConfig& cfg,
                                            uint64_t seed) {
  cfg.validate();
  Rng rng(splitmix64(seed ^ 0x657874ULL));

  std::vector<Vec3> seeds(size_t(cfg.num_seeds));
  for (auto& p : seeds) p = rng.uniform_in_unit_cube();

  ExtractionResult res;
  res.stats.num_seeds = cfg.num_seeds;

  auto accept = [&](const std::vector<Vec3>& pts) {
    std::vector<double> vals = field.eval_batch(pts);
    std::vector<Vec3> kept;
    kept.reserve(pts.size());
    for (size_t i = 0; i < pts.size(); ++i)
      if (vals[i] <= cfg.acceptance_eps) kept.push_back(pts[i]);
    return kept;
  };

  std::vector<Vec3> pool = accept(project(seeds, field, cfg).points);
  res.stats.accepted_initial = pool.size();
  std::vector<Vec3> last = pool;
  for (int round = 0; round < cfg.densify_rounds; ++round) {
    std::vector<Vec3> jittered;
    jittered.reserve(last.size());
    for (const auto& p : last)
      jittered.push_back(clamp_to_unit_cube(
          p + Vec3{cfg.densify_noise * rng.normal(), cfg.densify_noise * rng.normal(),
                   cfg.densify_noise * rng.normal()}));
    last = jittered.empty() ? jittered : accept(project(jittered, field, cfg).points);
    res.stats.accepted_per_round.push_back(last.size());
    pool.insert(pool.end(), last.begin(), last.end());
  }

  res.stats.before_dedup = pool.size();
  if (pool.empty())
    throw std::runtime_error("field has no reachable zero set at eps=" +
                             std::to_string(cfg.acceptance_eps));
  res.points = detail_extract::dedup(pool);
  res.stats.after_dedup = res.points.size();
  res.stats.rejection_rate =
      1.0 - double(res.stats.accepted_initial) / double(cfg.num_seeds);
  return res;
}

}  // namespace ff
