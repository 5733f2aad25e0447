#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/common.hpp"
#include "fullfields/voxel.hpp"

namespace ff {

using Cloud = std::vector<Vec3>;
using CloudSet = std::vector<Cloud>;

// Chamfer distance, squared-distance convention: the sum of the two directed
// means of nearest-neighbor squared distances. This is the convention the
// point-cloud generation literature tabulates, and MMD/COV inherit it.
inline double chamfer(const Cloud& a, const Cloud& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty cloud");
  double sum_a = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::max();
    for (const auto& q : b) best = std::min(best, norm2(p - q));
    sum_a += best;
  }
  double sum_b = 0.0;
  for (const auto& q : b) {
    double best = std::numeric_limits<double>::max();
    for (const auto& p : a) best = std::min(best, norm2(q - p));
    sum_b += best;
  }
  return sum_a / double(a.size()) + sum_b / double(b.size());
}

// Mean over reference clouds of the minimum CD to any generated cloud.
inline double mmd(const CloudSet& generated, const CloudSet& reference) {
  if (generated.empty() || reference.empty()) throw std::invalid_argument("mmd: empty cloud set");
  double sum = 0.0;
  for (const auto& r : reference) {
    double best = std::numeric_limits<double>::max();
    for (const auto& g : generated) best = std::min(best, chamfer(g, r));
    sum += best;
  }
  return sum / double(reference.size());
}

// Percentage of reference clouds claimed as CD-nearest neighbor by at least
// one generated cloud. Nearest ties resolve to the lowest reference index.
inline double cov(const CloudSet& generated, const CloudSet& reference) {
  if (generated.empty() || reference.empty()) throw std::invalid_argument("cov: empty cloud set");
  std::vector<uint8_t> covered(reference.size(), 0);
  for (const auto& g : generated) {
    double best = std::numeric_limits<double>::max();
    size_t best_r = 0;
    for (size_t r = 0; r < reference.size(); ++r) {
      double d = chamfer(g, reference[r]);
      if (d < best) {
        best = d;
        best_r = r;
      }
    }
    covered[best_r] = 1;
  }
  size_t n = 0;
  for (uint8_t c : covered) n += c;
  return 100.0 * double(n) / double(reference.size());
}

namespace detail_metrics {

inline std::vector<double> pooled_histogram(const CloudSet& set, int resolution) {
  std::vector<double> h(size_t(resolution) * resolution * resolution, 0.0);
  for (const auto& cloud : set)
    for (const auto& p : cloud) {
      Vec3 c = clamp_to_unit_cube(p);
      size_t idx = (size_t(voxel_bin(c.x, resolution)) * resolution +
                    size_t(voxel_bin(c.y, resolution))) *
                       resolution +
                   size_t(voxel_bin(c.z, resolution));
      h[idx] += 1.0;
    }
  return h;
}

}  // namespace detail_metrics

// Jensen-Shannon divergence in nats between the pooled occupancy
// distributions, with add-epsilon smoothing. Bounded by ln 2.
inline double jsd(const CloudSet& generated, const CloudSet& reference, int grid_resolution) {
  if (generated.empty() || reference.empty()) throw std::invalid_argument("jsd: empty cloud set");
  if (grid_resolution < 2) throw std::invalid_argument("jsd: grid_resolution < 2");
  constexpr double eps = 1e-10;

  std::vector<double> hp = detail_metrics::pooled_histogram(generated, grid_resolution);
  std::vector<double> hq = detail_metrics::pooled_histogram(reference, grid_resolution);
  double sp = 0.0, sq = 0.0;
  for (size_t i = 0; i < hp.size(); ++i) {
    sp += hp[i] + eps;
    sq += hq[i] + eps;
  }
  double out = 0.0;
  for (size_t i = 0; i < hp.size(); ++i) {
    double p = (hp[i] + eps) / sp;
    double q = (hq[i] + eps) / sq;
    double m = 0.5 * (p + q);
    out += 0.5 * p * std::log(p / m) + 0.5 * q * std::log(q / m);
  }
  return out;
}

struct MetricsConfig {
  int cloud_size = 2048;       // common resampling size
  int jsd_resolution = 28;     // occupancy grid per axis

  void validate() const {
    if (cloud_size < 1) throw std::invalid_argument("metrics: cloud_size < 1");
    if (jsd_resolution < 2) throw std::invalid_argument("metrics: jsd_resolution < 2");
  }
};

// Resample to exactly n points: subsample without replacement when larger,
// bootstrap with replacement when smaller.
inline Cloud resample_cloud(const Cloud& cloud, size_t n, Rng& rng) {
  if (cloud.empty()) throw std::invalid_argument("resample_cloud: empty cloud");
  if (cloud.size() == n) return cloud;
  Cloud out;
  out.reserve(n);
  if (cloud.size() > n) {
    std::vector<uint32_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), 0u);
    for (size_t i = 0; i < n; ++i) {
      size_t j = i + size_t(rng.uniform_index(idx.size() - i));
      std::swap(idx[i], idx[j]);
      out.push_back(cloud[idx[i]]);
    }
  } else {
    for (size_t i = 0; i < n; ++i) out.push_back(cloud[rng.uniform_index(cloud.size())]);
  }
  return out;
}

struct GenerationReport {
  double mmd_raw = 0.0;
  double cov_percent = 0.0;
  double jsd_raw = 0.0;
  MetricsConfig config;
  uint64_t generated_hash = 0;
  uint64_t reference_hash = 0;

  // Table conventions: MMD scaled by 1e3; JSD column values carry one factor
  // of ten (raw = displayed * 1e-1).
  double mmd_display() const { return mmd_raw * 1e3; }
  double jsd_display() const { return jsd_raw * 10.0; }

  nlohmann::json to_json() const {
    return {{"mmd", mmd_raw},
            {"cov_percent", cov_percent},
            {"jsd", jsd_raw},
            {"mmd_x1e3", mmd_display()},
            {"jsd_x10", jsd_display()},
            {"display_convention", {{"mmd", "raw * 1e3"}, {"jsd", "raw * 1e1"}}},
            {"config",
             {{"cloud_size", config.cloud_size}, {"jsd_resolution", config.jsd_resolution}}},
            {"input_manifest",
             {{"generated_fnv1a", generated_hash}, {"reference_fnv1a", reference_hash}}}};
  }
};

inline uint64_t hash_cloud_set(const CloudSet& set) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& cloud : set)
    h = fnv1a(cloud.data(), cloud.size() * sizeof(Vec3), h);
  return h;
}

inline GenerationReport evaluate(const CloudSet& generated, const CloudSet& reference,
                                 const MetricsConfig& cfg, uint64_t seed = 0) {
  cfg.validate();
  if (generated.empty() || reference.empty())
    throw std::invalid_argument("evaluate: empty cloud set");

  Rng rng(splitmix64(seed ^ 0x6d657472ULL));
  CloudSet g = generated, r = reference;
  for (auto& c : g) c = resample_cloud(c, size_t(cfg.cloud_size), rng);
  for (auto& c : r) c = resample_cloud(c, size_t(cfg.cloud_size), rng);

  GenerationReport rep;
  rep.config = cfg;
  rep.mmd_raw = mmd(g, r);
  rep.cov_percent = cov(g, r);
  rep.jsd_raw = jsd(g, r, cfg.jsd_resolution);
  rep.generated_hash = hash_cloud_set(g);
  rep.reference_hash = hash_cloud_set(r);
  return rep;
}

}  // namespace ff
