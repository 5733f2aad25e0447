#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ff {

// ---------------------------------------------------------------------------
// Small vector math. Geometry runs in double throughout; the unit frame for
// all shapes is the cube [-0.5, 0.5]^3.
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
inline Vec3 min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

struct Aabb {
  Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::lowest()};

  void expand(const Vec3& p) { lo = ff::min(lo, p); hi = ff::max(hi, p); }
  void expand(const Aabb& b) { lo = ff::min(lo, b.lo); hi = ff::max(hi, b.hi); }
  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 extent() const { return hi - lo; }
  bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }

  // Squared distance from p to the box (0 inside).
  double dist2(const Vec3& p) const {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
      double v = p[a];
      if (v < lo[a]) d += (lo[a] - v) * (lo[a] - v);
      if (v > hi[a]) d += (v - hi[a]) * (v - hi[a]);
    }
    return d;
  }
};

inline bool in_unit_cube(const Vec3& p, double slack = 0.0) {
  return p.x >= -0.5 - slack && p.x <= 0.5 + slack && p.y >= -0.5 - slack &&
         p.y <= 0.5 + slack && p.z >= -0.5 - slack && p.z <= 0.5 + slack;
}

inline Vec3 clamp_to_unit_cube(const Vec3& p) {
  auto c = [](double v) { return std::min(0.5, std::max(-0.5, v)); };
  return {c(p.x), c(p.y), c(p.z)};
}

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 produces a standard-mandated sequence;
// the value transforms below are ours, so streams are bit-identical across
// platforms (std distributions are not).
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Derive an independent stream, e.g. one per pipeline stage or per shape.
  Rng fork(uint64_t tag) { return Rng(splitmix64(engine_() ^ splitmix64(tag))); }

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [0, n). Lemire-style multiply-shift, bias < 2^-64.
  uint64_t uniform_index(uint64_t n) {
    return uint64_t((static_cast<__uint128_t>(engine_()) * n) >> 64);
  }

  // Box-Muller, unbuffered.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Vec3 uniform_in_unit_cube() {
    return {uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(-0.5, 0.5)};
  }

 private:
  std::mt19937_64 engine_;
};

// FNV-1a over raw bytes, used for input manifests in reports.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ff
