#include <catch_amalgamated.hpp>

#include "fullfields/shape.hpp"
#include "fullfields/synthetic.hpp"
#include "fullfields/voxel.hpp"

using namespace ff;

namespace {

SurfaceShape unit_square() {
  SurfaceShape s;
  s.id = "square";
  s.vertices = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
  s.faces = {{0, 1, 2}, {0, 2, 3}};
  return s;
}

}  // namespace

TEST_CASE("normalize_shape maps a cube to the unit frame") {
  SurfaceShape raw;
  raw.id = "cube";
  for (int x : {0, 2})
    for (int y : {0, 2})
      for (int z : {0, 2}) raw.vertices.push_back({double(x), double(y), double(z)});

  SurfaceShape n = normalize_shape(raw);
  Aabb box = bounding_box(n.vertices);
  CHECK(box.lo.x == Catch::Approx(-0.5).margin(1e-12));
  CHECK(box.lo.y == Catch::Approx(-0.5).margin(1e-12));
  CHECK(box.lo.z == Catch::Approx(-0.5).margin(1e-12));
  CHECK(box.hi.x == Catch::Approx(0.5).margin(1e-12));
  CHECK(box.hi.z == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("normalize_shape is idempotent") {
  Rng rng(11);
  SurfaceShape raw;
  raw.id = "cloud";
  for (int i = 0; i < 100; ++i)
    raw.vertices.push_back({rng.uniform(-3, 9), rng.uniform(0, 2), rng.uniform(-1, 1)});
  SurfaceShape once = normalize_shape(raw);
  SurfaceShape twice = normalize_shape(once);
  for (size_t i = 0; i < once.vertices.size(); ++i) {
    CHECK(norm(once.vertices[i] - twice.vertices[i]) < 1e-12);
  }
  // Longest bbox side is exactly one after normalization.
  Aabb box = bounding_box(once.vertices);
  Vec3 e = box.extent();
  CHECK(std::max({e.x, e.y, e.z}) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("normalize_shape rejects empty geometry") {
  SurfaceShape empty;
  CHECK_THROWS_WITH(normalize_shape(empty), "empty geometry");
}

TEST_CASE("validate_shape flags bad indices and degenerate faces") {
  SurfaceShape s = unit_square();
  SECTION("valid") { CHECK_NOTHROW(validate_shape(s)); }
  SECTION("index out of range") {
    s.faces.push_back({0, 1, 99});
    CHECK_THROWS_AS(validate_shape(s), std::invalid_argument);
  }
  SECTION("degenerate face") {
    s.faces.push_back({0, 1, 1});
    CHECK_THROWS_AS(validate_shape(s), std::invalid_argument);
  }
}

TEST_CASE("sample_surface stays on the mesh") {
  SurfaceShape s = unit_square();
  Rng rng(3);
  auto pts = sample_surface(s, 1000, rng);
  REQUIRE(pts.size() == 1000);
  for (const auto& p : pts) {
    CHECK(p.z == 0.0);
    CHECK(p.x >= -0.5);
    CHECK(p.x <= 0.5);
    CHECK(p.y >= -0.5);
    CHECK(p.y <= 0.5);
  }
}

TEST_CASE("sample_surface returns the requested count") {
  SurfaceShape sphere = uv_sphere(0.4, 16, 24);
  Rng rng(5);
  CHECK(sample_surface(sphere, 10000, rng).size() == 10000);
}

TEST_CASE("sample_surface is area-weighted") {
  // Two triangles in the z=0 plane with area ratio 9:1.
  SurfaceShape s;
  s.id = "two_tris";
  s.vertices = {{0, 0, 0}, {0.45, 0, 0}, {0, 0.4, 0},    // area 0.09
                {0, 0, 0.0}, {-0.05, 0, 0}, {0, -0.4, 0}};  // area 0.01
  s.faces = {{0, 1, 2}, {3, 4, 5}};
  Rng rng(5);
  auto pts = sample_surface(s, 10000, rng);
  size_t big = 0;
  for (const auto& p : pts)
    if (p.x >= 0 && p.y >= 0) ++big;
  double ratio = double(big) / double(pts.size() - big);
  CHECK(ratio == Catch::Approx(9.0).epsilon(0.05));
}

TEST_CASE("sample_surface on a face-less cloud subsamples vertices") {
  SurfaceShape cloud;
  cloud.id = "cloud";
  Rng gen(23);
  for (int i = 0; i < 50; ++i) cloud.vertices.push_back(gen.uniform_in_unit_cube());

  Rng rng(29);
  auto pts = sample_surface(cloud, 20, rng);
  REQUIRE(pts.size() == 20);
  for (const auto& p : pts) {
    bool found = false;
    for (const auto& v : cloud.vertices) found |= (v == p);
    CHECK(found);
  }
  CHECK_THROWS_AS(sample_surface(cloud, 51, rng), std::invalid_argument);
}

TEST_CASE("voxelize bins a single origin point at the center cell") {
  VoxelGrid g = voxelize({{0, 0, 0}}, 4);
  size_t occupied = 0;
  for (auto v : g.occupancy) occupied += v;
  CHECK(occupied == 1);
  CHECK(g.at(2, 2, 2) == 1);
}

TEST_CASE("voxelize handles the +0.5 boundary and rejects out-of-range points") {
  VoxelGrid g = voxelize({{0.5, 0.5, 0.5}}, 8);
  CHECK(g.at(7, 7, 7) == 1);
  CHECK_THROWS_WITH(voxelize({{0, 0, 0}, {0.6, 0, 0}}, 8),
                    Catch::Matchers::ContainsSubstring("point 1"));
}

TEST_CASE("voxelize of an empty list is the zero grid") {
  VoxelGrid g = voxelize({}, 4);
  for (auto v : g.occupancy) CHECK(v == 0);
}

TEST_CASE("voxelize is deterministic") {
  Rng rng(7);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(rng.uniform_in_unit_cube());
  VoxelGrid a = voxelize(pts, 16);
  VoxelGrid b = voxelize(pts, 16);
  CHECK(a.occupancy == b.occupancy);
}

TEST_CASE("voxel occupancy marks exactly the cells containing samples") {
  Rng rng(13);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(rng.uniform_in_unit_cube());
  int R = 8;
  VoxelGrid g = voxelize(pts, R);
  std::vector<uint8_t> expect(g.occupancy.size(), 0);
  for (const auto& p : pts)
    expect[g.index(voxel_bin(p.x, R), voxel_bin(p.y, R), voxel_bin(p.z, R))] = 1;
  CHECK(g.occupancy == expect);
}
