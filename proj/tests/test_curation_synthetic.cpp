#include <catch_amalgamated.hpp>

#include "fullfields/curation.hpp"
#include "fullfields/synthetic.hpp"

using namespace ff;

TEST_CASE("curate_internal rejects a single shell") {
  SurfaceShape sphere = uv_sphere(0.4, 24, 32, {0, 0, 0}, "single");
  Rng rng(3);
  CurationRecord rec = curate_internal(sphere, 0.05, rng);
  CHECK(rec.interior_fraction() < 0.02);
  CHECK_FALSE(rec.accepted);
  CHECK(rec.total_point_count == 2048);
}

TEST_CASE("curate_internal accepts nested spheres with the area-share fraction") {
  SurfaceShape nested =
      merge_shapes({uv_sphere(0.4, 24, 32), uv_sphere(0.2, 24, 32)}, "nested");
  Rng rng(5);
  CurationRecord rec = curate_internal(nested, 0.05, rng, 4096);
  // Inner shell area share: 0.2^2 / (0.2^2 + 0.4^2) = 0.2.
  CHECK(rec.interior_fraction() == Catch::Approx(0.2).margin(0.03));
  CHECK(rec.accepted);
}

TEST_CASE("curate_internal brute-force parity oracle on analytic spheres") {
  // For concentric spheres the geometric truth is radial: a sample on shell k
  // is inside iff some larger shell encloses it.
  SurfaceShape nested =
      merge_shapes({uv_sphere(0.45, 24, 32), uv_sphere(0.25, 24, 32)}, "oracle");
  Rng sample_rng(7);
  auto pts = sample_surface(nested, 512, sample_rng);
  TriangleBvh bvh(nested);
  size_t agree = 0;
  for (const auto& p : pts) {
    int odd = 0;
    for (int axis = 0; axis < 3; ++axis)
      for (int sign : {-1, 1}) odd += bvh.ray_crossings(p, axis, sign) % 2;
    bool parity_inside = odd >= 4;
    bool truth_inside = norm(p) < 0.35;  // inner-shell samples
    if (parity_inside == truth_inside) ++agree;
  }
  CHECK(double(agree) / double(pts.size()) > 0.98);
}

TEST_CASE("curate_internal threshold zero accepts everything") {
  SurfaceShape sphere = uv_sphere(0.4, 16, 24);
  Rng rng(9);
  CHECK(curate_internal(sphere, 0.0, rng).accepted);
}

TEST_CASE("curate_internal on degenerate and face-less shapes") {
  Rng rng(11);
  SECTION("coplanar mesh") {
    SurfaceShape flat;
    flat.id = "flat";
    flat.vertices = {{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
    flat.faces = {{0, 1, 2}, {0, 2, 3}};
    CurationRecord rec = curate_internal(flat, 0.05, rng);
    CHECK(rec.interior_point_count == 0);
    CHECK_FALSE(rec.accepted);
  }
  SECTION("point cloud without faces") {
    SurfaceShape cloud;
    cloud.id = "cloud";
    Rng gen(13);
    for (int i = 0; i < 3000; ++i) cloud.vertices.push_back(gen.uniform_in_unit_cube());
    CurationRecord rec = curate_internal(cloud, 0.05, rng);
    CHECK(rec.interior_point_count == 0);
    CHECK_FALSE(rec.accepted);
  }
}

TEST_CASE("synthetic dataset is deterministic and sized as requested") {
  auto a = make_synthetic_nested_dataset(20, 42);
  auto b = make_synthetic_nested_dataset(20, 42);
  REQUIRE(a.size() == 20);
  REQUIRE(b.size() == 20);
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].vertices.size() == b[i].vertices.size());
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].faces == b[i].faces);
    bool identical = true;
    for (size_t v = 0; v < a[i].vertices.size(); ++v)
      identical = identical && a[i].vertices[v] == b[i].vertices[v];
    CHECK(identical);
  }
  // A different seed produces different geometry.
  auto c = make_synthetic_nested_dataset(20, 43);
  bool any_diff = false;
  for (size_t v = 0; v < std::min(a[0].vertices.size(), c[0].vertices.size()); ++v)
    any_diff = any_diff || !(a[0].vertices[v] == c[0].vertices[v]);
  CHECK(any_diff);
}

TEST_CASE("synthetic shapes are normalized and valid") {
  auto shapes = make_synthetic_nested_dataset(12, 7);
  for (const auto& s : shapes) {
    CHECK_NOTHROW(validate_shape(s));
    Aabb box = bounding_box(s.vertices);
    Vec3 e = box.extent();
    CHECK(std::max({e.x, e.y, e.z}) == Catch::Approx(1.0).margin(1e-9));
    CHECK(in_unit_cube(box.lo, 1e-9));
    CHECK(in_unit_cube(box.hi, 1e-9));
  }
}

TEST_CASE("every multi-shell synthetic shape passes curation at 0.05") {
  SyntheticOptions opt;
  opt.min_shells = 2;
  opt.max_shells = 3;
  auto shapes = make_synthetic_nested_dataset(10, 99, opt);
  for (const auto& s : shapes) {
    Rng rng(fnv1a(s.id.data(), s.id.size()));
    CurationRecord rec = curate_internal(s, 0.05, rng);
    INFO(s.id << " interior fraction " << rec.interior_fraction());
    CHECK(rec.accepted);
  }
}
