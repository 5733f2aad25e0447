#include <catch_amalgamated.hpp>

#include "fullfields/bvh.hpp"
#include "fullfields/synthetic.hpp"
#include "fullfields/udf_data.hpp"

using namespace ff;

TEST_CASE("BVH distance matches brute-force point-triangle scan") {
  SurfaceShape sphere = uv_sphere(0.35, 10, 14);
  TriangleBvh bvh(sphere);
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    Vec3 p = rng.uniform_in_unit_cube();
    double best = std::numeric_limits<double>::max();
    for (const auto& f : sphere.faces) {
      Vec3 c = closest_point_on_triangle(p, sphere.vertices[f[0]], sphere.vertices[f[1]],
                                         sphere.vertices[f[2]]);
      best = std::min(best, norm(p - c));
    }
    CHECK(bvh.distance(p) == Catch::Approx(best).margin(1e-12));
  }
}

TEST_CASE("ground_truth_udf against the analytic sphere") {
  // Fine tessellation: chord error ~ r * (1 - cos(pi/96)) ~ 2e-4.
  SurfaceShape sphere = uv_sphere(0.4, 96, 96);
  Rng rng(7);

  SECTION("query at the origin, clamp interplay") {
    UdfSampleSet clamped = ground_truth_udf(sphere, {{0, 0, 0}}, 0.2, rng);
    CHECK(clamped.distances[0] == Catch::Approx(0.2).margin(1e-12));  // min(delta, 0.4)
    UdfSampleSet open = ground_truth_udf(sphere, {{0, 0, 0}}, 1.0, rng);
    CHECK(open.distances[0] == Catch::Approx(0.4).margin(2e-3));
  }

  SECTION("10k uniform queries within tessellation tolerance") {
    std::vector<Vec3> queries;
    for (int i = 0; i < 10000; ++i) queries.push_back(rng.uniform_in_unit_cube());
    UdfSampleSet set = ground_truth_udf(sphere, queries, 1.0, rng);
    double worst = 0.0;
    for (size_t i = 0; i < queries.size(); ++i) {
      double analytic = std::abs(norm(queries[i]) - 0.4);
      worst = std::max(worst, std::abs(set.distances[i] - std::min(1.0, analytic)));
    }
    CHECK(worst < 2e-3);
  }

  SECTION("query on a vertex is zero") {
    UdfSampleSet set = ground_truth_udf(sphere, {sphere.vertices[17]}, 1.0, rng);
    CHECK(set.distances[0] == 0.0);
  }
}

TEST_CASE("ground_truth_udf picks the nearer of nested shells") {
  SurfaceShape nested = merge_shapes(
      {uv_sphere(0.2, 64, 64), uv_sphere(0.4, 64, 64)}, "nested");
  Rng rng(11);
  UdfSampleSet set = ground_truth_udf(nested, {{0.3, 0, 0}}, 1.0, rng);
  CHECK(set.distances[0] == Catch::Approx(0.1).margin(2e-3));
}

TEST_CASE("ground_truth_udf for a face-less cloud uses nearest neighbor") {
  SurfaceShape cloud;
  cloud.id = "ring";
  for (int i = 0; i < 5000; ++i) {
    double a = 2.0 * M_PI * i / 5000.0;
    cloud.vertices.push_back({0.4 * std::cos(a), 0.4 * std::sin(a), 0.0});
  }
  Rng rng(13);
  UdfSampleSet set = ground_truth_udf(cloud, {{0, 0, 0}}, 1.0, rng);
  CHECK(set.distances[0] == Catch::Approx(0.4).margin(1e-6));
}

TEST_CASE("ground-truth UDF invariants on a nested fixture") {
  SurfaceShape shape = merge_shapes({uv_sphere(0.18, 24, 24), box_shell({0.4, 0.35, 0.3}, 4)},
                                    "fixture");
  Rng rng(17);
  GroundTruthUdf field(shape, rng);

  SECTION("non-negative everywhere") {
    for (int i = 0; i < 2000; ++i) CHECK(field(rng.uniform_in_unit_cube()) >= 0.0);
  }

  SECTION("1-Lipschitz on random pairs") {
    for (int i = 0; i < 2000; ++i) {
      Vec3 p = rng.uniform_in_unit_cube();
      Vec3 q = rng.uniform_in_unit_cube();
      CHECK(std::abs(field(p) - field(q)) <= norm(p - q) + 1e-9);
    }
  }

  SECTION("zero on surface samples") {
    auto pts = sample_surface(shape, 2000, rng);
    for (const auto& p : pts) CHECK(field(p) <= 1e-9);
  }

  SECTION("clamped values stay 1-Lipschitz too") {
    std::vector<Vec3> queries;
    for (int i = 0; i < 500; ++i) queries.push_back(rng.uniform_in_unit_cube());
    UdfSampleSet set = ground_truth_udf(shape, queries, 0.1, rng);
    for (size_t i = 0; i + 1 < queries.size(); ++i) {
      CHECK(set.distances[i] >= 0.0);
      CHECK(set.distances[i] <= 0.1);
      CHECK(std::abs(set.distances[i] - set.distances[i + 1]) <=
            norm(queries[i] - queries[i + 1]) + 1e-9);
    }
  }
}

TEST_CASE("sample_training_queries distribution") {
  SurfaceShape sphere = uv_sphere(0.3, 24, 24);
  Rng rng(19);

  SECTION("uniform_fraction=1 needs no sigmas") {
    auto pts = sample_training_queries(sphere, 1000, {}, 1.0, rng);
    CHECK(pts.size() == 1000);
    for (const auto& p : pts) CHECK(in_unit_cube(p));
  }

  SECTION("sigma 0 lands exactly on the surface") {
    auto pts = sample_training_queries(sphere, 500, {0.0}, 0.0, rng);
    GroundTruthUdf field(sphere, rng);
    for (const auto& p : pts) CHECK(field(p) <= 1e-12);
  }

  SECTION("empirical sigma matches the requested jitter") {
    // Perturbations are isotropic around surface anchors; recover sigma from
    // the radial residual of points around the sphere surface.
    auto pts = sample_training_queries(sphere, 10000, {0.01}, 0.0, rng);
    double sum2 = 0.0;
    for (const auto& p : pts) {
      double r = norm(p) - 0.3;
      sum2 += r * r;
    }
    double sigma = std::sqrt(sum2 / double(pts.size()));
    CHECK(sigma == Catch::Approx(0.01).epsilon(0.10));
  }

  SECTION("empty sigmas with surface share requested is an error") {
    CHECK_THROWS_AS(sample_training_queries(sphere, 100, {}, 0.5, rng), std::invalid_argument);
  }

  SECTION("uniform share count is floor(fraction*n)") {
    auto pts = sample_training_queries(sphere, 1000, {0.0}, 0.25, rng);
    size_t on_surface = 0;
    GroundTruthUdf field(sphere, rng);
    for (const auto& p : pts) on_surface += field(p) <= 1e-12 ? 1 : 0;
    CHECK(on_surface >= 750);  // 250 uniform points rarely hit the surface
  }
}
