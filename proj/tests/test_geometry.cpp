#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cspace/geometry.hpp"
#include "cspace/rng.hpp"
#include "oracles.hpp"

using namespace cspace;

namespace {

Point2 random_point(Rng& rng, double lo = -2.0, double hi = 2.0) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

Segment2 random_segment(Rng& rng) { return {random_point(rng), random_point(rng)}; }

ConvexPolygon2 random_polygon(Rng& rng) {
  const Point2 c = random_point(rng, -1.0, 1.0);
  const double r = rng.uniform(0.05, 0.6);
  const int kind = static_cast<int>(rng.uniform_int(3));
  const double rot = rng.uniform(0.0, kTwoPi);
  if (kind == 0) return make_square(c, r, rot);
  if (kind == 1) return make_equilateral_triangle(c, r, rot);
  // regular pentagon
  std::vector<Point2> v;
  for (int k = 0; k < 5; ++k) {
    const double a = rot + k * kTwoPi / 5.0;
    v.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return ConvexPolygon2::make(v);
}

}  // namespace

TEST_CASE("point-segment distance basics") {
  CHECK(point_segment_distance({2, 0}, {{0, 0}, {1, 0}}) == Catch::Approx(1.0));
  CHECK(point_segment_distance({0.5, 0.3}, {{0, 0}, {1, 0}}) == Catch::Approx(0.3));
  CHECK(point_segment_distance({3, 4}, {{0, 0}, {0, 0}}) == Catch::Approx(5.0));
}

TEST_CASE("segment-segment distance basics") {
  CHECK(segment_segment_distance({{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}) == Catch::Approx(1.0));
  CHECK(segment_segment_distance({{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}) == 0.0);
  // nearest points are the endpoints (1,0) and (2,1)
  CHECK(segment_segment_distance({{0, 0}, {1, 0}}, {{2, 1}, {3, 1}}) ==
        Catch::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("segment-segment distance is symmetric") {
  Rng rng(42);
  for (int i = 0; i < 500; ++i) {
    const Segment2 s1 = random_segment(rng);
    const Segment2 s2 = random_segment(rng);
    CHECK(segment_segment_distance(s1, s2) == segment_segment_distance(s2, s1));
  }
}

TEST_CASE("distances agree with the sampling oracle") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const Point2 p = random_point(rng);
    const Segment2 s1 = random_segment(rng);
    const Segment2 s2 = random_segment(rng);
    CHECK(point_segment_distance(p, s1) == Catch::Approx(oracle::point_segment(p, s1)).margin(1e-6));
    CHECK(segment_segment_distance(s1, s2) ==
          Catch::Approx(oracle::segment_segment(s1, s2)).margin(1e-6));
  }
}

TEST_CASE("capsule-circle collision") {
  const Capsule2 cap{{{0, 0}, {1, 0}}, 0.02};
  CHECK_FALSE(capsule_circle_collides(cap, {{1.5, 0}, 0.4}));   // gap 0.5 > 0.42
  CHECK(capsule_circle_collides(cap, {{0.5, 0.3}, 0.3}));       // 0.3 <= 0.32
  CHECK(capsule_circle_collides(cap, {{0.7, 0.0}, 0.001}));     // center on the axis
}

TEST_CASE("capsule-circle collision is monotone in radius") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const Capsule2 cap{random_segment(rng), rng.uniform(0.0, 0.3)};
    const Point2 c = random_point(rng);
    const double r = rng.uniform(0.01, 1.0);
    if (!capsule_circle_collides(cap, {c, r})) {
      CHECK_FALSE(capsule_circle_collides(cap, {c, r * rng.uniform(0.1, 0.999)}));
    }
  }
}

TEST_CASE("capsule-polygon collision") {
  const auto square_far = ConvexPolygon2::make({{2, 0}, {3, 0}, {3, 1}, {2, 1}});
  CHECK_FALSE(capsule_polygon_collides({{{0, 0}, {1, 0}}, 0.02}, square_far));

  const auto square_hit = ConvexPolygon2::make({{0.4, -0.5}, {0.6, -0.5}, {0.6, 0.5}, {0.4, 0.5}});
  CHECK(capsule_polygon_collides({{{0, 0}, {1, 0}}, 0.02}, square_hit));

  // boundary case: square bottom edge at y=0.52 above the axis
  const auto square_above = ConvexPolygon2::make({{0, 0.52}, {1, 0.52}, {1, 1.5}, {0, 1.5}});
  CHECK_FALSE(capsule_polygon_collides({{{0, 0}, {1, 0}}, 0.5}, square_above));
  CHECK(capsule_polygon_collides({{{0, 0}, {1, 0}}, 0.52}, square_above));
}

TEST_CASE("segment-polygon distance agrees with the sampling oracle") {
  Rng rng(13);
  for (int i = 0; i < 150; ++i) {
    const Segment2 s = random_segment(rng);
    const auto g = random_polygon(rng);
    const double got = segment_polygon_distance(s, g);
    const double want = oracle::segment_polygon(s, g.vertices());
    if (want == 0.0) {
      CHECK(got == 0.0);
    } else {
      CHECK(got == Catch::Approx(want).margin(1e-6));
    }
  }
}

TEST_CASE("collision predicates are invariant under rigid motion") {
  Rng rng(17);
  const auto apply = [](Point2 p, double rot, Point2 t) { return rotated(p, rot) + t; };
  int tested = 0;
  for (int i = 0; i < 400 && tested < 200; ++i) {
    const Capsule2 cap{random_segment(rng), rng.uniform(0.0, 0.2)};
    const Circle2 circle{random_point(rng), rng.uniform(0.05, 0.5)};
    const auto poly = random_polygon(rng);
    // skip knife-edge cases: a rigid motion perturbs distances at the 1e-15
    // level, which is only observable exactly at the threshold
    const double margin_c =
        std::abs(point_segment_distance(circle.center, cap.axis) - cap.half_width - circle.radius);
    const double margin_g = std::abs(segment_polygon_distance(cap.axis, poly) - cap.half_width);
    if (margin_c < 1e-9 || margin_g < 1e-9) continue;
    ++tested;

    const double rot = rng.uniform(0.0, kTwoPi);
    const Point2 t = random_point(rng);
    const Capsule2 cap2{{apply(cap.axis.a, rot, t), apply(cap.axis.b, rot, t)}, cap.half_width};
    const Circle2 circle2{apply(circle.center, rot, t), circle.radius};
    std::vector<Point2> verts;
    for (const auto& v : poly.vertices()) verts.push_back(apply(v, rot, t));
    const auto poly2 = ConvexPolygon2::make(verts);

    CHECK(capsule_circle_collides(cap, circle) == capsule_circle_collides(cap2, circle2));
    CHECK(capsule_polygon_collides(cap, poly) == capsule_polygon_collides(cap2, poly2));
  }
  CHECK(tested >= 200);
}

TEST_CASE("transform_polygon") {
  const auto tri = make_equilateral_triangle({0.3, 0.4}, 0.2);

  SECTION("identity") {
    const auto same = transform_polygon(tri, 0.0, {0, 0});
    for (std::size_t i = 0; i < tri.size(); ++i) {
      CHECK(same.vertices()[i].x == Catch::Approx(tri.vertices()[i].x));
      CHECK(same.vertices()[i].y == Catch::Approx(tri.vertices()[i].y));
    }
  }

  SECTION("quarter turn maps a square onto itself as a set") {
    const auto sq = make_square({0.5, 0.5}, 0.2);
    const auto turned = transform_polygon(sq, std::numbers::pi / 2.0, {0, 0});
    for (const auto& v : turned.vertices()) {
      bool found = false;
      for (const auto& u : sq.vertices()) {
        if (std::abs(u.x - v.x) < 1e-12 && std::abs(u.y - v.y) < 1e-12) found = true;
      }
      CHECK(found);
    }
  }

  SECTION("half turn is a point reflection through the centroid") {
    const Point2 c = tri.centroid();
    const auto flipped = transform_polygon(tri, std::numbers::pi, {0, 0});
    for (std::size_t i = 0; i < tri.size(); ++i) {
      const Point2 expect{2.0 * c.x - tri.vertices()[i].x, 2.0 * c.y - tri.vertices()[i].y};
      CHECK(flipped.vertices()[i].x == Catch::Approx(expect.x).margin(1e-12));
      CHECK(flipped.vertices()[i].y == Catch::Approx(expect.y).margin(1e-12));
    }
  }

  SECTION("rotation preserves convexity and orientation") {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
      const auto g = random_polygon(rng);
      CHECK_NOTHROW(transform_polygon(g, rng.uniform(0.0, kTwoPi), random_point(rng)));
    }
  }
}

TEST_CASE("polygon validation") {
  CHECK_THROWS_AS(ConvexPolygon2::make({{0, 0}, {1, 0}}), std::invalid_argument);
  // clockwise
  CHECK_THROWS_AS(ConvexPolygon2::make({{0, 0}, {0, 1}, {1, 0}}), std::invalid_argument);
  // collinear
  CHECK_THROWS_AS(ConvexPolygon2::make({{0, 0}, {1, 0}, {2, 0}, {1, 1}}), std::invalid_argument);
  // repeated vertex
  CHECK_THROWS_AS(ConvexPolygon2::make({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), std::invalid_argument);
  // non-convex
  CHECK_THROWS_AS(ConvexPolygon2::make({{0, 0}, {2, 0}, {0.1, 0.1}, {0, 2}}),
                  std::invalid_argument);
  CHECK_NOTHROW(ConvexPolygon2::make({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
}

TEST_CASE("shape constructor validation") {
  CHECK_THROWS_AS(validate(Circle2{{0, 0}, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Circle2{{0, 0}, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(Capsule2{{{0, 0}, {1, 0}}, -0.1}), std::invalid_argument);
  CHECK_NOTHROW(validate(Capsule2{{{0, 0}, {0, 0}}, 0.0}));  // degenerate segment is fine
  const double nan = std::nan("");
  CHECK_THROWS_AS(validate(Segment2{{nan, 0}, {1, 0}}), std::invalid_argument);
}
