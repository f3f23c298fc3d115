#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cspace/robot.hpp"
#include "cspace/rng.hpp"
#include "oracles.hpp"

using namespace cspace;

namespace {

Workspace single_circle(Point2 c, double r) {
  Workspace w;
  w.obstacles.push_back(Circle2{c, r});
  return w;
}

}  // namespace

TEST_CASE("robot model invariants") {
  CHECK_NOTHROW(RobotModel::default_model());
  // anchors too far apart: arms can never touch
  CHECK_THROWS_AS(RobotModel({0.1, 0.5}, {0.9, 0.5}, 0.25, 0.02, 0.06), std::invalid_argument);
  CHECK_THROWS_AS(RobotModel({0.3, 0.5}, {0.7, 0.5}, -1.0, 0.02, 0.06), std::invalid_argument);

  const auto r = RobotModel::default_model();
  CHECK(point_in_polygon(r.anchor(1), r.base_footprint(1)));
  CHECK(point_in_polygon(r.anchor(2), r.base_footprint(2)));
}

TEST_CASE("link pose") {
  const auto r = RobotModel::default_model();
  const double L = r.link_length();

  const auto c0 = link_pose(r, 1, 0.0);
  CHECK(c0.axis.b.x == Catch::Approx(r.anchor(1).x + L));
  CHECK(c0.axis.b.y == Catch::Approx(r.anchor(1).y));
  CHECK(c0.half_width == r.link_half_width());

  const auto c90 = link_pose(r, 2, std::numbers::pi / 2.0);
  CHECK(c90.axis.b.x == Catch::Approx(r.anchor(2).x));
  CHECK(c90.axis.b.y == Catch::Approx(r.anchor(2).y + L));

  const auto full_turn = link_pose(r, 1, kTwoPi);
  const auto zero = link_pose(r, 1, 0.0);
  CHECK(full_turn.axis.b.x == Catch::Approx(zero.axis.b.x).margin(1e-12));
  CHECK(full_turn.axis.b.y == Catch::Approx(zero.axis.b.y).margin(1e-12));
}

TEST_CASE("collision status basics") {
  const auto r = RobotModel::default_model();
  const Workspace empty;

  // arms pointing directly away from each other
  const auto away = collision_status(r, empty, {std::numbers::pi, 0.0});
  CHECK(away.free());

  // arms pointing at each other: anchors 0.4 apart, combined reach 0.5
  const auto facing = collision_status(r, empty, {0.0, std::numbers::pi});
  CHECK(facing.self_collision);
  CHECK(facing.obstacle_mask == 0);

  // circle swallowing anchor 1 collides with arm 1 at every q1
  const auto w = single_circle(r.anchor(1), 0.05);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto st = collision_status(r, w, {rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)});
    CHECK((st.obstacle_mask & 1u) != 0);
  }
  CHECK(collision_status(r, w, {0.0, 0.0}).obstacle_indices() == std::vector<int>{0});
}

TEST_CASE("collision status is 2pi-periodic") {
  const auto r = RobotModel::default_model();
  Rng rng(31);
  Workspace w = single_circle({0.15, 0.30}, 0.06);
  w.obstacles.push_back(Circle2{{0.8, 0.75}, 0.05});
  for (int i = 0; i < 2000; ++i) {
    const double q1 = rng.uniform(0.0, kTwoPi);
    const double q2 = rng.uniform(0.0, kTwoPi);
    const auto base = collision_status(r, w, JointConfig::wrapped(q1, q2));
    CHECK(collision_status(r, w, JointConfig::wrapped(q1 + kTwoPi, q2)) == base);
    CHECK(collision_status(r, w, JointConfig::wrapped(q1, q2 - kTwoPi)) == base);
  }
}

TEST_CASE("unreachable obstacle decouples the joints") {
  const auto r = RobotModel::default_model();
  // close to anchor 1, far outside arm 2's reach
  const Circle2 c{{0.12, 0.35}, 0.05};
  REQUIRE(distance(c.center, r.anchor(2)) >
          r.link_length() + r.link_half_width() + c.radius);
  const auto w = single_circle(c.center, c.radius);

  Rng rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const double q1 = rng.uniform(0.0, kTwoPi);
    const auto ref = collision_status(r, w, {q1, 0.0});
    for (int i = 0; i < 20; ++i) {
      const auto st = collision_status(r, w, {q1, rng.uniform(0.0, kTwoPi)});
      CHECK(st.obstacle_mask == ref.obstacle_mask);
    }
  }
}

TEST_CASE("self-collision is mirror symmetric for the default geometry") {
  const auto r = RobotModel::default_model();
  const Workspace empty;
  Rng rng(43);
  for (int i = 0; i < 2000; ++i) {
    const double q1 = rng.uniform(0.0, kTwoPi);
    const double q2 = rng.uniform(0.0, kTwoPi);
    const bool a = collision_status(r, empty, {q1, q2}).self_collision;
    const bool b = collision_status(r, empty,
                                    JointConfig::wrapped(std::numbers::pi - q2,
                                                         std::numbers::pi - q1))
                       .self_collision;
    CHECK(a == b);
  }
}

TEST_CASE("collision status matches the clean-room oracle") {
  const auto r = RobotModel::default_model();
  Rng rng(47);
  Workspace w;
  w.obstacles.push_back(Circle2{{0.2, 0.2}, 0.06});
  w.obstacles.push_back(make_square({0.8, 0.3}, 0.12, 0.4));
  w.obstacles.push_back(make_equilateral_triangle({0.5, 0.85}, 0.14, 1.1));
  for (int i = 0; i < 200; ++i) {
    const JointConfig q{rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)};
    const auto got = collision_status(r, w, q);
    const auto want = oracle::collision_status(r, w, q);
    CHECK(got.self_collision == want.self_collision);
    CHECK(got.obstacle_mask == want.obstacle_mask);
  }
}
