#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cspace/geometry.hpp"
#include "cspace/workspace.hpp"

namespace cspace {

inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

// One joint configuration on the torus [0,2pi)^2.
struct JointConfig {
  double q1 = 0.0;
  double q2 = 0.0;

  static JointConfig wrapped(double q1, double q2) { return {wrap_angle(q1), wrap_angle(q2)}; }
};

// Rigid dual-arm robot: two anchored links that rotate freely. Anchors are
// close enough that the links can touch each other, so the self-collision
// set is never empty.
class RobotModel {
 public:
  RobotModel(Point2 anchor1, Point2 anchor2, double link_length, double link_half_width,
             double base_side)
      : anchor1_(anchor1),
        anchor2_(anchor2),
        link_length_(link_length),
        link_half_width_(link_half_width),
        base1_(make_square(anchor1, base_side)),
        base2_(make_square(anchor2, base_side)) {
    if (!finite(anchor1) || !finite(anchor2)) throw std::invalid_argument("anchors must be finite");
    if (!(link_length > 0.0)) throw std::invalid_argument("link_length must be > 0");
    if (!(link_half_width > 0.0)) throw std::invalid_argument("link_half_width must be > 0");
    if (!(base_side > 0.0)) throw std::invalid_argument("base side must be > 0");
    if (!(distance(anchor1, anchor2) < 2.0 * link_length)) {
      throw std::invalid_argument("anchors must be closer than 2*link_length");
    }
  }

  static RobotModel default_model() {
    return RobotModel({0.30, 0.50}, {0.70, 0.50}, 0.25, 0.02, 0.06);
  }

  Point2 anchor(int arm) const { return arm == 1 ? anchor1_ : anchor2_; }
  double link_length() const { return link_length_; }
  double link_half_width() const { return link_half_width_; }
  const ConvexPolygon2& base_footprint(int arm) const { return arm == 1 ? base1_ : base2_; }

 private:
  Point2 anchor1_;
  Point2 anchor2_;
  double link_length_;
  double link_half_width_;
  ConvexPolygon2 base1_;
  ConvexPolygon2 base2_;
};

// Self-collision and obstacle collision are tracked independently and may
// co-occur. Free means neither.
struct CollisionStatus {
  bool self_collision = false;
  std::uint32_t obstacle_mask = 0;  // bit k set: collision with obstacle k

  bool free() const { return !self_collision && obstacle_mask == 0; }
  bool collides() const { return !free(); }

  std::vector<int> obstacle_indices() const {
    std::vector<int> out;
    for (int k = 0; k < 32; ++k) {
      if (obstacle_mask & (1u << k)) out.push_back(k);
    }
    return out;
  }

  bool operator==(const CollisionStatus&) const = default;
};

inline Capsule2 link_pose(const RobotModel& r, int arm, double angle) {
  const Point2 a = r.anchor(arm);
  const Point2 tip{a.x + r.link_length() * std::cos(angle),
                   a.y + r.link_length() * std::sin(angle)};
  return Capsule2{{a, tip}, r.link_half_width()};
}

// Per-configuration collision query. Base footprints are not checked against
// obstacles; dataset sampling keeps obstacles off the bases.
inline CollisionStatus collision_status(const RobotModel& r, const Workspace& w,
                                        const JointConfig& q) {
  if (w.obstacles.size() > 32) throw std::invalid_argument("at most 32 obstacles supported");
  const Capsule2 link1 = link_pose(r, 1, q.q1);
  const Capsule2 link2 = link_pose(r, 2, q.q2);

  CollisionStatus st;
  st.self_collision = capsule_capsule_collides(link1, link2);
  for (std::size_t k = 0; k < w.obstacles.size(); ++k) {
    const auto& ob = w.obstacles[k];
    bool hit;
    if (const auto* c = std::get_if<Circle2>(&ob)) {
      hit = capsule_circle_collides(link1, *c) || capsule_circle_collides(link2, *c);
    } else {
      const auto& g = std::get<ConvexPolygon2>(ob);
      hit = capsule_polygon_collides(link1, g) || capsule_polygon_collides(link2, g);
    }
    if (hit) st.obstacle_mask |= (1u << k);
  }
  return st;
}

}  // namespace cspace
