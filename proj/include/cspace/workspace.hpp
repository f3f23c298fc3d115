#pragma once

#include <stdexcept>
#include <variant>
#include <vector>

#include "cspace/geometry.hpp"
#include "cspace/image.hpp"

namespace cspace {

using ObstacleShape = std::variant<Circle2, ConvexPolygon2>;

// Obstacle set in the unit workspace frame [0,1]^2. The index of an obstacle
// in the vector is its stable identity in collision reports and labels.
struct Workspace {
  std::vector<ObstacleShape> obstacles;
};

inline bool obstacle_inside_unit_frame(const ObstacleShape& s) {
  if (const auto* c = std::get_if<Circle2>(&s)) {
    return c->center.x - c->radius >= 0.0 && c->center.x + c->radius <= 1.0 &&
           c->center.y - c->radius >= 0.0 && c->center.y + c->radius <= 1.0;
  }
  const auto& g = std::get<ConvexPolygon2>(s);
  for (const auto& v : g.vertices()) {
    if (v.x < 0.0 || v.x > 1.0 || v.y < 0.0 || v.y > 1.0) return false;
  }
  return true;
}

inline bool obstacles_overlap(const ObstacleShape& a, const ObstacleShape& b) {
  if (const auto* ca = std::get_if<Circle2>(&a)) {
    if (const auto* cb = std::get_if<Circle2>(&b)) return circles_overlap(*ca, *cb);
    return circle_polygon_overlaps(*ca, std::get<ConvexPolygon2>(b));
  }
  const auto& ga = std::get<ConvexPolygon2>(a);
  if (const auto* cb = std::get_if<Circle2>(&b)) return circle_polygon_overlaps(*cb, ga);
  return polygons_overlap(ga, std::get<ConvexPolygon2>(b));
}

inline bool obstacle_overlaps_polygon(const ObstacleShape& s, const ConvexPolygon2& g) {
  if (const auto* c = std::get_if<Circle2>(&s)) return circle_polygon_overlaps(*c, g);
  return polygons_overlap(std::get<ConvexPolygon2>(s), g);
}

inline bool point_in_obstacle(Point2 p, const ObstacleShape& s) {
  if (const auto* c = std::get_if<Circle2>(&s)) return distance(p, c->center) <= c->radius;
  return point_in_polygon(p, std::get<ConvexPolygon2>(s));
}

// Checks the Workspace invariants against the two robot base footprints:
// pairwise non-overlapping obstacles, none touching a base, all inside the
// unit frame. Returns a diagnostic for the first violation, empty if valid.
inline std::string workspace_violation(const Workspace& w, const ConvexPolygon2& base1,
                                       const ConvexPolygon2& base2) {
  for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
    if (!obstacle_inside_unit_frame(w.obstacles[i])) {
      return "obstacle " + std::to_string(i) + " leaves the unit frame";
    }
    if (obstacle_overlaps_polygon(w.obstacles[i], base1) ||
        obstacle_overlaps_polygon(w.obstacles[i], base2)) {
      return "obstacle " + std::to_string(i) + " intersects a base footprint";
    }
    for (std::size_t j = i + 1; j < w.obstacles.size(); ++j) {
      if (obstacles_overlap(w.obstacles[i], w.obstacles[j])) {
        return "obstacles " + std::to_string(i) + " and " + std::to_string(j) + " overlap";
      }
    }
  }
  return {};
}

// Obstacles filled black on white; the robot is not drawn. Pixel (r,c) is
// sampled at its center: x = (c+0.5)/N, y = 1 - (r+0.5)/N.
inline GrayImage render_workspace(const Workspace& w, int resolution) {
  if (resolution < 2) throw std::invalid_argument("render resolution must be >= 2");
  GrayImage img(resolution, resolution, 1.0f);
  for (int r = 0; r < resolution; ++r) {
    const double y = 1.0 - (r + 0.5) / resolution;
    for (int c = 0; c < resolution; ++c) {
      const Point2 p{(c + 0.5) / resolution, y};
      for (const auto& ob : w.obstacles) {
        if (point_in_obstacle(p, ob)) {
          img.at(r, c) = 0.0f;
          break;
        }
      }
    }
  }
  return img;
}

}  // namespace cspace
