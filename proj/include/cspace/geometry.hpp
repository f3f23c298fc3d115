#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cspace {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline Point2 rotated(Point2 p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

struct Segment2 {
  Point2 a;
  Point2 b;
};

// Arm link: a segment swept by a disk of radius half_width.
struct Capsule2 {
  Segment2 axis;
  double half_width = 0.0;
};

struct Circle2 {
  Point2 center;
  double radius = 0.0;
};

inline void validate(const Segment2& s) {
  if (!finite(s.a) || !finite(s.b)) throw std::invalid_argument("segment endpoints must be finite");
}

inline void validate(const Capsule2& c) {
  validate(c.axis);
  if (!(c.half_width >= 0.0)) throw std::invalid_argument("capsule half_width must be >= 0");
}

inline void validate(const Circle2& c) {
  if (!finite(c.center)) throw std::invalid_argument("circle center must be finite");
  if (!(c.radius > 0.0)) throw std::invalid_argument("circle radius must be > 0");
}

// Strictly convex, counterclockwise polygon. Construct through make() so the
// invariants hold for every live instance.
class ConvexPolygon2 {
 public:
  static ConvexPolygon2 make(std::vector<Point2> vertices) {
    if (vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
    for (const auto& v : vertices) {
      if (!finite(v)) throw std::invalid_argument("polygon vertices must be finite");
    }
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& p0 = vertices[i];
      const Point2& p1 = vertices[(i + 1) % n];
      const Point2& p2 = vertices[(i + 2) % n];
      if (!(cross(p1 - p0, p2 - p1) > 0.0)) {
        throw std::invalid_argument("polygon must be strictly convex and counterclockwise");
      }
    }
    ConvexPolygon2 g;
    g.vertices_ = std::move(vertices);
    return g;
  }

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

  Segment2 edge(std::size_t i) const {
    return {vertices_[i], vertices_[(i + 1) % vertices_.size()]};
  }

  // Arithmetic mean of the vertices; coincides with the area centroid for
  // the regular shapes used as obstacles.
  Point2 centroid() const {
    Point2 c{0.0, 0.0};
    for (const auto& v : vertices_) c = c + v;
    return (1.0 / static_cast<double>(vertices_.size())) * c;
  }

 private:
  ConvexPolygon2() = default;
  std::vector<Point2> vertices_;
};

inline double point_segment_distance(Point2 p, const Segment2& s) {
  const Point2 ab = s.b - s.a;
  const double denom = dot(ab, ab);
  if (denom == 0.0) return distance(p, s.a);
  const double t = std::clamp(dot(p - s.a, ab) / denom, 0.0, 1.0);
  return distance(p, s.a + t * ab);
}

namespace detail {

inline bool on_segment(Point2 p, const Segment2& s) {
  return std::min(s.a.x, s.b.x) <= p.x && p.x <= std::max(s.a.x, s.b.x) &&
         std::min(s.a.y, s.b.y) <= p.y && p.y <= std::max(s.a.y, s.b.y);
}

}  // namespace detail

inline bool segments_intersect(const Segment2& s1, const Segment2& s2) {
  const double d1 = cross(s2.b - s2.a, s1.a - s2.a);
  const double d2 = cross(s2.b - s2.a, s1.b - s2.a);
  const double d3 = cross(s1.b - s1.a, s2.a - s1.a);
  const double d4 = cross(s1.b - s1.a, s2.b - s1.a);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && detail::on_segment(s1.a, s2)) return true;
  if (d2 == 0 && detail::on_segment(s1.b, s2)) return true;
  if (d3 == 0 && detail::on_segment(s2.a, s1)) return true;
  if (d4 == 0 && detail::on_segment(s2.b, s1)) return true;
  return false;
}

inline double segment_segment_distance(const Segment2& s1, const Segment2& s2) {
  if (segments_intersect(s1, s2)) return 0.0;
  double d = point_segment_distance(s1.a, s2);
  d = std::min(d, point_segment_distance(s1.b, s2));
  d = std::min(d, point_segment_distance(s2.a, s1));
  d = std::min(d, point_segment_distance(s2.b, s1));
  return d;
}

// Closed containment: boundary points count as inside.
inline bool point_in_polygon(Point2 p, const ConvexPolygon2& g) {
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Segment2 e = g.edge(i);
    if (cross(e.b - e.a, p - e.a) < 0.0) return false;
  }
  return true;
}

// Distance from a point to the closed polygon region (0 inside).
inline double point_polygon_distance(Point2 p, const ConvexPolygon2& g) {
  if (point_in_polygon(p, g)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    d = std::min(d, point_segment_distance(p, g.edge(i)));
  }
  return d;
}

// Distance from a segment to the closed polygon region (0 on overlap).
inline double segment_polygon_distance(const Segment2& s, const ConvexPolygon2& g) {
  if (point_in_polygon(s.a, g) || point_in_polygon(s.b, g)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Segment2 e = g.edge(i);
    if (segments_intersect(s, e)) return 0.0;
    d = std::min(d, segment_segment_distance(s, e));
  }
  return d;
}

// Collision predicates are closed: touching counts as collision.

inline bool capsule_circle_collides(const Capsule2& c, const Circle2& o) {
  return point_segment_distance(o.center, c.axis) <= c.half_width + o.radius;
}

inline bool capsule_polygon_collides(const Capsule2& c, const ConvexPolygon2& g) {
  return segment_polygon_distance(c.axis, g) <= c.half_width;
}

inline bool capsule_capsule_collides(const Capsule2& a, const Capsule2& b) {
  return segment_segment_distance(a.axis, b.axis) <= a.half_width + b.half_width;
}

inline bool circles_overlap(const Circle2& a, const Circle2& b) {
  return distance(a.center, b.center) <= a.radius + b.radius;
}

inline bool circle_polygon_overlaps(const Circle2& c, const ConvexPolygon2& g) {
  return point_polygon_distance(c.center, g) <= c.radius;
}

// Separating-axis test for convex polygons; touching counts as overlap.
inline bool polygons_overlap(const ConvexPolygon2& a, const ConvexPolygon2& b) {
  const auto separated_by_edges_of = [](const ConvexPolygon2& p, const ConvexPolygon2& q) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Segment2 e = p.edge(i);
      const Point2 axis{e.a.y - e.b.y, e.b.x - e.a.x};  // outward normal for ccw
      double pmax = -std::numeric_limits<double>::infinity();
      for (const auto& v : p.vertices()) pmax = std::max(pmax, dot(axis, v));
      double qmin = std::numeric_limits<double>::infinity();
      for (const auto& v : q.vertices()) qmin = std::min(qmin, dot(axis, v));
      if (qmin > pmax) return true;
    }
    return false;
  };
  return !separated_by_edges_of(a, b) && !separated_by_edges_of(b, a);
}

// Rotates every vertex about the polygon centroid, then translates.
inline ConvexPolygon2 transform_polygon(const ConvexPolygon2& g, double rotation,
                                        Point2 translation) {
  const Point2 c = g.centroid();
  std::vector<Point2> out;
  out.reserve(g.size());
  for (const auto& v : g.vertices()) {
    out.push_back(c + rotated(v - c, rotation) + translation);
  }
  return ConvexPolygon2::make(std::move(out));
}

inline double bounding_radius(const ConvexPolygon2& g, Point2 about) {
  double r = 0.0;
  for (const auto& v : g.vertices()) r = std::max(r, distance(v, about));
  return r;
}

inline ConvexPolygon2 make_square(Point2 center, double side, double rotation = 0.0) {
  if (!(side > 0.0)) throw std::invalid_argument("square side must be > 0");
  const double h = side / 2.0;
  auto g = ConvexPolygon2::make({{center.x - h, center.y - h},
                                 {center.x + h, center.y - h},
                                 {center.x + h, center.y + h},
                                 {center.x - h, center.y + h}});
  return rotation == 0.0 ? g : transform_polygon(g, rotation, {0.0, 0.0});
}

inline ConvexPolygon2 make_equilateral_triangle(Point2 center, double side,
                                                double rotation = 0.0) {
  if (!(side > 0.0)) throw std::invalid_argument("triangle side must be > 0");
  const double r = side / std::numbers::sqrt3;  // circumradius
  std::vector<Point2> v;
  for (int k = 0; k < 3; ++k) {
    const double a = rotation + std::numbers::pi / 2.0 + k * kTwoPi / 3.0;
    v.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  return ConvexPolygon2::make(std::move(v));
}

}  // namespace cspace
