#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "handfield/common.hpp"

namespace handfield {

/// Half-line from a camera centre. `direction` must be unit length.
struct Ray {
  Vec3 origin;
  Vec3 direction;

  static Ray through(const Vec3& origin, const Vec3& target) {
    Vec3 d = target - origin;
    double n = d.norm();
    if (n <= 0.0) throw DegenerateGeometryError("ray through coincident points");
    return Ray{origin, d / n};
  }
};

/// Plane given by a unit normal and a point on the plane (the palm-marker
/// centroid for regression planes).
struct Plane {
  Vec3 normal;
  Vec3 point;

  double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

/// Least-squares plane through a point cloud. The normal is the right
/// singular vector of the centred point matrix with the smallest singular
/// value; the reference point is the centroid, which lies exactly on the
/// fitted plane.
inline Plane regression_plane(std::span<const Vec3> points) {
  if (points.size() < 3)
    throw DegenerateGeometryError("regression_plane needs at least 3 points");

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::MatrixXd centered(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i)
    centered.row(i) = (points[i] - centroid).transpose();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // Collinear input: only one non-negligible singular value.
  if (sv(1) <= 1e-12 * std::max(sv(0), 1.0))
    throw DegenerateGeometryError("regression_plane: points are collinear");

  Vec3 normal = svd.matrixV().col(2);
  return Plane{normal.normalized(), centroid};
}

struct RayPlaneHit {
  Vec3 point;
  double t;  // ray parameter, mm (direction is unit)
};

/// Intersection of a ray-line with a plane. Absent when the ray is parallel
/// to the plane (|normal . direction| < 1e-12). t may be negative: the
/// intersection then lies behind the ray origin.
inline std::optional<RayPlaneHit> ray_plane_intersection(const Ray& ray, const Plane& plane) {
  double denom = plane.normal.dot(ray.direction);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  double t = plane.normal.dot(plane.point - ray.origin) / denom;
  return RayPlaneHit{ray.origin + t * ray.direction, t};
}

namespace detail {

/// Orthonormal in-plane basis (u, v) for a unit normal.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
  Vec3 seed = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 u = normal.cross(seed).normalized();
  Vec3 v = normal.cross(u);
  return {u, v};
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Convex hull of a small 2D point set, counter-clockwise. Points are first
/// ordered by angle about their centroid, then reduced with a Graham scan so
/// vertices interior to the hull or collinear on an edge drop out.
inline std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Vec2& a, const Vec2& b) {
    double aa = std::atan2(a.y() - c.y(), a.x() - c.x());
    double ab = std::atan2(b.y() - c.y(), b.x() - c.x());
    if (aa != ab) return aa < ab;
    return (a - c).squaredNorm() < (b - c).squaredNorm();
  });

  std::vector<Vec2> hull;
  auto turns_left = [](const Vec2& a, const Vec2& b, const Vec2& p) {
    return cross2(b - a, p - a) > 0.0;
  };
  // One sweep over the angularly ordered ring, popping reflex vertices.
  for (const auto& p : pts) {
    while (hull.size() >= 2 && !turns_left(hull[hull.size() - 2], hull.back(), p))
      hull.pop_back();
    hull.push_back(p);
  }
  // Close the ring: the wrap-around may still hide reflex vertices.
  bool changed = true;
  while (changed && hull.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2& a = hull[(i + hull.size() - 1) % hull.size()];
      const Vec2& b = hull[i];
      const Vec2& p = hull[(i + 1) % hull.size()];
      if (!turns_left(a, b, p)) {
        hull.erase(hull.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return hull;
}

}  // namespace detail

/// Strict-interior test of a point against the convex hull of `vertices`,
/// carried out in 2D after projecting everything onto the plane. A point
/// within `boundary_eps` (mm) of the hull boundary counts as outside, so
/// markers sitting exactly on a hull vertex are never reported as contained.
inline bool point_in_convex_hull(const Vec3& point, std::span<const Vec3> vertices,
                                 const Plane& plane, double boundary_eps = 1e-6) {
  if (vertices.size() < 3) return false;
  auto [u, v] = detail::plane_basis(plane.normal);
  auto project = [&](const Vec3& p) {
    Vec3 d = p - plane.point;
    return Vec2{d.dot(u), d.dot(v)};
  };
  std::vector<Vec2> pts;
  pts.reserve(vertices.size());
  for (const auto& w : vertices) pts.push_back(project(w));
  std::vector<Vec2> hull = detail::convex_hull_2d(std::move(pts));
  if (hull.size() < 3) return false;

  Vec2 q = project(point);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    Vec2 e = b - a;
    // cross / |e| is the signed distance of q from edge ab.
    if (detail::cross2(e, q - a) <= boundary_eps * e.norm()) return false;
  }
  return true;
}

struct RaySegmentResult {
  double distance;      // mm, between the infinite ray-line and the segment line
  Vec3 closest_point;   // p2, on the segment line
  bool within_segment;  // p2 between seg_a (inclusive) and seg_b (exclusive)
  double range;         // |p2 - ray.origin|, mm
};

/// Shortest distance between the ray-line and the segment line, plus the
/// closest point on the segment line. Parallel lines fall back to the
/// point-to-line distance with the closest point pinned at seg_a.
inline RaySegmentResult ray_segment_distance(const Ray& ray, const Vec3& seg_a,
                                             const Vec3& seg_b) {
  Vec3 seg = seg_b - seg_a;
  double seg_len = seg.norm();
  if (seg_len <= 0.0) throw DegenerateGeometryError("ray_segment_distance: zero-length segment");
  Vec3 axis = seg / seg_len;

  Vec3 cross = axis.cross(ray.direction);
  double cross_sq = cross.squaredNorm();

  double s;  // signed parameter of p2 along axis from seg_a
  double d;
  if (cross_sq < 1e-24) {
    s = 0.0;
    Vec3 w = seg_a - ray.origin;
    d = (w - w.dot(ray.direction) * ray.direction).norm();
  } else {
    d = std::abs(cross.dot(seg_a - ray.origin)) / std::sqrt(cross_sq);
    s = ray.direction.cross(cross).dot(ray.origin - seg_a) / cross_sq;
  }
  Vec3 p2 = seg_a + s * axis;
  bool within = s >= 0.0 && s < seg_len;
  return RaySegmentResult{d, p2, within, (p2 - ray.origin).norm()};
}

}  // namespace handfield
