#pragma once

#include <span>
#include <vector>

#include "handfield/geometry.hpp"
#include "handfield/hand_model.hpp"

namespace handfield {

/// Pose of one sensor on the table plane (y = 0). phi rotates about the
/// sensor long axis (x), theta about the vertical axis (y); the world
/// rotation is R = Ry(theta) * Rx(phi). In the sensor frame the viewing
/// axis is +y and the user sits toward +z, so the forward direction used by
/// the forearm test is -z.
struct SensorPlacement {
  int id = 0;
  double x_mm = 0.0;
  double z_mm = 0.0;
  double phi_deg = 0.0;
  double theta_deg = 0.0;

  Mat3 rotation() const { return rot_y(theta_deg) * rot_x(phi_deg); }
  Vec3 position() const { return {x_mm, 0.0, z_mm}; }
  Vec3 view_axis() const { return rotation() * Vec3::UnitY(); }
  Vec3 forward_axis() const { return rotation() * Vec3{0.0, 0.0, -1.0}; }
  Vec3 to_sensor(const Vec3& world) const {
    return rotation().transpose() * (world - position());
  }
  Vec3 to_world(const Vec3& local) const { return rotation() * local + position(); }
};

/// Inverted four-plane pyramid: inward unit normals in the sensor frame plus
/// the maximum camera distance L.
struct FieldOfView {
  std::array<Vec3, 4> normals;
  double range_mm = 0.0;
  double horizontal_deg = 0.0;
  double vertical_deg = 0.0;
};

/// Builds the FoV pyramid. A full opening angle `a` puts the boundary rays
/// at a/2 from the sensor up-axis, so each inward normal lies 90 - a/2
/// degrees from that axis.
inline FieldOfView make_fov(double horizontal_deg, double vertical_deg, double range_mm) {
  if (horizontal_deg <= 0.0 || horizontal_deg >= 180.0 || vertical_deg <= 0.0 ||
      vertical_deg >= 180.0)
    throw std::domain_error("FoV angles must lie in (0, 180) degrees");
  if (range_mm <= 0.0) throw std::domain_error("FoV range must be positive");
  double hh = deg_to_rad(horizontal_deg / 2.0);
  double hv = deg_to_rad(vertical_deg / 2.0);
  FieldOfView fov;
  fov.normals[0] = {-std::cos(hh), std::sin(hh), 0.0};  // limits +x
  fov.normals[1] = {std::cos(hh), std::sin(hh), 0.0};   // limits -x
  fov.normals[2] = {0.0, std::sin(hv), -std::cos(hv)};  // limits +z
  fov.normals[3] = {0.0, std::sin(hv), std::cos(hv)};   // limits -z
  fov.range_mm = range_mm;
  fov.horizontal_deg = horizontal_deg;
  fov.vertical_deg = vertical_deg;
  return fov;
}

enum class FovScope { AllMarkers, FingersOnly };

enum class VisibilityCause {
  None,
  ForearmFacing,
  OutOfFov,
  PalmOccluded,
  FingerOccluded,
  HandUndetected,
};

inline const char* to_string(VisibilityCause c) {
  switch (c) {
    case VisibilityCause::None: return "none";
    case VisibilityCause::ForearmFacing: return "forearm-facing";
    case VisibilityCause::OutOfFov: return "out-of-fov";
    case VisibilityCause::PalmOccluded: return "palm-occluded";
    case VisibilityCause::FingerOccluded: return "finger-occluded";
    case VisibilityCause::HandUndetected: return "hand-undetected";
  }
  return "?";
}

struct VisibilityOptions {
  FovScope fov_scope = FovScope::AllMarkers;
  // First finger marker tested for occlusion (0 = include the metacarpal
  // base and MCP markers, which sit on the palm plane).
  int first_occlusion_marker = 0;
  double cylinder_radius_mm = 5.0;  // 1 cm diameter phalange cylinders
};

namespace detail {

// Interval guard for the between-sensor-and-marker test; sub-micron so
// markers lying exactly on the palm plane never read as self-occluded.
inline constexpr double kRayEps = 1e-6;

inline bool point_in_projected_hull(const Vec2& q, std::span<const Vec2> hull,
                                    double boundary_eps = 1e-6) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    Vec2 e = b - a;
    if (cross2(e, q - a) <= boundary_eps * e.norm()) return false;
  }
  return true;
}

}  // namespace detail

/// Palm markers for the regression plane: wrist plus the five MCPs.
inline std::array<Vec3, 6> palm_marker_set(const MarkerFrame& frame) {
  std::array<Vec3, 6> pts;
  pts[0] = frame.markers[kWrist];
  for (int f = 0; f < kFingerCount; ++f)
    pts[1 + f] = frame.markers[marker_index(static_cast<Finger>(f), 1)];
  return pts;
}

/// Per-frame cache of everything the occlusion tests reuse across sensors:
/// the palm regression plane and the projected palm hull.
struct FrameContext {
  const MarkerFrame* frame = nullptr;
  bool populated = false;
  Plane palm_plane{};
  Vec3 basis_u{}, basis_v{};
  std::vector<Vec2> palm_hull;  // CCW in (basis_u, basis_v) about plane.point

  FrameContext() = default;
  explicit FrameContext(const MarkerFrame& f) : frame(&f), populated(f.fully_populated()) {
    if (!populated) return;
    auto palm = palm_marker_set(f);
    palm_plane = regression_plane(palm);
    auto [u, v] = detail::plane_basis(palm_plane.normal);
    basis_u = u;
    basis_v = v;
    std::vector<Vec2> pts;
    pts.reserve(palm.size());
    for (const auto& p : palm) pts.push_back(project(p));
    palm_hull = detail::convex_hull_2d(std::move(pts));
  }

  Vec2 project(const Vec3& p) const {
    Vec3 d = p - palm_plane.point;
    return {d.dot(basis_u), d.dot(basis_v)};
  }
};

/// Condition 1: the elbow-to-wrist vector must make a strictly acute angle
/// with the sensor forward direction.
inline bool forearm_facing_test(const MarkerFrame& frame, const SensorPlacement& sensor) {
  const Vec3& elbow = frame.markers[kElbow];
  const Vec3& wrist = frame.markers[kWrist];
  if (is_missing(elbow) || is_missing(wrist))
    throw HandUndetectedError("forearm markers missing");
  return (wrist - elbow).dot(sensor.forward_axis()) > 0.0;
}

/// Condition 2: every tested marker inside the pyramid and within range.
inline bool fov_containment_test(const MarkerFrame& frame, const SensorPlacement& sensor,
                                 const FieldOfView& fov,
                                 FovScope scope = FovScope::AllMarkers) {
  Vec3 origin = sensor.position();
  Mat3 r = sensor.rotation();
  std::array<Vec3, 4> n;
  for (int k = 0; k < 4; ++k) n[k] = r * fov.normals[k];
  double range_sq = fov.range_mm * fov.range_mm;
  int first = scope == FovScope::FingersOnly ? kFingerBase : 0;
  for (int i = first; i < kMarkerCount; ++i) {
    Vec3 d = frame.markers[i] - origin;
    if (is_missing(d)) return false;
    if (d.squaredNorm() > range_sq) return false;
    for (int k = 0; k < 4; ++k)
      if (d.dot(n[k]) <= 0.0) return false;
  }
  return true;
}

/// Condition 3: does the sensor-to-marker ray pierce the palm strictly
/// between sensor and marker, inside the palm hull?
inline bool palm_occlusion_test(const Vec3& marker, const FrameContext& ctx,
                                const Vec3& sensor_origin) {
  if (!ctx.populated) return false;
  Ray ray = Ray::through(sensor_origin, marker);
  auto hit = ray_plane_intersection(ray, ctx.palm_plane);
  if (!hit) return false;
  double t_marker = (marker - sensor_origin).norm();
  if (hit->t <= detail::kRayEps || hit->t >= t_marker - detail::kRayEps) return false;
  return detail::point_in_projected_hull(ctx.project(hit->point), ctx.palm_hull);
}

inline bool palm_occlusion_test(const Vec3& marker, const MarkerFrame& frame,
                                const SensorPlacement& sensor) {
  FrameContext ctx(frame);
  return palm_occlusion_test(marker, ctx, sensor.position());
}

/// Condition 4: does the ray graze a phalange cylinder of another finger in
/// front of the marker? Each finger contributes three segments (MCP-PIP,
/// PIP-DIP, DIP-tip).
inline bool finger_occlusion_test(const Vec3& marker, const MarkerFrame& frame,
                                  Finger owner, const Vec3& sensor_origin,
                                  double cylinder_radius_mm = 5.0) {
  Ray ray = Ray::through(sensor_origin, marker);
  double t_marker = (marker - sensor_origin).norm();
  for (int g = 0; g < kFingerCount; ++g) {
    if (g == static_cast<int>(owner)) continue;
    Finger other = static_cast<Finger>(g);
    for (int j = 1; j < 4; ++j) {
      const Vec3& a = frame.markers[marker_index(other, j)];
      const Vec3& b = frame.markers[marker_index(other, j + 1)];
      RaySegmentResult r = ray_segment_distance(ray, a, b);
      if (r.distance < cylinder_radius_mm && r.within_segment && r.range < t_marker)
        return true;
    }
  }
  return false;
}

inline bool finger_occlusion_test(const Vec3& marker, const MarkerFrame& frame, Finger owner,
                                  const SensorPlacement& sensor) {
  return finger_occlusion_test(marker, frame, owner, sensor.position());
}

struct FingerVisibilityResult {
  std::array<bool, kFingerCount> visible{};
  std::array<VisibilityCause, kFingerCount> cause{};

  bool all_visible() const {
    for (bool v : visible)
      if (!v) return false;
    return true;
  }
  int count_visible() const {
    int n = 0;
    for (bool v : visible) n += v ? 1 : 0;
    return n;
  }
};

namespace detail {

inline FingerVisibilityResult all_invisible(VisibilityCause cause) {
  FingerVisibilityResult r;
  r.visible.fill(false);
  r.cause.fill(cause);
  return r;
}

}  // namespace detail

/// Per-finger visibility for one sensor: conditions 1 and 2 gate the whole
/// frame, then one occluded marker marks its finger invisible.
inline FingerVisibilityResult finger_visibility(const FrameContext& ctx,
                                                const SensorPlacement& sensor,
                                                const FieldOfView& fov,
                                                const VisibilityOptions& opts = {}) {
  if (!ctx.populated) return detail::all_invisible(VisibilityCause::HandUndetected);
  const MarkerFrame& frame = *ctx.frame;
  if (!forearm_facing_test(frame, sensor))
    return detail::all_invisible(VisibilityCause::ForearmFacing);
  if (!fov_containment_test(frame, sensor, fov, opts.fov_scope))
    return detail::all_invisible(VisibilityCause::OutOfFov);

  FingerVisibilityResult result;
  result.visible.fill(true);
  result.cause.fill(VisibilityCause::None);
  Vec3 origin = sensor.position();
  for (int f = 0; f < kFingerCount; ++f) {
    Finger finger = static_cast<Finger>(f);
    for (int j = opts.first_occlusion_marker; j < kMarkersPerFinger; ++j) {
      const Vec3& marker = frame.markers[marker_index(finger, j)];
      if (palm_occlusion_test(marker, ctx, origin)) {
        result.visible[f] = false;
        result.cause[f] = VisibilityCause::PalmOccluded;
        break;
      }
      if (finger_occlusion_test(marker, frame, finger, origin, opts.cylinder_radius_mm)) {
        result.visible[f] = false;
        result.cause[f] = VisibilityCause::FingerOccluded;
        break;
      }
    }
  }
  return result;
}

inline FingerVisibilityResult finger_visibility(const MarkerFrame& frame,
                                                const SensorPlacement& sensor,
                                                const FieldOfView& fov,
                                                const VisibilityOptions& opts = {}) {
  FrameContext ctx(frame);
  return finger_visibility(ctx, sensor, fov, opts);
}

/// Frame score F: minimum over the five fingers of how many sensors see that
/// finger.
inline int frame_score(const FrameContext& ctx, std::span<const SensorPlacement> sensors,
                       const FieldOfView& fov, const VisibilityOptions& opts = {}) {
  if (sensors.empty()) throw std::domain_error("frame_score needs at least one sensor");
  std::array<int, kFingerCount> seen{};
  for (const auto& sensor : sensors) {
    FingerVisibilityResult r = finger_visibility(ctx, sensor, fov, opts);
    for (int f = 0; f < kFingerCount; ++f) seen[f] += r.visible[f] ? 1 : 0;
  }
  int score = static_cast<int>(sensors.size());
  for (int f = 0; f < kFingerCount; ++f) score = std::min(score, seen[f]);
  return score;
}

inline int frame_score(const MarkerFrame& frame, std::span<const SensorPlacement> sensors,
                       const FieldOfView& fov, const VisibilityOptions& opts = {}) {
  FrameContext ctx(frame);
  return frame_score(ctx, sensors, fov, opts);
}

/// Visibility rate of a measured frame: -1 hand undetected, 0 populated from
/// the internal model, 1 truly detected by line of sight.
inline int visibility_rate(const MarkerFrame& measured, bool truly_visible) {
  if (measured.fully_missing()) return -1;
  return truly_visible ? 1 : 0;
}

struct VisibilityRecord {
  int frame_idx;
  int sensor_id;
  Finger finger;
  bool visible;
  VisibilityCause cause;
  int frame_score;
};

struct VisibilityReport {
  std::vector<VisibilityRecord> records;
  std::vector<int> frame_scores;
};

inline VisibilityReport build_visibility_report(const PoseDataset& dataset,
                                                std::span<const SensorPlacement> sensors,
                                                const FieldOfView& fov,
                                                const VisibilityOptions& opts = {}) {
  VisibilityReport report;
  report.frame_scores.reserve(dataset.frames.size());
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    FrameContext ctx(dataset.frames[i]);
    std::array<int, kFingerCount> seen{};
    std::vector<VisibilityRecord> rows;
    for (const auto& sensor : sensors) {
      FingerVisibilityResult r = finger_visibility(ctx, sensor, fov, opts);
      for (int f = 0; f < kFingerCount; ++f) {
        seen[f] += r.visible[f] ? 1 : 0;
        rows.push_back({static_cast<int>(i), sensor.id, static_cast<Finger>(f), r.visible[f],
                        r.cause[f], 0});
      }
    }
    int score = static_cast<int>(sensors.size());
    for (int f = 0; f < kFingerCount; ++f) score = std::min(score, seen[f]);
    for (auto& row : rows) row.frame_score = score;
    report.records.insert(report.records.end(), rows.begin(), rows.end());
    report.frame_scores.push_back(score);
  }
  return report;
}

}  // namespace handfield
