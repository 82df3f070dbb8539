#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace handfield {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kMarkerCount = 28;
inline constexpr int kFingerCount = 5;
inline constexpr int kMarkersPerFinger = 5;

// Marker layout: 0 elbow, 1 wrist, 2 palm centre, then five fingers with
// five markers each (metacarpal base, MCP, PIP, DIP, tip). The thumb reuses
// the same chain with its metacarpal split in two so every finger has five
// markers.
enum MarkerIndex : int {
  kElbow = 0,
  kWrist = 1,
  kPalmCenter = 2,
  kFingerBase = 3,
};

enum class Finger : int { Thumb = 0, Index = 1, Middle = 2, Ring = 3, Little = 4 };

inline int marker_index(Finger finger, int joint) {
  return kFingerBase + static_cast<int>(finger) * kMarkersPerFinger + joint;
}

inline const char* finger_name(Finger f) {
  switch (f) {
    case Finger::Thumb: return "thumb";
    case Finger::Index: return "index";
    case Finger::Middle: return "middle";
    case Finger::Ring: return "ring";
    case Finger::Little: return "little";
  }
  return "?";
}

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }
inline bool is_missing(const Vec3& v) {
  return std::isnan(v.x()) || std::isnan(v.y()) || std::isnan(v.z());
}

inline double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

inline Mat3 rot_x(double deg) {
  return Eigen::AngleAxisd(deg_to_rad(deg), Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rot_y(double deg) {
  return Eigen::AngleAxisd(deg_to_rad(deg), Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rot_z(double deg) {
  return Eigen::AngleAxisd(deg_to_rad(deg), Vec3::UnitZ()).toRotationMatrix();
}

/// One timestamped sample of the 28-point marker set. Coordinates are mm;
/// a missing coordinate is NaN. Generated frames are either fully populated
/// or fully missing; measured frames may lose individual coordinates.
struct MarkerFrame {
  std::int64_t timestamp_us = 0;
  std::array<Vec3, kMarkerCount> markers{};

  static MarkerFrame all_missing(std::int64_t timestamp_us = 0) {
    MarkerFrame f;
    f.timestamp_us = timestamp_us;
    f.markers.fill(Vec3::Constant(kMissing));
    return f;
  }

  bool fully_missing() const {
    for (const auto& m : markers)
      if (!is_missing(m)) return false;
    return true;
  }

  bool fully_populated() const {
    for (const auto& m : markers)
      if (is_missing(m)) return false;
    return true;
  }
};

struct DegenerateGeometryError : std::domain_error {
  using std::domain_error::domain_error;
};

struct HandUndetectedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace handfield
