#pragma once

#include <map>
#include <span>
#include <vector>

#include "handfield/common.hpp"

namespace handfield {

struct EmptyResultError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Angle at a joint from four markers: segments a-b and c-d meet at b = c,
/// and the angle is measured between the directions pointing away from the
/// joint, so a straight chain reads 180 degrees.
inline double compute_joint_angle(const Vec3& m_a, const Vec3& m_b, const Vec3& m_c,
                                  const Vec3& m_d) {
  Vec3 u = m_a - m_b;
  Vec3 v = m_d - m_c;
  double nu = u.norm(), nv = v.norm();
  if (nu <= 0.0 || nv <= 0.0)
    throw DegenerateGeometryError("compute_joint_angle: zero-length segment");
  double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

enum class JointId { IndexMCP, IndexPIP, IndexDIP, ThumbMCP, ThumbDIP, Wrist };

inline const char* to_string(JointId j) {
  switch (j) {
    case JointId::IndexMCP: return "index_mcp";
    case JointId::IndexPIP: return "index_pip";
    case JointId::IndexDIP: return "index_dip";
    case JointId::ThumbMCP: return "thumb_mcp";
    case JointId::ThumbDIP: return "thumb_dip";
    case JointId::Wrist: return "wrist";
  }
  return "?";
}

inline const std::array<JointId, 6>& all_joints() {
  static const std::array<JointId, 6> joints = {JointId::IndexMCP, JointId::IndexPIP,
                                                JointId::IndexDIP, JointId::ThumbMCP,
                                                JointId::ThumbDIP, JointId::Wrist};
  return joints;
}

/// Marker quadruple (a, b, c, d) defining one joint angle.
struct JointQuadruple {
  int a, b, c, d;
};

inline std::map<JointId, JointQuadruple> default_joint_quadruples() {
  auto fm = [](Finger f, int j) { return marker_index(f, j); };
  return {
      {JointId::IndexMCP, {fm(Finger::Index, 0), fm(Finger::Index, 1), fm(Finger::Index, 1), fm(Finger::Index, 2)}},
      {JointId::IndexPIP, {fm(Finger::Index, 1), fm(Finger::Index, 2), fm(Finger::Index, 2), fm(Finger::Index, 3)}},
      {JointId::IndexDIP, {fm(Finger::Index, 2), fm(Finger::Index, 3), fm(Finger::Index, 3), fm(Finger::Index, 4)}},
      {JointId::ThumbMCP, {fm(Finger::Thumb, 1), fm(Finger::Thumb, 2), fm(Finger::Thumb, 2), fm(Finger::Thumb, 3)}},
      {JointId::ThumbDIP, {fm(Finger::Thumb, 2), fm(Finger::Thumb, 3), fm(Finger::Thumb, 3), fm(Finger::Thumb, 4)}},
      {JointId::Wrist, {kElbow, kWrist, kWrist, kPalmCenter}},
  };
}

/// Flexion of one joint in a frame: 180 degrees minus the inter-segment
/// angle, so a straight chain reads zero. NaN when any marker is missing.
inline double joint_flexion(const MarkerFrame& frame, const JointQuadruple& q) {
  const Vec3& a = frame.markers[q.a];
  const Vec3& b = frame.markers[q.b];
  const Vec3& c = frame.markers[q.c];
  const Vec3& d = frame.markers[q.d];
  if (is_missing(a) || is_missing(b) || is_missing(c) || is_missing(d)) return kMissing;
  return 180.0 - compute_joint_angle(a, b, c, d);
}

struct JointAngleSeries {
  JointId joint;
  std::vector<double> angle_deg;  // per tick, NaN where not computable
};

inline JointAngleSeries joint_angle_series(std::span<const MarkerFrame> frames, JointId joint,
                                           const JointQuadruple& quad) {
  JointAngleSeries s;
  s.joint = joint;
  s.angle_deg.reserve(frames.size());
  for (const auto& f : frames) s.angle_deg.push_back(joint_flexion(f, quad));
  return s;
}

/// Mean over populated frames of the summed chain segment distances,
/// per finger.
inline std::array<double, kFingerCount> compute_finger_length(std::span<const MarkerFrame> frames) {
  std::array<double, kFingerCount> sum{};
  std::array<int, kFingerCount> count{};
  for (const auto& frame : frames) {
    for (int f = 0; f < kFingerCount; ++f) {
      Finger finger = static_cast<Finger>(f);
      double len = 0.0;
      bool ok = true;
      for (int j = 0; j + 1 < kMarkersPerFinger; ++j) {
        const Vec3& a = frame.markers[marker_index(finger, j)];
        const Vec3& b = frame.markers[marker_index(finger, j + 1)];
        if (is_missing(a) || is_missing(b)) {
          ok = false;
          break;
        }
        len += (b - a).norm();
      }
      if (ok) {
        sum[f] += len;
        ++count[f];
      }
    }
  }
  std::array<double, kFingerCount> out{};
  for (int f = 0; f < kFingerCount; ++f) {
    if (count[f] == 0) throw EmptyResultError("no populated frames for finger length");
    out[f] = sum[f] / count[f];
  }
  return out;
}

/// Range of motion: max minus min over populated ticks.
inline double compute_rom(const JointAngleSeries& series) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int n = 0;
  for (double a : series.angle_deg) {
    if (is_missing(a)) continue;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    ++n;
  }
  if (n < 2) throw EmptyResultError("range of motion needs at least two populated ticks");
  return hi - lo;
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  int count = 0;
};

inline MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  double sum = 0.0;
  for (double v : values) {
    if (is_missing(v)) continue;
    sum += v;
    ++r.count;
  }
  if (r.count == 0) throw EmptyResultError("mean of empty sample");
  r.mean = sum / r.count;
  double ss = 0.0;
  for (double v : values) {
    if (is_missing(v)) continue;
    ss += (v - r.mean) * (v - r.mean);
  }
  r.stddev = std::sqrt(ss / r.count);
  return r;
}

/// Mean and population standard deviation of {-1, 0, 1} visibility values.
inline MeanStd summarize_visibility(std::span<const int> rates) {
  if (rates.empty()) throw EmptyResultError("no visibility values");
  std::vector<double> v(rates.begin(), rates.end());
  return mean_std(v);
}

/// Difference statistics between two aligned series over jointly populated
/// ticks, with the populated fraction reported alongside.
struct AgreementSummary {
  double mean_diff = 0.0;
  double stddev = 0.0;
  int count = 0;
  double populated_fraction = 0.0;
};

inline AgreementSummary agreement(std::span<const double> series_a,
                                  std::span<const double> series_b) {
  std::size_t n = std::min(series_a.size(), series_b.size());
  std::vector<double> diffs;
  diffs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_missing(series_a[i]) || is_missing(series_b[i])) continue;
    diffs.push_back(series_a[i] - series_b[i]);
  }
  if (diffs.empty()) throw EmptyResultError("agreement: no jointly populated ticks");
  MeanStd ms = mean_std(diffs);
  AgreementSummary s;
  s.mean_diff = ms.mean;
  s.stddev = ms.stddev;
  s.count = ms.count;
  s.populated_fraction = n > 0 ? static_cast<double>(diffs.size()) / static_cast<double>(n) : 0.0;
  return s;
}

}  // namespace handfield
