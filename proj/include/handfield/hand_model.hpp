#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "handfield/common.hpp"

namespace handfield {

/// Segment lengths of one finger, mm. The thumb has no intermediate phalange;
/// its marker chain instead splits the metacarpal at `thumb_split_ratio`, so
/// `intermediate` is unused for the thumb (it must still be positive).
struct FingerDimensions {
  double metacarpal_mm;
  double proximal_mm;
  double intermediate_mm;
  double distal_mm;
};

struct HandDimensions {
  std::array<FingerDimensions, kFingerCount> fingers{{
      {45.0, 32.0, 25.0, 28.0},  // thumb
      {68.0, 40.0, 24.0, 20.0},  // index
      {65.0, 45.0, 28.0, 21.0},  // middle
      {60.0, 42.0, 27.0, 21.0},  // ring
      {55.0, 33.0, 20.0, 18.0},  // little
  }};
  double palm_width_mm = 85.0;
  double forearm_length_mm = 250.0;
  double thumb_split_ratio = 0.5;

  void validate() const {
    for (int f = 0; f < kFingerCount; ++f) {
      const auto& d = fingers[f];
      if (d.metacarpal_mm <= 0 || d.proximal_mm <= 0 || d.intermediate_mm <= 0 ||
          d.distal_mm <= 0)
        throw std::domain_error(std::string("non-positive segment length for ") +
                                finger_name(static_cast<Finger>(f)));
    }
    if (palm_width_mm <= 0) throw std::domain_error("non-positive palm width");
    if (forearm_length_mm <= 0) throw std::domain_error("non-positive forearm length");
    if (thumb_split_ratio <= 0 || thumb_split_ratio >= 1)
      throw std::domain_error("thumb split ratio must be in (0, 1)");
  }

  /// Consecutive marker-chain segment lengths for one finger (4 segments).
  std::array<double, 4> chain_lengths(Finger finger) const {
    const auto& d = fingers[static_cast<int>(finger)];
    if (finger == Finger::Thumb)
      return {d.metacarpal_mm * thumb_split_ratio, d.metacarpal_mm * (1.0 - thumb_split_ratio),
              d.proximal_mm, d.distal_mm};
    return {d.metacarpal_mm, d.proximal_mm, d.intermediate_mm, d.distal_mm};
  }
};

enum class PalmOrientation { Horizontal, Vertical };

inline const char* to_string(PalmOrientation o) {
  return o == PalmOrientation::Horizontal ? "horizontal" : "vertical";
}

/// Joint-angle parameterization of the hand. Angles in degrees, flexion
/// positive toward the palmar side.
struct HandPose {
  Vec3 position{0.0, 250.0, 150.0};  // palm centre, world mm
  PalmOrientation orientation = PalmOrientation::Horizontal;
  double roll_deg = 0.0;   // perturbation about the forearm axis (z)
  double pitch_deg = 0.0;  // perturbation about the lateral axis (x)
  double yaw_deg = 0.0;    // perturbation about the vertical axis (y)
  double wrist_flexion_deg = 0.0;
  // [finger][MCP, PIP, DIP]; thumb uses MCP and DIP, its PIP slot is locked
  // to zero by the default limits.
  std::array<std::array<double, 3>, kFingerCount> flexion_deg{};
};

struct AngleRange {
  double min_deg;
  double max_deg;
  double clamp(double v) const { return std::min(std::max(v, min_deg), max_deg); }
  bool contains(double v) const { return v >= min_deg && v <= max_deg; }
};

struct JointLimits {
  AngleRange mcp{0.0, 90.0};
  AngleRange pip{0.0, 90.0};
  AngleRange dip{0.0, 90.0};
  AngleRange thumb_pip{0.0, 0.0};
  AngleRange wrist{-60.0, 60.0};
  AngleRange perturbation{-30.0, 30.0};

  const AngleRange& finger_joint(Finger f, int joint) const {
    if (joint == 0) return mcp;
    if (joint == 1) return f == Finger::Thumb ? thumb_pip : pip;
    return dip;
  }
};

namespace detail {

inline const char* joint_name(int joint) {
  return joint == 0 ? "MCP" : (joint == 1 ? "PIP" : "DIP");
}

// Fan angles of the metacarpal directions in the palm plane, degrees about
// the palm normal from straight ahead (-z), and base offsets across the palm
// as a fraction of palm width. Right hand, thumb toward +x.
inline constexpr std::array<double, kFingerCount> kFanDeg = {40.0, 10.0, 0.0, -8.0, -16.0};
inline constexpr std::array<double, kFingerCount> kBaseFrac = {0.18, 0.09, 0.0, -0.09, -0.18};
inline constexpr double kWristLocalZ = 55.0;
inline constexpr double kBaseLocalZ = 45.0;

inline Mat3 rotation_about_axis(const Vec3& axis, double deg) {
  return Eigen::AngleAxisd(deg_to_rad(deg), axis).toRotationMatrix();
}

}  // namespace detail

inline void validate_pose(const HandPose& pose, const JointLimits& limits = {}) {
  for (int f = 0; f < kFingerCount; ++f) {
    for (int j = 0; j < 3; ++j) {
      const AngleRange& r = limits.finger_joint(static_cast<Finger>(f), j);
      double v = pose.flexion_deg[f][j];
      if (!r.contains(v))
        throw std::domain_error(std::string(finger_name(static_cast<Finger>(f))) + " " +
                                detail::joint_name(j) + " flexion " + std::to_string(v) +
                                " deg outside [" + std::to_string(r.min_deg) + ", " +
                                std::to_string(r.max_deg) + "]");
    }
  }
  if (!limits.wrist.contains(pose.wrist_flexion_deg))
    throw std::domain_error("wrist flexion " + std::to_string(pose.wrist_flexion_deg) +
                            " deg outside [" + std::to_string(limits.wrist.min_deg) + ", " +
                            std::to_string(limits.wrist.max_deg) + "]");
  for (double v : {pose.roll_deg, pose.pitch_deg, pose.yaw_deg})
    if (!limits.perturbation.contains(v))
      throw std::domain_error("orientation perturbation " + std::to_string(v) +
                              " deg outside limits");
}

/// Rigid forward kinematics of the 28-marker hand.
///
/// Local frame before posing: palm centre at the origin, fingers toward -z,
/// palm plane y = 0 with the palmar side facing -y, thumb toward +x, wrist
/// and elbow on the +z axis. The world frame keeps the table at y = 0 with
/// the subject toward +z.
inline MarkerFrame forward_kinematics(const HandDimensions& dims, const HandPose& pose,
                                      const JointLimits& limits = {},
                                      std::int64_t timestamp_us = 0) {
  dims.validate();
  validate_pose(pose, limits);

  MarkerFrame out;
  out.timestamp_us = timestamp_us;
  auto& m = out.markers;

  const Vec3 wrist{0.0, 0.0, detail::kWristLocalZ};
  m[kWrist] = wrist;
  m[kPalmCenter] = Vec3::Zero();
  m[kElbow] = wrist + Vec3{0.0, 0.0, dims.forearm_length_mm};

  const Vec3 palmar{0.0, -1.0, 0.0};
  for (int f = 0; f < kFingerCount; ++f) {
    Finger finger = static_cast<Finger>(f);
    double fan = deg_to_rad(detail::kFanDeg[f]);
    Vec3 dir{std::sin(fan), 0.0, -std::cos(fan)};
    Vec3 flex_axis = dir.cross(palmar).normalized();
    Vec3 p{dims.palm_width_mm * detail::kBaseFrac[f], 0.0, detail::kBaseLocalZ};
    m[marker_index(finger, 0)] = p;

    auto chain = dims.chain_lengths(finger);
    // Joint pivots along the chain. The thumb's split point is rigid; its
    // flexing joints sit one marker further out.
    const bool thumb = finger == Finger::Thumb;
    for (int seg = 0; seg < 4; ++seg) {
      // Flexion applied before this segment: fingers flex at markers 1..3
      // (MCP/PIP/DIP), the thumb at markers 2..3 (MCP/IP) with a rigid split.
      int pose_joint = thumb ? seg - 1 : seg;
      if (pose_joint >= 1) {
        int slot = thumb ? (pose_joint == 1 ? 0 : 2) : pose_joint - 1;
        double angle = pose.flexion_deg[f][slot];
        if (angle != 0.0) dir = detail::rotation_about_axis(flex_axis, angle) * dir;
      }
      p += chain[seg] * dir;
      m[marker_index(finger, seg + 1)] = p;
    }
  }

  // Wrist flexion pivots the hand (everything but the elbow) about the wrist.
  if (pose.wrist_flexion_deg != 0.0) {
    Mat3 rw = detail::rotation_about_axis(Vec3{-1.0, 0.0, 0.0}, pose.wrist_flexion_deg);
    for (int i = 1; i < kMarkerCount; ++i) m[i] = wrist + rw * (m[i] - wrist);
  }

  Mat3 orient = pose.orientation == PalmOrientation::Vertical ? rot_z(-90.0) : Mat3::Identity();
  Mat3 perturb = rot_y(pose.yaw_deg) * rot_x(pose.pitch_deg) * rot_z(pose.roll_deg);
  Mat3 r = perturb * orient;
  for (auto& p : m) p = r * p + pose.position;
  return out;
}

struct FrameProvenance {
  std::string trajectory;
  std::uint64_t seed = 0;
  int base_frame = -1;
};

/// Ordered marker frames plus the poses and provenance that produced them.
struct PoseDataset {
  std::string name;
  std::vector<MarkerFrame> frames;
  std::vector<HandPose> poses;            // parallel to frames when generated
  std::vector<FrameProvenance> provenance;  // parallel to frames

  std::size_t size() const { return frames.size(); }
};

struct SweepSpec {
  double start_deg = 0.0;
  double end_deg = 90.0;
  double step_deg = 10.0;

  std::vector<double> values() const {
    if (step_deg <= 0.0 || (end_deg - start_deg) * step_deg < 0.0)
      throw std::domain_error("empty sweep");
    std::vector<double> v;
    double sign = end_deg >= start_deg ? 1.0 : -1.0;
    for (double a = start_deg; sign * (a - end_deg) <= 1e-9; a += sign * step_deg)
      v.push_back(a);
    if (v.empty()) throw std::domain_error("empty sweep");
    return v;
  }
};

/// Reference-trajectory generation config: one static hold and four motions,
/// each produced in both palm orientations (ten trajectories total).
struct TrajectoryConfig {
  std::int64_t frame_dt_us = 10'000;
  int static_frames = 5;
  Vec3 hand_position{0.0, 250.0, 150.0};
  SweepSpec index_sweep{0.0, 90.0, 10.0};
  SweepSpec thumb_sweep{0.0, 60.0, 10.0};
  SweepSpec wrist_sweep{-60.0, 60.0, 10.0};
  int pinch_steps = 10;
  // Couplings applied during index flexion so PIP/DIP follow the MCP sweep.
  double index_pip_ratio = 0.75;
  double index_dip_ratio = 0.5;
  double thumb_dip_ratio = 0.6;
  JointLimits limits{};
};

namespace detail {

inline HandPose base_pose(const TrajectoryConfig& cfg, PalmOrientation orientation) {
  HandPose pose;
  pose.position = cfg.hand_position;
  pose.orientation = orientation;
  return pose;
}

inline void append_frame(PoseDataset& ds, const HandDimensions& dims, const HandPose& pose,
                         const TrajectoryConfig& cfg) {
  std::int64_t ts = static_cast<std::int64_t>(ds.frames.size()) * cfg.frame_dt_us;
  ds.frames.push_back(forward_kinematics(dims, pose, cfg.limits, ts));
  ds.poses.push_back(pose);
  ds.provenance.push_back({ds.name, 0, static_cast<int>(ds.frames.size()) - 1});
}

}  // namespace detail

/// The ten reference trajectories: {static, index, thumb, wrist, pinch}
/// crossed with {horizontal, vertical}.
inline std::vector<PoseDataset> generate_reference_trajectories(const HandDimensions& dims,
                                                                const TrajectoryConfig& cfg) {
  if (cfg.static_frames < 1) throw std::domain_error("static_frames must be >= 1");
  if (cfg.pinch_steps < 1) throw std::domain_error("pinch_steps must be >= 1");

  std::vector<PoseDataset> out;
  for (PalmOrientation orientation : {PalmOrientation::Horizontal, PalmOrientation::Vertical}) {
    const std::string suffix = std::string("_") + to_string(orientation);

    PoseDataset st;
    st.name = "static" + suffix;
    for (int i = 0; i < cfg.static_frames; ++i)
      detail::append_frame(st, dims, detail::base_pose(cfg, orientation), cfg);
    out.push_back(std::move(st));

    PoseDataset index;
    index.name = "index_flexion" + suffix;
    for (double a : cfg.index_sweep.values()) {
      HandPose pose = detail::base_pose(cfg, orientation);
      pose.flexion_deg[static_cast<int>(Finger::Index)] = {a, a * cfg.index_pip_ratio,
                                                           a * cfg.index_dip_ratio};
      detail::append_frame(index, dims, pose, cfg);
    }
    out.push_back(std::move(index));

    PoseDataset thumb;
    thumb.name = "thumb_flexion" + suffix;
    for (double a : cfg.thumb_sweep.values()) {
      HandPose pose = detail::base_pose(cfg, orientation);
      pose.flexion_deg[static_cast<int>(Finger::Thumb)] = {a, 0.0, a * cfg.thumb_dip_ratio};
      detail::append_frame(thumb, dims, pose, cfg);
    }
    out.push_back(std::move(thumb));

    PoseDataset wrist;
    wrist.name = "wrist_flexion" + suffix;
    for (double a : cfg.wrist_sweep.values()) {
      HandPose pose = detail::base_pose(cfg, orientation);
      pose.wrist_flexion_deg = a;
      detail::append_frame(wrist, dims, pose, cfg);
    }
    out.push_back(std::move(wrist));

    PoseDataset pinch;
    pinch.name = "pinch" + suffix;
    for (int k = 0; k <= cfg.pinch_steps; ++k) {
      double u = static_cast<double>(k) / cfg.pinch_steps;
      HandPose pose = detail::base_pose(cfg, orientation);
      double idx = cfg.index_sweep.start_deg + u * (cfg.index_sweep.end_deg - cfg.index_sweep.start_deg);
      double thb = cfg.thumb_sweep.start_deg + u * (cfg.thumb_sweep.end_deg - cfg.thumb_sweep.start_deg);
      pose.flexion_deg[static_cast<int>(Finger::Index)] = {idx, idx * cfg.index_pip_ratio,
                                                           idx * cfg.index_dip_ratio};
      pose.flexion_deg[static_cast<int>(Finger::Thumb)] = {thb, 0.0, thb * cfg.thumb_dip_ratio};
      detail::append_frame(pinch, dims, pose, cfg);
    }
    out.push_back(std::move(pinch));
  }
  return out;
}

struct PerturbationConfig {
  double position_jitter_mm = 30.0;
  double angle_jitter_deg = 5.0;
};

/// Monte Carlo expansion: each base pose is re-sampled `samples_per_frame`
/// times with uniform jitter on position and on every joint/perturbation
/// angle. Jittered angles are clamped back into the configured limits so the
/// expanded poses stay valid. Deterministic for a fixed seed.
inline PoseDataset monte_carlo_expand(const std::vector<PoseDataset>& trajectories,
                                      int samples_per_frame, const PerturbationConfig& jitter,
                                      std::uint64_t seed, const HandDimensions& dims,
                                      const TrajectoryConfig& cfg) {
  if (samples_per_frame < 1) throw std::domain_error("samples_per_frame must be >= 1");
  if (jitter.position_jitter_mm < 0 || jitter.angle_jitter_deg < 0)
    throw std::domain_error("negative jitter bound");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> upos(-jitter.position_jitter_mm,
                                              jitter.position_jitter_mm);
  std::uniform_real_distribution<double> uang(-jitter.angle_jitter_deg, jitter.angle_jitter_deg);
  auto jitter_pos = [&]() { return jitter.position_jitter_mm > 0 ? upos(rng) : 0.0; };
  auto jitter_ang = [&]() { return jitter.angle_jitter_deg > 0 ? uang(rng) : 0.0; };

  PoseDataset out;
  out.name = "monte_carlo";
  const JointLimits& lim = cfg.limits;
  for (const auto& traj : trajectories) {
    if (traj.poses.size() != traj.frames.size())
      throw ContractViolation("monte_carlo_expand needs pose-backed trajectories");
    for (std::size_t i = 0; i < traj.poses.size(); ++i) {
      for (int s = 0; s < samples_per_frame; ++s) {
        HandPose pose = traj.poses[i];
        pose.position += Vec3{jitter_pos(), jitter_pos(), jitter_pos()};
        pose.wrist_flexion_deg = lim.wrist.clamp(pose.wrist_flexion_deg + jitter_ang());
        pose.roll_deg = lim.perturbation.clamp(pose.roll_deg + jitter_ang());
        pose.pitch_deg = lim.perturbation.clamp(pose.pitch_deg + jitter_ang());
        pose.yaw_deg = lim.perturbation.clamp(pose.yaw_deg + jitter_ang());
        for (int f = 0; f < kFingerCount; ++f)
          for (int j = 0; j < 3; ++j)
            pose.flexion_deg[f][j] = lim.finger_joint(static_cast<Finger>(f), j)
                                         .clamp(pose.flexion_deg[f][j] + jitter_ang());
        std::int64_t ts = static_cast<std::int64_t>(out.frames.size()) * cfg.frame_dt_us;
        out.frames.push_back(forward_kinematics(dims, pose, lim, ts));
        out.poses.push_back(pose);
        out.provenance.push_back({traj.name, seed, static_cast<int>(i)});
      }
    }
  }
  if (out.frames.empty()) throw std::domain_error("monte_carlo_expand: no input frames");
  return out;
}

}  // namespace handfield
