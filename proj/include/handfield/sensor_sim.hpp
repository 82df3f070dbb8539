#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "handfield/visibility.hpp"

namespace handfield {

/// Virtual-sensor behaviour: datasheet FoV, per-axis truncation beyond the
/// axis-cut threshold, internal-model fallback for occluded fingers, direct
/// measurement noise, variable sampling, and the elbow bias of one sensor.
struct SensorModelConfig {
  double fov_horizontal_deg = 120.0;
  double fov_vertical_deg = 150.0;
  double fov_range_mm = 600.0;
  double axis_cut_mm = 250.0;
  double internal_model_sigma_mm = 8.0;
  double internal_model_bias_mm = 5.0;  // toward the palm centre
  double direct_sigma_mm = 1.5;
  double rate_min_hz = 11.0;
  double rate_max_hz = 34.0;
  double elbow_bias_mm = 15.0;       // sensor-local y offset of the elbow marker
  int elbow_bias_sensor_id = 1;
  std::uint64_t seed = 7;
  VisibilityOptions visibility{};

  FieldOfView fov() const { return make_fov(fov_horizontal_deg, fov_vertical_deg, fov_range_mm); }

  void validate() const {
    if (internal_model_sigma_mm < 0 || direct_sigma_mm < 0)
      throw std::domain_error("noise sigma must be non-negative");
    if (rate_min_hz <= 0 || rate_max_hz < rate_min_hz || rate_max_hz > 120.0)
      throw std::domain_error("sampling rate range must lie within (0, 120] Hz");
    if (axis_cut_mm <= 0) throw std::domain_error("axis-cut threshold must be positive");
  }
};

/// Per-sample ground-truth annotation, kept alongside the measured frame.
struct FrameAnnotation {
  std::int64_t timestamp_us = 0;
  int vis_rate = -1;  // -1 undetected, 0 any finger from internal model, 1 all truly seen
  std::array<bool, kFingerCount> finger_visible{};
  std::array<int, kFingerCount> finger_rate{};  // per-finger {-1, 0, 1}
};

/// One sensor's measured output: sensor-local frames on its own variable
/// clock plus the ground-truth visibility annotations.
struct MeasuredStream {
  int sensor_id = 0;
  std::vector<MarkerFrame> frames;
  std::vector<FrameAnnotation> annotations;
};

/// Sample instants with instantaneous rate drawn uniformly from the range.
/// Emits t = 0 first and stops strictly before `duration_us`.
inline std::vector<std::int64_t> variable_clock(double rate_min_hz, double rate_max_hz,
                                                std::int64_t duration_us, std::uint64_t seed) {
  if (rate_min_hz <= 0 || rate_max_hz < rate_min_hz)
    throw std::domain_error("invalid sampling rate range");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rate(rate_min_hz, rate_max_hz);
  std::vector<std::int64_t> ticks;
  double t = 0.0;
  while (static_cast<std::int64_t>(t) < duration_us) {
    ticks.push_back(static_cast<std::int64_t>(t));
    double hz = rate_min_hz == rate_max_hz ? rate_min_hz : rate(rng);
    t += 1e6 / hz;
  }
  return ticks;
}

namespace detail {

/// Linear interpolation of ground truth between dataset frames.
inline MarkerFrame interpolate_truth(const PoseDataset& dataset, std::int64_t t_us) {
  const auto& frames = dataset.frames;
  if (t_us <= frames.front().timestamp_us) return frames.front();
  if (t_us >= frames.back().timestamp_us) return frames.back();
  std::size_t hi = 1;
  while (frames[hi].timestamp_us < t_us) ++hi;
  const MarkerFrame& a = frames[hi - 1];
  const MarkerFrame& b = frames[hi];
  double u = static_cast<double>(t_us - a.timestamp_us) /
             static_cast<double>(b.timestamp_us - a.timestamp_us);
  MarkerFrame out;
  out.timestamp_us = t_us;
  for (int i = 0; i < kMarkerCount; ++i)
    out.markers[i] = (1.0 - u) * a.markers[i] + u * b.markers[i];
  return out;
}

inline double axis_cut(double v, double threshold) {
  return std::clamp(v, -threshold, threshold);
}

}  // namespace detail

/// Simulates one sensor over a ground-truth dataset. Per sample: the gating
/// conditions decide detection; occluded fingers are emitted from the
/// internal model (truth + bias toward the palm centre + model noise), seen
/// markers with direct noise; coordinates are sensor-local with every axis
/// clamped at the axis-cut threshold.
inline MeasuredStream simulate_sensor(const PoseDataset& dataset, const SensorPlacement& sensor,
                                      const SensorModelConfig& config) {
  config.validate();
  if (dataset.frames.size() < 2)
    throw std::domain_error("simulate_sensor needs at least two ground-truth frames");

  const FieldOfView fov = config.fov();
  std::int64_t duration = dataset.frames.back().timestamp_us - dataset.frames.front().timestamp_us;
  std::uint64_t stream_seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(sensor.id);
  std::vector<std::int64_t> ticks =
      variable_clock(config.rate_min_hz, config.rate_max_hz, std::max<std::int64_t>(duration, 1),
                     stream_seed);

  std::mt19937_64 rng(stream_seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise3 = [&](double sigma) {
    Vec3 n{gauss(rng), gauss(rng), gauss(rng)};
    return sigma > 0.0 ? Vec3(sigma * n) : Vec3(Vec3::Zero());
  };

  MeasuredStream stream;
  stream.sensor_id = sensor.id;
  stream.frames.reserve(ticks.size());
  stream.annotations.reserve(ticks.size());
  std::int64_t t0 = dataset.frames.front().timestamp_us;

  for (std::int64_t tick : ticks) {
    std::int64_t t = t0 + tick;
    MarkerFrame truth = detail::interpolate_truth(dataset, t);
    FrameContext ctx(truth);

    FrameAnnotation ann;
    ann.timestamp_us = t;

    bool detected = ctx.populated && forearm_facing_test(truth, sensor) &&
                    fov_containment_test(truth, sensor, fov, config.visibility.fov_scope);
    if (!detected) {
      ann.vis_rate = -1;
      ann.finger_visible.fill(false);
      ann.finger_rate.fill(-1);
      stream.frames.push_back(MarkerFrame::all_missing(t));
      stream.annotations.push_back(ann);
      continue;
    }

    FingerVisibilityResult vis = finger_visibility(ctx, sensor, fov, config.visibility);
    ann.finger_visible = vis.visible;
    for (int f = 0; f < kFingerCount; ++f) ann.finger_rate[f] = vis.visible[f] ? 1 : 0;
    ann.vis_rate = vis.all_visible() ? 1 : 0;

    MarkerFrame measured;
    measured.timestamp_us = t;
    const Vec3 palm_center = truth.markers[kPalmCenter];
    for (int i = 0; i < kMarkerCount; ++i) {
      Vec3 world = truth.markers[i];
      bool internal_model = false;
      if (i >= kFingerBase) {
        int finger = (i - kFingerBase) / kMarkersPerFinger;
        internal_model = !vis.visible[finger];
      }
      if (internal_model) {
        Vec3 toward_palm = palm_center - world;
        double len = toward_palm.norm();
        if (len > 0.0) world += config.internal_model_bias_mm * (toward_palm / len);
        world += noise3(config.internal_model_sigma_mm);
      } else {
        world += noise3(config.direct_sigma_mm);
      }
      Vec3 local = sensor.to_sensor(world);
      if (i == kElbow && sensor.id == config.elbow_bias_sensor_id)
        local.y() += config.elbow_bias_mm;
      for (int a = 0; a < 3; ++a) local[a] = detail::axis_cut(local[a], config.axis_cut_mm);
      measured.markers[i] = local;
    }
    stream.frames.push_back(measured);
    stream.annotations.push_back(ann);
  }
  return stream;
}

}  // namespace handfield
