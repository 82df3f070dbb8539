#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "handfield/sensor_sim.hpp"

namespace handfield {

/// Interpolating cubic spline with not-a-knot end conditions, so sampled
/// cubic polynomials are reproduced exactly. Needs at least four knots.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 4 || y_.size() != n)
      throw std::domain_error("cubic spline needs >= 4 samples");
    for (std::size_t i = 1; i < n; ++i)
      if (x_[i] <= x_[i - 1]) throw std::domain_error("spline knots must strictly increase");

    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];

    // Solve for the interior moments M_1..M_{n-2}; the not-a-knot relations
    // (continuous third derivative at the second and second-to-last knots)
    // eliminate M_0 and M_{n-1} from the first and last equations.
    const std::size_t m = n - 2;
    std::vector<double> sub(m, 0.0), diag(m, 0.0), sup(m, 0.0), rhs(m, 0.0);
    for (std::size_t i = 1; i <= m; ++i) {
      rhs[i - 1] = (y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1];
      sub[i - 1] = h[i - 1] / 6.0;
      diag[i - 1] = (h[i - 1] + h[i]) / 3.0;
      sup[i - 1] = h[i] / 6.0;
    }
    diag[0] += (h[0] / 6.0) * (1.0 + h[0] / h[1]);
    sup[0] -= h[0] * h[0] / (6.0 * h[1]);
    diag[m - 1] += (h[n - 2] / 6.0) * (1.0 + h[n - 2] / h[n - 3]);
    sub[m - 1] -= h[n - 2] * h[n - 2] / (6.0 * h[n - 3]);

    // Thomas algorithm.
    for (std::size_t i = 1; i < m; ++i) {
      double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> mid(m);
    mid[m - 1] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) mid[i] = (rhs[i] - sup[i] * mid[i + 1]) / diag[i];

    moments_.resize(n);
    for (std::size_t i = 0; i < m; ++i) moments_[i + 1] = mid[i];
    moments_[0] = moments_[1] + (h[0] / h[1]) * (moments_[1] - moments_[2]);
    moments_[n - 1] =
        moments_[n - 2] + (h[n - 2] / h[n - 3]) * (moments_[n - 2] - moments_[n - 3]);
  }

  double operator()(double x) const {
    std::size_t i = interval(x);
    double h = x_[i + 1] - x_[i];
    double a = x_[i + 1] - x, b = x - x_[i];
    return moments_[i] * a * a * a / (6.0 * h) + moments_[i + 1] * b * b * b / (6.0 * h) +
           (y_[i] - moments_[i] * h * h / 6.0) * a / h +
           (y_[i + 1] - moments_[i + 1] * h * h / 6.0) * b / h;
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::size_t interval(double x) const {
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }

  std::vector<double> x_, y_, moments_;
};

/// Frames on an exact tick grid: timestamp = epoch + k * tick.
struct ResampledStream {
  int sensor_id = 0;
  std::int64_t epoch_us = 0;
  std::int64_t tick_us = 10'000;
  std::vector<MarkerFrame> frames;
};

/// Timestamp of the first frame with any populated marker, or absent.
inline std::optional<std::int64_t> first_detection_us(const MeasuredStream& stream) {
  for (const auto& f : stream.frames)
    if (!f.fully_missing()) return f.timestamp_us;
  return std::nullopt;
}

/// Resamples a variable-rate stream onto the exact tick grid by cubic spline
/// interpolation, one coordinate at a time. Ticks outside the data support,
/// inside gaps longer than `gap_limit_us`, or on runs with fewer than four
/// samples come out missing. An all-missing stream yields no frames.
inline ResampledStream resample_bspline(const MeasuredStream& stream, double rate_hz,
                                        std::optional<std::int64_t> epoch_us = std::nullopt,
                                        std::int64_t gap_limit_us = 100'000) {
  if (rate_hz <= 0) throw std::domain_error("resample rate must be positive");
  for (std::size_t i = 1; i < stream.frames.size(); ++i)
    if (stream.frames[i].timestamp_us <= stream.frames[i - 1].timestamp_us)
      throw ContractViolation("measured stream timestamps must strictly increase");

  ResampledStream out;
  out.sensor_id = stream.sensor_id;
  out.tick_us = static_cast<std::int64_t>(std::llround(1e6 / rate_hz));

  std::optional<std::int64_t> detect = first_detection_us(stream);
  if (!detect) return out;
  out.epoch_us = epoch_us.value_or(*detect);

  std::int64_t last_us = stream.frames.back().timestamp_us;
  if (last_us < out.epoch_us) return out;
  std::size_t tick_count = static_cast<std::size_t>((last_us - out.epoch_us) / out.tick_us) + 1;
  out.frames.resize(tick_count);
  for (std::size_t k = 0; k < tick_count; ++k) {
    out.frames[k] = MarkerFrame::all_missing(out.epoch_us +
                                             static_cast<std::int64_t>(k) * out.tick_us);
  }

  for (int marker = 0; marker < kMarkerCount; ++marker) {
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<std::int64_t> ts;
      std::vector<double> vs;
      for (const auto& f : stream.frames) {
        double v = f.markers[marker][axis];
        if (!is_missing(v)) {
          ts.push_back(f.timestamp_us);
          vs.push_back(v);
        }
      }
      std::size_t run_start = 0;
      for (std::size_t i = 1; i <= ts.size(); ++i) {
        bool run_ends = i == ts.size() || ts[i] - ts[i - 1] > gap_limit_us;
        if (!run_ends) continue;
        std::size_t len = i - run_start;
        if (len >= 4) {
          std::vector<double> xs(len), ys(len);
          for (std::size_t j = 0; j < len; ++j) {
            xs[j] = static_cast<double>(ts[run_start + j] - out.epoch_us) * 1e-6;
            ys[j] = vs[run_start + j];
          }
          CubicSpline spline(std::move(xs), std::move(ys));
          std::int64_t lo = ts[run_start] - out.epoch_us;
          std::int64_t hi = ts[i - 1] - out.epoch_us;
          std::int64_t k0 = lo <= 0 ? 0 : (lo + out.tick_us - 1) / out.tick_us;
          for (std::size_t k = static_cast<std::size_t>(k0);
               k < tick_count && static_cast<std::int64_t>(k) * out.tick_us <= hi; ++k)
            out.frames[k].markers[marker][axis] = spline(static_cast<double>(k) * out.tick_us * 1e-6);
        }
        run_start = i;
      }
    }
  }
  return out;
}

/// Rigid realignment of sensor-local markers to world coordinates plus the
/// constant axis-cut compensation: p_world = R p + t + offset.
struct RealignmentTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 offset = Vec3::Zero();
};

/// Transform of a placed sensor. The offset compensates the per-axis clamp
/// for sensors whose view of the workspace centre exceeds the cut threshold;
/// it is zero otherwise.
inline RealignmentTransform realignment_from_placement(const SensorPlacement& sensor,
                                                       double axis_cut_mm = 250.0,
                                                       const Vec3& workspace_center = Vec3::Zero()) {
  RealignmentTransform tf;
  tf.rotation = sensor.rotation();
  tf.translation = sensor.position();
  Vec3 center_local = sensor.to_sensor(workspace_center);
  Vec3 local_offset;
  for (int a = 0; a < 3; ++a) {
    double clamped = std::clamp(center_local[a], -axis_cut_mm, axis_cut_mm);
    local_offset[a] = center_local[a] - clamped;
  }
  tf.offset = tf.rotation * local_offset;
  return tf;
}

inline MarkerFrame realign(const MarkerFrame& frame, const RealignmentTransform& tf) {
  MarkerFrame out;
  out.timestamp_us = frame.timestamp_us;
  for (int i = 0; i < kMarkerCount; ++i) {
    const Vec3& p = frame.markers[i];
    out.markers[i] = is_missing(p) ? p : Vec3(tf.rotation * p + tf.translation + tf.offset);
  }
  return out;
}

/// Per-coordinate availability mask. A wholly missing frame is all false.
inline std::array<bool, kMarkerCount * 3> handle_missing(const MarkerFrame& frame) {
  std::array<bool, kMarkerCount * 3> mask{};
  for (int i = 0; i < kMarkerCount; ++i)
    for (int a = 0; a < 3; ++a) mask[3 * i + a] = !is_missing(frame.markers[i][a]);
  return mask;
}

struct KalmanConfig {
  double process_noise = 10.0;        // q, mm^2/s^3
  double measurement_noise_mm2 = 4.0;  // default r
  std::map<int, double> per_sensor_noise_mm2;  // keyed by sensor id
  double initial_variance_mm2 = 1e4;

  double noise_for(int sensor_id) const {
    auto it = per_sensor_noise_mm2.find(sensor_id);
    return it == per_sensor_noise_mm2.end() ? measurement_noise_mm2 : it->second;
  }
};

struct FusedStream {
  std::int64_t epoch_us = 0;
  std::int64_t tick_us = 10'000;
  std::vector<MarkerFrame> frames;
  std::vector<bool> predicted_only;       // no sensor contributed at this tick
  std::vector<double> covariance_trace;   // mean position variance, initialized filters
  std::vector<double> min_cov_eigenvalue;  // per tick, across initialized filters
};

/// Constant-velocity Kalman fusion, one independent filter per marker
/// coordinate. Updates run sequentially in ascending sensor id; missing
/// measurements are skipped exactly as if the sensor were absent. Each
/// filter initializes from its first available measurement with zero
/// velocity and a large covariance.
inline FusedStream kalman_fuse(std::vector<ResampledStream> streams,
                               const std::vector<RealignmentTransform>& transforms,
                               const KalmanConfig& config = {}) {
  if (streams.empty()) throw std::domain_error("kalman_fuse needs at least one stream");
  if (transforms.size() != streams.size())
    throw ContractViolation("one realignment transform per stream required");

  for (std::size_t s = 0; s < streams.size(); ++s)
    for (auto& f : streams[s].frames) f = realign(f, transforms[s]);

  std::vector<std::size_t> order(streams.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return streams[a].sensor_id < streams[b].sensor_id;
  });

  const ResampledStream& ref = streams[order[0]];
  std::size_t tick_count = 0;
  for (const auto& s : streams) {
    if (!s.frames.empty() && (s.epoch_us != ref.epoch_us || s.tick_us != ref.tick_us))
      throw ContractViolation("streams must share the resampling tick grid");
    tick_count = std::max(tick_count, s.frames.size());
  }

  FusedStream out;
  out.epoch_us = ref.epoch_us;
  out.tick_us = ref.tick_us;
  out.frames.reserve(tick_count);
  out.predicted_only.reserve(tick_count);
  out.covariance_trace.reserve(tick_count);

  const double dt = static_cast<double>(ref.tick_us) * 1e-6;
  const double q = config.process_noise;
  Eigen::Matrix2d f_mat;
  f_mat << 1.0, dt, 0.0, 1.0;
  Eigen::Matrix2d q_mat;
  q_mat << q * dt * dt * dt / 3.0, q * dt * dt / 2.0, q * dt * dt / 2.0, q * dt;

  constexpr int kCoords = kMarkerCount * 3;
  struct CoordFilter {
    bool initialized = false;
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
  };
  std::vector<CoordFilter> filters(kCoords);

  for (std::size_t k = 0; k < tick_count; ++k) {
    for (auto& flt : filters) {
      if (!flt.initialized) continue;
      flt.x = f_mat * flt.x;
      flt.p = f_mat * flt.p * f_mat.transpose() + q_mat;
    }

    int updates = 0;
    for (std::size_t oi : order) {
      const ResampledStream& s = streams[oi];
      if (k >= s.frames.size()) continue;
      const MarkerFrame& frame = s.frames[k];
      double r = config.noise_for(s.sensor_id);
      for (int c = 0; c < kCoords; ++c) {
        double z = frame.markers[c / 3][c % 3];
        if (is_missing(z)) continue;
        CoordFilter& flt = filters[c];
        if (!flt.initialized) {
          flt.initialized = true;
          flt.x << z, 0.0;
          flt.p = Eigen::Matrix2d::Identity() * config.initial_variance_mm2;
          ++updates;
          continue;
        }
        double innovation = z - flt.x(0);
        double s_cov = flt.p(0, 0) + r;
        Eigen::Vector2d gain = flt.p.col(0) / s_cov;
        flt.x += gain * innovation;
        // Joseph form keeps the covariance symmetric PSD.
        Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
        a(0, 0) -= gain(0);
        a(1, 0) = -gain(1);
        flt.p = a * flt.p * a.transpose() + r * gain * gain.transpose();
        flt.p = ((flt.p + flt.p.transpose()) / 2.0).eval();
        ++updates;
      }
    }

    MarkerFrame fused;
    fused.timestamp_us = out.epoch_us + static_cast<std::int64_t>(k) * out.tick_us;
    double var_sum = 0.0;
    double min_eig = std::numeric_limits<double>::infinity();
    int var_n = 0;
    for (int c = 0; c < kCoords; ++c) {
      const CoordFilter& flt = filters[c];
      fused.markers[c / 3][c % 3] = flt.initialized ? flt.x(0) : kMissing;
      if (flt.initialized) {
        var_sum += flt.p(0, 0);
        double tr = flt.p(0, 0) + flt.p(1, 1);
        double det = flt.p(0, 0) * flt.p(1, 1) - flt.p(0, 1) * flt.p(1, 0);
        double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
        min_eig = std::min(min_eig, tr / 2.0 - disc);
        ++var_n;
      }
    }
    out.frames.push_back(fused);
    out.predicted_only.push_back(updates == 0);
    out.covariance_trace.push_back(var_n > 0 ? var_sum / var_n : kMissing);
    out.min_cov_eigenvalue.push_back(var_n > 0 ? min_eig : kMissing);
  }
  return out;
}

}  // namespace handfield
