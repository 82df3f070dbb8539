#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "handfield/visibility.hpp"

namespace handfield {

inline constexpr int kSensorCount = 4;
inline constexpr int kPlacementDims = kSensorCount * 4;  // {x, z, phi, theta} each

/// Decision vector of the optimizer: four sensor poses on the table plane.
struct PlacementVector {
  std::array<SensorPlacement, kSensorCount> sensors{};

  static PlacementVector from_flat(const std::array<double, kPlacementDims>& v) {
    PlacementVector p;
    for (int s = 0; s < kSensorCount; ++s)
      p.sensors[s] = SensorPlacement{s + 1, v[4 * s], v[4 * s + 1], v[4 * s + 2], v[4 * s + 3]};
    return p;
  }

  std::array<double, kPlacementDims> to_flat() const {
    std::array<double, kPlacementDims> v{};
    for (int s = 0; s < kSensorCount; ++s) {
      v[4 * s] = sensors[s].x_mm;
      v[4 * s + 1] = sensors[s].z_mm;
      v[4 * s + 2] = sensors[s].phi_deg;
      v[4 * s + 3] = sensors[s].theta_deg;
    }
    return v;
  }
};

/// Table layouts used as regression fixtures: the naive box corners and the
/// published optimized arrangement.
inline PlacementVector initial_layout() {
  PlacementVector p;
  p.sensors = {SensorPlacement{1, -60.0, 60.0, 0.0, 0.0}, SensorPlacement{2, 60.0, 60.0, 0.0, 0.0},
               SensorPlacement{3, -60.0, -60.0, 0.0, 0.0},
               SensorPlacement{4, 60.0, -60.0, 0.0, 0.0}};
  return p;
}

inline PlacementVector optimized_table_layout() {
  PlacementVector p;
  p.sensors = {SensorPlacement{1, -120.37, 256.29, 29.90, 16.50},
               SensorPlacement{2, -69.97, 342.57, -7.57, -7.04},
               SensorPlacement{3, -190.60, 88.70, -8.72, -4.93},
               SensorPlacement{4, 178.88, 100.90, -12.06, 12.38}};
  return p;
}

struct PlacementBounds {
  double x_min = -400.0, x_max = 400.0;
  double z_min = -400.0, z_max = 400.0;
  double phi_min = -45.0, phi_max = 45.0;
  double theta_min = -90.0, theta_max = 90.0;
  double clearance_mm = 80.0;

  double lo(int dim) const {
    switch (dim % 4) {
      case 0: return x_min;
      case 1: return z_min;
      case 2: return phi_min;
      default: return theta_min;
    }
  }
  double hi(int dim) const {
    switch (dim % 4) {
      case 0: return x_max;
      case 1: return z_max;
      case 2: return phi_max;
      default: return theta_max;
    }
  }

  /// Conservative check that four centres with pairwise clearance fit.
  bool can_host_four_sensors() const {
    double wx = x_max - x_min, wz = z_max - z_min;
    double c = clearance_mm;
    return (wx >= c && wz >= c) || wx >= 3 * c || wz >= 3 * c;
  }
};

enum class MetricForm { Lexicographic, Literal };

/// Placement metric value: tier_counts[i-1] is how many frames reach F >= i.
struct MetricValue {
  double score = 0.0;
  std::vector<int> tier_counts;
  int frame_count = 0;
  MetricForm form = MetricForm::Lexicographic;
};

/// Canonical score evaluation shared by the metric and its tests, so equal
/// tier counts always produce bit-identical scores.
inline double score_from_tier_counts(std::span<const int> counts, int frame_count,
                                     MetricForm form) {
  double n = static_cast<double>(frame_count);
  double score = 0.0;
  if (form == MetricForm::Lexicographic) {
    double w = 1.0 / n;
    for (int c : counts) {
      score += static_cast<double>(c) * w;
      w /= n;
    }
  } else {
    // Literal printed form: sum_i sum_j F_j / N^i. The inner sum of F is the
    // sum of the tier counts.
    double sum_f = 0.0;
    for (int c : counts) sum_f += static_cast<double>(c);
    double w = 1.0 / n;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      score += sum_f * w;
      w /= n;
    }
  }
  return score;
}

/// Frame contexts precomputed once so repeated metric evaluations only pay
/// for the ray tests.
class VisibilityDataset {
 public:
  explicit VisibilityDataset(const PoseDataset& dataset) : dataset_(&dataset) {
    if (dataset.frames.empty()) throw std::domain_error("empty dataset");
    contexts_.reserve(dataset.frames.size());
    for (const auto& f : dataset.frames) contexts_.emplace_back(f);
  }

  const PoseDataset& dataset() const { return *dataset_; }
  std::span<const FrameContext> contexts() const { return contexts_; }
  int frame_count() const { return static_cast<int>(contexts_.size()); }

 private:
  const PoseDataset* dataset_;
  std::vector<FrameContext> contexts_;
};

inline MetricValue placement_metric(const PlacementVector& placements,
                                    const VisibilityDataset& data, const FieldOfView& fov,
                                    const VisibilityOptions& opts = {},
                                    MetricForm form = MetricForm::Lexicographic) {
  MetricValue value;
  value.frame_count = data.frame_count();
  value.form = form;
  value.tier_counts.assign(kSensorCount, 0);
  for (const FrameContext& ctx : data.contexts()) {
    int f = frame_score(ctx, placements.sensors, fov, opts);
    for (int i = 1; i <= f; ++i) ++value.tier_counts[i - 1];
  }
  value.score = score_from_tier_counts(value.tier_counts, value.frame_count, form);
  return value;
}

inline MetricValue placement_metric(const PlacementVector& placements, const PoseDataset& dataset,
                                    const FieldOfView& fov, const VisibilityOptions& opts = {},
                                    MetricForm form = MetricForm::Lexicographic) {
  VisibilityDataset data(dataset);
  return placement_metric(placements, data, fov, opts, form);
}

/// Clamps every coordinate into the box, then separates sensor pairs closer
/// than the clearance by symmetric pushes along their centre line (coincident
/// pairs split along x). Pushes and re-clamps alternate until the layout is
/// feasible.
inline PlacementVector clamp_and_repair(PlacementVector candidate, const PlacementBounds& bounds) {
  auto clamp_all = [&](PlacementVector& p) {
    for (auto& s : p.sensors) {
      s.x_mm = std::clamp(s.x_mm, bounds.x_min, bounds.x_max);
      s.z_mm = std::clamp(s.z_mm, bounds.z_min, bounds.z_max);
      s.phi_deg = std::clamp(s.phi_deg, bounds.phi_min, bounds.phi_max);
      s.theta_deg = std::clamp(s.theta_deg, bounds.theta_min, bounds.theta_max);
    }
  };
  clamp_all(candidate);

  const double c = bounds.clearance_mm;
  const double tol = 1e-9;
  for (int pass = 0; pass < 64; ++pass) {
    bool moved = false;
    for (int i = 0; i < kSensorCount; ++i) {
      for (int j = i + 1; j < kSensorCount; ++j) {
        auto& a = candidate.sensors[i];
        auto& b = candidate.sensors[j];
        double dx = b.x_mm - a.x_mm, dz = b.z_mm - a.z_mm;
        double dist = std::hypot(dx, dz);
        if (dist >= c - tol) continue;
        double ux = 1.0, uz = 0.0;
        if (dist > tol) {
          ux = dx / dist;
          uz = dz / dist;
        }
        double push = (c - dist) / 2.0;
        a.x_mm -= ux * push;
        a.z_mm -= uz * push;
        b.x_mm += ux * push;
        b.z_mm += uz * push;
        moved = true;
      }
    }
    if (!moved) return candidate;
    clamp_all(candidate);
  }

  // Pathological box: fall back to deterministic anchors that satisfy the
  // clearance whenever the bounds can host four sensors at all.
  double wx = bounds.x_max - bounds.x_min, wz = bounds.z_max - bounds.z_min;
  std::array<std::pair<double, double>, kSensorCount> anchors;
  if (wx >= c && wz >= c) {
    anchors = {{{bounds.x_min, bounds.z_min},
                {bounds.x_max, bounds.z_min},
                {bounds.x_min, bounds.z_max},
                {bounds.x_max, bounds.z_max}}};
  } else if (wx >= wz) {
    for (int k = 0; k < kSensorCount; ++k)
      anchors[k] = {bounds.x_min + wx * k / 3.0, bounds.z_min + wz / 2.0};
  } else {
    for (int k = 0; k < kSensorCount; ++k)
      anchors[k] = {bounds.x_min + wx / 2.0, bounds.z_min + wz * k / 3.0};
  }
  for (int k = 0; k < kSensorCount; ++k) {
    candidate.sensors[k].x_mm = anchors[k].first;
    candidate.sensors[k].z_mm = anchors[k].second;
  }
  return candidate;
}

inline bool placement_feasible(const PlacementVector& p, const PlacementBounds& bounds,
                               double tol = 1e-9) {
  for (const auto& s : p.sensors) {
    if (s.x_mm < bounds.x_min - tol || s.x_mm > bounds.x_max + tol) return false;
    if (s.z_mm < bounds.z_min - tol || s.z_mm > bounds.z_max + tol) return false;
    if (s.phi_deg < bounds.phi_min - tol || s.phi_deg > bounds.phi_max + tol) return false;
    if (s.theta_deg < bounds.theta_min - tol || s.theta_deg > bounds.theta_max + tol) return false;
  }
  for (int i = 0; i < kSensorCount; ++i)
    for (int j = i + 1; j < kSensorCount; ++j) {
      double dx = p.sensors[j].x_mm - p.sensors[i].x_mm;
      double dz = p.sensors[j].z_mm - p.sensors[i].z_mm;
      if (std::hypot(dx, dz) < bounds.clearance_mm - 1e-6) return false;
    }
  return true;
}

struct SwarmConfig {
  int particles = 40;
  int iterations = 300;
  double inertia = 0.729;
  double cognitive = 1.494;
  double social = 1.494;
  std::uint64_t seed = 42;
  PlacementBounds bounds{};
  MetricForm metric_form = MetricForm::Lexicographic;
  VisibilityOptions visibility{};
  int threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (particles < 1 || iterations < 1)
      throw std::invalid_argument("swarm needs at least one particle and one iteration");
    if (inertia < 0 || cognitive < 0 || social < 0)
      throw std::invalid_argument("swarm coefficients must be non-negative");
    if (!bounds.can_host_four_sensors())
      throw std::invalid_argument("placement box too small for four sensors at the clearance");
  }
};

struct PsoResult {
  PlacementVector best;
  MetricValue best_metric;
  std::vector<double> trace;  // best score after init and after each iteration
};

namespace detail {

/// Evaluates an objective for every candidate, chunked over worker threads.
/// Results are stored by index, so the outcome does not depend on thread
/// scheduling.
inline void evaluate_all(const std::vector<PlacementVector>& candidates,
                         std::vector<double>& scores,
                         const std::function<double(const PlacementVector&)>& objective,
                         int threads) {
  int n = static_cast<int>(candidates.size());
  scores.resize(n);
  int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  t = std::max(1, std::min(t, n));
  if (t == 1) {
    for (int i = 0; i < n; ++i) scores[i] = objective(candidates[i]);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int w = 0; w < t; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += t) scores[i] = objective(candidates[i]);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Generic particle swarm over the 16-dimensional placement box. The
/// objective is maximized. Deterministic for a fixed seed: all random draws
/// happen on the driving thread in a fixed order, worker threads only
/// evaluate.
inline PsoResult pso_maximize(const std::function<double(const PlacementVector&)>& objective,
                              const SwarmConfig& config) {
  config.validate();
  const PlacementBounds& bounds = config.bounds;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = config.particles;
  std::vector<std::array<double, kPlacementDims>> position(n), velocity(n), best_position(n);
  std::vector<PlacementVector> candidates(n);
  std::vector<double> scores(n), best_score(n);

  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < kPlacementDims; ++d) {
      double lo = bounds.lo(d), hi = bounds.hi(d);
      position[i][d] = lo + unit(rng) * (hi - lo);
      velocity[i][d] = 0.0;
    }
    candidates[i] = clamp_and_repair(PlacementVector::from_flat(position[i]), bounds);
    position[i] = candidates[i].to_flat();
  }

  detail::evaluate_all(candidates, scores, objective, config.threads);
  int gbest = 0;
  for (int i = 0; i < n; ++i) {
    best_position[i] = position[i];
    best_score[i] = scores[i];
    if (scores[i] > scores[gbest]) gbest = i;
  }
  std::array<double, kPlacementDims> gbest_position = best_position[gbest];
  double gbest_score = best_score[gbest];

  PsoResult result;
  result.trace.reserve(config.iterations + 1);
  result.trace.push_back(gbest_score);

  for (int it = 0; it < config.iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < kPlacementDims; ++d) {
        double lo = bounds.lo(d), hi = bounds.hi(d);
        double r1 = unit(rng), r2 = unit(rng);
        double v = config.inertia * velocity[i][d] +
                   config.cognitive * r1 * (best_position[i][d] - position[i][d]) +
                   config.social * r2 * (gbest_position[d] - position[i][d]);
        double vmax = hi - lo;
        velocity[i][d] = std::clamp(v, -vmax, vmax);
        position[i][d] += velocity[i][d];
      }
      candidates[i] = clamp_and_repair(PlacementVector::from_flat(position[i]), bounds);
      position[i] = candidates[i].to_flat();
    }
    detail::evaluate_all(candidates, scores, objective, config.threads);
    for (int i = 0; i < n; ++i) {
      if (scores[i] > best_score[i]) {
        best_score[i] = scores[i];
        best_position[i] = position[i];
        if (scores[i] > gbest_score) {
          gbest_score = scores[i];
          gbest_position = position[i];
        }
      }
    }
    result.trace.push_back(gbest_score);
  }

  result.best = PlacementVector::from_flat(gbest_position);
  result.best_metric.score = gbest_score;
  return result;
}

/// PSO over the placement metric. Returns the best feasible placement, its
/// full metric value, and the per-iteration best-score trace.
inline PsoResult pso_optimize(const PoseDataset& dataset, const FieldOfView& fov,
                              const SwarmConfig& config) {
  config.validate();
  VisibilityDataset data(dataset);
  auto objective = [&](const PlacementVector& p) {
    return placement_metric(p, data, fov, config.visibility, config.metric_form).score;
  };
  PsoResult result = pso_maximize(objective, config);
  result.best_metric =
      placement_metric(result.best, data, fov, config.visibility, config.metric_form);
  return result;
}

}  // namespace handfield
