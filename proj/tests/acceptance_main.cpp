// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and thresholds are pinned in code.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "handfield/pipeline.hpp"
#include "oracles.hpp"

using namespace handfield;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<bool(std::string&)>& fn) {
  std::string detail;
  bool ok = false;
  auto t0 = clock_type::now();
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
  std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              secs, detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

struct Check {
  bool ok = true;
  std::string why;
  void require(bool cond, const std::string& msg) {
    if (ok && !cond) {
      ok = false;
      why = msg;
    }
  }
};

HandPose random_pose(std::mt19937_64& rng, double spread_mm = 60.0) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  HandPose pose;
  pose.position = Vec3{(u01(rng) - 0.5) * spread_mm, 200.0 + u01(rng) * 80.0,
                       100.0 + (u01(rng) - 0.5) * spread_mm};
  pose.orientation = u01(rng) < 0.5 ? PalmOrientation::Horizontal : PalmOrientation::Vertical;
  pose.wrist_flexion_deg = (u01(rng) - 0.5) * 100.0;
  for (int f = 0; f < kFingerCount; ++f) {
    pose.flexion_deg[f][0] = u01(rng) * 90.0;
    pose.flexion_deg[f][1] = f == 0 ? 0.0 : u01(rng) * 90.0;
    pose.flexion_deg[f][2] = u01(rng) * 90.0;
  }
  return pose;
}

PoseDataset reference_monte_carlo(int samples_per_frame, std::uint64_t seed) {
  HandDimensions dims;
  TrajectoryConfig cfg;
  auto trajs = generate_reference_trajectories(dims, cfg);
  return monte_carlo_expand(trajs, samples_per_frame, {}, seed, dims, cfg);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// --- criterion 1 -------------------------------------------------------------

bool ray_segment_oracle_cases(Check& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int cases = 0;
  while (cases < 1000) {
    Ray ray{oracle::random_in_box(rng, 150.0), oracle::random_unit(rng)};
    Vec3 a = oracle::random_in_box(rng, 150.0);
    Vec3 b = a + oracle::random_unit(rng) * (20.0 + 60.0 * u01(rng));
    Vec3 axis = (b - a).normalized();
    if (axis.cross(ray.direction).norm() < 0.05) continue;  // parallel band
    RaySegmentResult r = ray_segment_distance(ray, a, b);
    // Squared distance is convex in (t, s): a generous window plus grid
    // refinement reaches the global minimum even for shallow angles.
    auto g = oracle::line_line_grid_search(ray.origin, ray.direction, a, b, -12000.0, 12000.0,
                                           -200.0, 200.0, 100, 12);
    c.require(std::abs(r.distance - g.distance) < 1e-3,
              "ray-segment distance deviates from the grid oracle");
    double len = (b - a).norm();
    double s_mm = g.seg_s * len;
    if (std::abs(s_mm) > 1e-3 && std::abs(s_mm - len) > 1e-3)
      c.require(r.within_segment == (s_mm > 0.0 && s_mm < len),
                "within_segment disagrees with the grid oracle");
    ++cases;
    if (!c.ok) return false;
  }
  return true;
}

bool hull_oracle_cases(Check& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-80.0, 80.0);
  int cases = 0;
  while (cases < 1000) {
    Vec3 n = oracle::random_unit(rng);
    Vec3 centre = oracle::random_in_box(rng, 100.0);
    Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    Vec3 bu = n.cross(seed).normalized();
    Vec3 bv = n.cross(bu);
    std::vector<Vec3> verts;
    std::vector<Vec2> verts2;
    for (int i = 0; i < 6; ++i) {
      Vec2 q{u(rng), u(rng)};
      verts2.push_back(q);
      verts.push_back(centre + q.x() * bu + q.y() * bv);
    }
    Vec2 q{u(rng) * 1.3, u(rng) * 1.3};
    if (oracle::min_pairwise_segment_distance_2d(q, verts2) < 1e-3) continue;  // boundary band
    Vec3 p = centre + q.x() * bu + q.y() * bv;
    bool inside = point_in_convex_hull(p, verts, Plane{n, centre});
    c.require(inside == oracle::hull_contains_closed(q, verts2),
              "hull containment disagrees with the triangle oracle");
    ++cases;
    if (!c.ok) return false;
  }
  return true;
}

bool palm_oracle_cases(Check& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  HandDimensions dims;
  int cases = 0;
  while (cases < 1000) {
    MarkerFrame frame = forward_kinematics(dims, random_pose(rng));
    FrameContext ctx(frame);
    auto palm = palm_marker_set(frame);
    Vec3 origin{(u01(rng) - 0.5) * 500.0, 0.0, (u01(rng) - 0.5) * 500.0};
    int f = static_cast<int>(u01(rng) * kFingerCount) % kFingerCount;
    int j = 2 + static_cast<int>(u01(rng) * 3) % 3;
    Vec3 marker = frame.markers[marker_index(static_cast<Finger>(f), j)];
    double march = oracle::palm_march_min_distance(origin, marker, palm, 10'000);
    if (march >= 1e-3 && march <= 0.5 + 1e-3) continue;  // grazing band
    bool expected = march < 0.5;
    c.require(palm_occlusion_test(marker, ctx, origin) == expected,
              "palm occlusion disagrees with the dense-march oracle");
    ++cases;
    if (!c.ok) return false;
  }
  return true;
}

bool cylinder_oracle_cases(Check& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  HandDimensions dims;
  int cases = 0;
  while (cases < 1000) {
    MarkerFrame frame = forward_kinematics(dims, random_pose(rng));
    Vec3 origin{(u01(rng) - 0.5) * 400.0, 0.0, (u01(rng) - 0.5) * 400.0};
    int f = static_cast<int>(u01(rng) * kFingerCount) % kFingerCount;
    int j = 2 + static_cast<int>(u01(rng) * 3) % 3;
    Finger owner = static_cast<Finger>(f);
    Vec3 marker = frame.markers[marker_index(owner, j)];

    double best = std::numeric_limits<double>::infinity();
    double end_margin = std::numeric_limits<double>::infinity();
    for (int g = 0; g < kFingerCount; ++g) {
      if (g == f) continue;
      for (int seg = 1; seg < 4; ++seg) {
        auto r = oracle::cylinder_sample(
            origin, marker, frame.markers[marker_index(static_cast<Finger>(g), seg)],
            frame.markers[marker_index(static_cast<Finger>(g), seg + 1)], 0.1);
        if (r.min_distance < best) {
          best = r.min_distance;
          end_margin = std::min(r.argmin_s_mm, r.seg_len_mm - r.argmin_s_mm);
        }
      }
    }
    if (std::abs(best - 5.0) < 1e-3 || (best < 5.0 && end_margin < 0.5)) continue;  // bands
    bool expected = best < 5.0;
    c.require(finger_occlusion_test(marker, frame, owner, origin) == expected,
              "finger occlusion disagrees with the dense cylinder oracle");
    ++cases;
    if (!c.ok) return false;
  }
  return true;
}

}  // namespace

int main() {
  criterion(1, "geometry oracle equivalence on randomized cases", [](std::string& detail) {
    auto t0 = clock_type::now();
    Check c;
    std::mt19937_64 rng(2024);
    if (!ray_segment_oracle_cases(c, rng) || !hull_oracle_cases(c, rng) ||
        !palm_oracle_cases(c, rng) || !cylinder_oracle_cases(c, rng)) {
      detail = c.why;
      return false;
    }
    double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    if (secs >= 60.0) {
      detail = "oracle suite exceeded 60 s";
      return false;
    }
    detail = "4 x 1000 cases";
    return true;
  });

  criterion(2, "placement metric equals brute-force frame scoring", [](std::string& detail) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-350.0, 350.0);
    HandDimensions dims;
    for (int trial = 0; trial < 100; ++trial) {
      PoseDataset ds;
      ds.name = "random";
      for (int k = 0; k < 20; ++k)
        ds.frames.push_back(forward_kinematics(dims, random_pose(rng), {}, k * 10'000));
      PlacementVector placements;
      for (int s = 0; s < kSensorCount; ++s)
        placements.sensors[s] = {s + 1, u(rng), u(rng), u(rng) / 10.0, u(rng) / 4.0};
      VisibilityOptions opts;
      opts.fov_scope = trial % 2 ? FovScope::AllMarkers : FovScope::FingersOnly;
      FieldOfView fov = make_fov(100.0, 100.0, 400.0);
      MetricValue m = placement_metric(placements, ds, fov, opts);
      std::vector<int> counts(kSensorCount, 0);
      for (const auto& frame : ds.frames) {
        int f = frame_score(frame, placements.sensors, fov, opts);
        for (int i = 1; i <= f; ++i) ++counts[i - 1];
      }
      if (m.tier_counts != counts ||
          m.score != score_from_tier_counts(counts, 20, MetricForm::Lexicographic)) {
        detail = "mismatch in trial " + std::to_string(trial);
        return false;
      }
    }
    detail = "100 trials exact";
    return true;
  });

  // Shared by criteria 3 and 4. The canonical experiment scores condition 2
  // over the hand markers (fingers-only): the published optimized layout
  // tilts three sensors by up to 30 degrees, which is only consistent with
  // the FoV test not being applied to the forearm markers.
  PoseDataset mc = reference_monte_carlo(24, 42);
  VisibilityOptions experiment_opts;
  experiment_opts.fov_scope = FovScope::FingersOnly;
  FieldOfView opt_fov = make_fov(100.0, 100.0, 400.0);
  PlacementVector pso_layout;

  criterion(3, "optimized placement beats the initial layout", [&](std::string& detail) {
    auto t0 = clock_type::now();
    if (mc.frames.size() < 2000) {
      detail = "dataset too small: " + std::to_string(mc.frames.size());
      return false;
    }
    SwarmConfig swarm;  // 40 particles x 300 iterations
    swarm.seed = 42;
    swarm.visibility = experiment_opts;
    swarm.threads = 0;
    PsoResult result = pso_optimize(mc, opt_fov, swarm);
    pso_layout = result.best;
    MetricValue initial = placement_metric(initial_layout(), mc, opt_fov, experiment_opts);
    double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    if (secs >= 600.0) {
      detail = "optimization exceeded 10 min";
      return false;
    }
    if (!(result.best_metric.score > initial.score)) {
      detail = "pso " + std::to_string(result.best_metric.score) + " vs initial " +
               std::to_string(initial.score);
      return false;
    }
    for (std::size_t i = 1; i < result.trace.size(); ++i)
      if (result.trace[i] < result.trace[i - 1]) {
        detail = "non-monotone convergence trace";
        return false;
      }

    // Directional reproduction of the visibility-rate claim on the
    // vertical-pose motions, simulated with the datasheet FoV.
    HandDimensions dims;
    TrajectoryConfig tc;
    auto trajs = generate_reference_trajectories(dims, tc);
    SensorModelConfig smc;
    smc.seed = 42;
    smc.visibility = experiment_opts;
    auto vertical_mean = [&](const PlacementVector& layout) {
      double sum = 0.0;
      int n = 0;
      for (const auto& traj : trajs) {
        if (traj.name.find("vertical") == std::string::npos) continue;
        for (const auto& sensor : layout.sensors) {
          MeasuredStream s = simulate_sensor(traj, sensor, smc);
          for (const auto& ann : s.annotations)
            for (int f = 0; f < kFingerCount; ++f) {
              sum += ann.finger_rate[f];
              ++n;
            }
        }
      }
      return sum / n;
    };
    double v_opt = vertical_mean(result.best);
    double v_init = vertical_mean(initial_layout());
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "metric %.4f > %.4f; vertical visibility %.3f > %.3f (paper: 0.05 vs -0.07)",
                  result.best_metric.score, initial.score, v_opt, v_init);
    detail = buf;
    return v_opt > v_init;
  });

  criterion(4, "published optimized layout scores at least the initial layout",
            [&](std::string& detail) {
    MetricValue init_f = placement_metric(initial_layout(), mc, opt_fov, experiment_opts);
    MetricValue tbl2_f = placement_metric(optimized_table_layout(), mc, opt_fov, experiment_opts);
    VisibilityOptions strict;  // default all-markers scope
    MetricValue init_a = placement_metric(initial_layout(), mc, opt_fov, strict);
    MetricValue tbl2_a = placement_metric(optimized_table_layout(), mc, opt_fov, strict);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "fingers-only %.4f >= %.4f; all-markers %.4f >= %.4f",
                  tbl2_f.score, init_f.score, tbl2_a.score, init_a.score);
    detail = buf;
    return tbl2_f.score >= init_f.score && tbl2_a.score >= init_a.score;
  });

  criterion(5, "masking a sensor is bitwise identical to removing it", [](std::string& detail) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int scenario = 0; scenario < 100; ++scenario) {
      int ticks = 20 + static_cast<int>(u01(rng) * 40);
      std::vector<ResampledStream> streams;
      for (int s = 0; s < 4; ++s) {
        ResampledStream rs;
        rs.sensor_id = s + 1;
        for (int k = 0; k < ticks; ++k) {
          MarkerFrame f;
          f.timestamp_us = k * rs.tick_us;
          for (int i = 0; i < kMarkerCount; ++i) {
            if (u01(rng) < 0.1) {
              f.markers[i] = Vec3::Constant(kMissing);
            } else {
              f.markers[i] = Vec3{g(rng), 200.0 + g(rng), 100.0 + g(rng)};
            }
          }
          rs.frames.push_back(f);
        }
        streams.push_back(rs);
      }
      KalmanConfig cfg;
      cfg.per_sensor_noise_mm2 = {{1, 2.0}, {2, 4.0}, {3, 6.0}, {4, 8.0}};
      int masked = scenario % 4;
      std::vector<RealignmentTransform> tfs(4);
      std::vector<ResampledStream> with_masked = streams;
      for (auto& f : with_masked[masked].frames) f = MarkerFrame::all_missing(f.timestamp_us);
      std::vector<ResampledStream> removed;
      std::vector<RealignmentTransform> tfs3;
      for (int s = 0; s < 4; ++s)
        if (s != masked) {
          removed.push_back(streams[s]);
          tfs3.push_back(tfs[s]);
        }
      FusedStream a = kalman_fuse(with_masked, tfs, cfg);
      FusedStream b = kalman_fuse(removed, tfs3, cfg);
      if (a.frames.size() != b.frames.size()) {
        detail = "tick count mismatch";
        return false;
      }
      for (std::size_t k = 0; k < a.frames.size(); ++k) {
        if (a.predicted_only[k] != b.predicted_only[k]) {
          detail = "predicted_only mismatch";
          return false;
        }
        for (int i = 0; i < kMarkerCount; ++i)
          for (int axis = 0; axis < 3; ++axis) {
            double va = a.frames[k].markers[i][axis];
            double vb = b.frames[k].markers[i][axis];
            bool same = (std::isnan(va) && std::isnan(vb)) || va == vb;
            if (!same) {
              detail = "scenario " + std::to_string(scenario) + " differs";
              return false;
            }
          }
      }
    }
    detail = "100 scenarios bitwise identical";
    return true;
  });

  criterion(6, "fusion beats the best single sensor on noisy streams", [](std::string& detail) {
    int wins = 0;
    for (int seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(1000 + seed);
      std::normal_distribution<double> g(0.0, 2.0);
      std::uniform_real_distribution<double> u(-0.05, 0.05);
      Vec3 velocity{u(rng), u(rng), u(rng)};
      auto truth = [&](int k) { return Vec3{0, 200, 100} + velocity * k; };
      const int ticks = 500;
      std::vector<ResampledStream> streams;
      for (int s = 0; s < 4; ++s) {
        ResampledStream rs;
        rs.sensor_id = s + 1;
        for (int k = 0; k < ticks; ++k) {
          MarkerFrame f;
          f.timestamp_us = k * rs.tick_us;
          for (int i = 0; i < kMarkerCount; ++i)
            f.markers[i] = truth(k) + Vec3{g(rng), g(rng), g(rng)};
          rs.frames.push_back(f);
        }
        streams.push_back(rs);
      }
      FusedStream fused = kalman_fuse(streams, std::vector<RealignmentTransform>(4));
      auto rmse = [&](const std::vector<MarkerFrame>& frames) {
        double ss = 0.0;
        int n = 0;
        for (int k = 100; k < ticks; ++k)
          for (int i = 0; i < kMarkerCount; ++i) {
            ss += (frames[k].markers[i] - truth(k)).squaredNorm();
            n += 3;
          }
        return std::sqrt(ss / n);
      };
      double fused_rmse = rmse(fused.frames);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : streams) best = std::min(best, rmse(s.frames));
      if (fused_rmse < best) ++wins;
    }
    detail = std::to_string(wins) + "/100 seeds";
    return wins >= 95;
  });

  criterion(7, "resampling fidelity and axis-cut round trip", [](std::string& detail) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      std::array<std::array<double, 4>, 3> coeff{};
      for (auto& axis : coeff)
        for (auto& c : axis) c = u(rng);
      auto traj = [&](double t) {
        Vec3 p;
        for (int a = 0; a < 3; ++a)
          p[a] = coeff[a][0] + coeff[a][1] * t + coeff[a][2] * t * t + coeff[a][3] * t * t * t;
        return p;
      };
      auto ticks = variable_clock(11.0, 34.0, 3'000'000, 500 + trial);
      MeasuredStream stream;
      stream.sensor_id = 1;
      for (std::int64_t t : ticks) {
        MarkerFrame f;
        f.timestamp_us = t;
        for (int i = 0; i < kMarkerCount; ++i) f.markers[i] = traj(t * 1e-6);
        stream.frames.push_back(f);
      }
      ResampledStream out = resample_bspline(stream, 100.0);
      for (const auto& f : out.frames) {
        Vec3 expected = traj(f.timestamp_us * 1e-6);
        worst = std::max(worst, (f.markers[0] - expected).norm());
      }
    }
    if (worst >= 1e-6) {
      detail = "reconstruction error " + std::to_string(worst);
      return false;
    }

    // Axis-cut round trip: a sensor whose local view of the workspace centre
    // exceeds the cut threshold, observing a compact marker cloud at that
    // centre. The realignment offset must restore ground truth within the
    // direct-noise sigma.
    HandDimensions dims;
    for (auto& f : dims.fingers) {
      f.metacarpal_mm *= 0.004;
      f.proximal_mm *= 0.004;
      f.intermediate_mm *= 0.004;
      f.distal_mm *= 0.004;
    }
    dims.palm_width_mm *= 0.004;
    dims.forearm_length_mm *= 0.004;
    Vec3 center{0.0, 100.0, 0.0};
    HandPose pose;
    pose.position = center;
    PoseDataset truth;
    truth.name = "axis-cut";
    for (int k = 0; k < 40; ++k)
      truth.frames.push_back(forward_kinematics(dims, pose, {}, k * 10'000));

    SensorPlacement sensor{1, 0.0, 480.0, -78.3, 0.0};
    SensorModelConfig smc;
    smc.direct_sigma_mm = 0.0;
    smc.internal_model_sigma_mm = 0.0;
    smc.internal_model_bias_mm = 0.0;
    smc.elbow_bias_mm = 0.0;
    smc.seed = 3;
    MeasuredStream measured = simulate_sensor(truth, sensor, smc);
    RealignmentTransform tf = realignment_from_placement(sensor, smc.axis_cut_mm, center);
    if (tf.offset.norm() <= 0.0) {
      detail = "expected a nonzero axis-cut offset";
      return false;
    }
    double sigma = 1.5;  // default direct-noise sigma
    double worst_rt = 0.0;
    int compared = 0;
    for (const auto& frame : measured.frames) {
      if (frame.fully_missing()) continue;
      MarkerFrame world = realign(frame, tf);
      for (int i = 0; i < kMarkerCount; ++i) {
        worst_rt = std::max(worst_rt, (world.markers[i] - truth.frames[0].markers[i]).norm());
        ++compared;
      }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "spline %.2e mm; axis-cut round trip %.3f mm over %d markers",
                  worst, worst_rt, compared);
    detail = buf;
    return compared > 0 && worst_rt < sigma;
  });

  criterion(8, "kinematics round trip for joint angles and lengths", [](std::string& detail) {
    HandDimensions dims;
    auto quads = default_joint_quadruples();
    double worst_angle = 0.0, worst_len = 0.0;
    for (double a = 0.0; a <= 90.0; a += 7.5) {
      HandPose pose;
      pose.position = Vec3{0, 250, 150};
      pose.flexion_deg[static_cast<int>(Finger::Index)] = {a, a * 0.75, a * 0.5};
      pose.flexion_deg[static_cast<int>(Finger::Thumb)] = {std::min(a, 60.0), 0.0, a * 0.5};
      pose.wrist_flexion_deg = a / 2.0 - 20.0;
      MarkerFrame frame = forward_kinematics(dims, pose);
      auto expect = [&](JointId j, double v) {
        worst_angle = std::max(worst_angle, std::abs(joint_flexion(frame, quads.at(j)) - v));
      };
      expect(JointId::IndexMCP, a);
      expect(JointId::IndexPIP, a * 0.75);
      expect(JointId::IndexDIP, a * 0.5);
      expect(JointId::ThumbMCP, std::min(a, 60.0));
      expect(JointId::ThumbDIP, a * 0.5);
      expect(JointId::Wrist, std::abs(a / 2.0 - 20.0));

      auto lengths = compute_finger_length(std::span<const MarkerFrame>{&frame, 1});
      for (int f = 0; f < kFingerCount; ++f) {
        auto chain = dims.chain_lengths(static_cast<Finger>(f));
        double expected = chain[0] + chain[1] + chain[2] + chain[3];
        worst_len = std::max(worst_len, std::abs(lengths[f] - expected));
      }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "angle error %.2e deg, length error %.2e mm", worst_angle,
                  worst_len);
    detail = buf;
    return worst_angle < 1e-6 && worst_len < 1e-9;
  });

  criterion(9, "seeded pipeline stages rerun byte-identically", [](std::string& detail) {
    fs::path dir = fs::temp_directory_path() / "handfield_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    ArtifactMeta meta{123, 42};

    auto run_once = [&](const std::string& tag) {
      HandDimensions dims;
      TrajectoryConfig tc;
      tc.static_frames = 3;
      auto trajs = generate_reference_trajectories(dims, tc);
      PoseDataset mc_small = monte_carlo_expand(trajs, 3, {}, 42, dims, tc);
      write_pose_csv((dir / (tag + "_mc.csv")).string(), mc_small, meta);

      SensorModelConfig smc;
      smc.seed = 42;
      MeasuredStream stream = simulate_sensor(trajs[0], SensorPlacement{1, -60, 60, 0, 0}, smc);
      write_stream_csv((dir / (tag + "_s1.csv")).string(), stream, meta);

      PoseDataset pso_ds = mc_small;
      pso_ds.frames.resize(200);
      SwarmConfig swarm;
      swarm.particles = 8;
      swarm.iterations = 15;
      swarm.seed = 42;
      swarm.threads = 2;
      swarm.visibility.fov_scope = FovScope::FingersOnly;
      PsoResult pso = pso_optimize(pso_ds, make_fov(100, 100, 400), swarm);
      write_layout_json((dir / (tag + "_layout.json")).string(), pso.best, pso.best_metric, meta);
      write_trace_csv((dir / (tag + "_trace.csv")).string(), pso.trace, meta);

      auto streams = simulate_all(trajs[0], initial_layout(), smc);
      PipelineConfig pc;
      FusedStream fused = fuse_streams(streams, initial_layout(), pc);
      write_fused_csv((dir / (tag + "_fused.csv")).string(), fused, meta);
    };
    run_once("a");
    run_once("b");
    for (const char* stem : {"_mc.csv", "_s1.csv", "_layout.json", "_trace.csv", "_fused.csv"}) {
      std::string a = slurp((dir / ("a" + std::string(stem))).string());
      std::string b = slurp((dir / ("b" + std::string(stem))).string());
      if (a.empty() || a != b) {
        detail = std::string("stage differs: ") + stem;
        return false;
      }
    }
    fs::remove_all(dir);
    detail = "generate, simulate, optimize, fuse";
    return true;
  });

  std::printf("%d of 9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
