#pragma once

#include <filesystem>
#include <string>

#include "handfield/io.hpp"
#include "handfield/metrics.hpp"

namespace handfield {

struct FovConfig {
  double horizontal_deg = 100.0;
  double vertical_deg = 100.0;
  double range_mm = 400.0;

  FieldOfView build() const { return make_fov(horizontal_deg, vertical_deg, range_mm); }
};

/// One self-describing config for the whole pipeline. A config file may set
/// any subset of keys; everything else keeps the defaults below.
struct PipelineConfig {
  std::uint64_t seed = 42;
  HandDimensions dims{};
  TrajectoryConfig trajectory{};
  int mc_samples_per_frame = 24;
  PerturbationConfig perturbation{};
  SensorModelConfig sensor_model{};
  SwarmConfig swarm{};
  FovConfig fov_optimization{100.0, 100.0, 400.0};   // reduced for optimization
  FovConfig fov_sensing{120.0, 150.0, 600.0};        // datasheet values
  KalmanConfig kalman{};
  double resample_rate_hz = 100.0;
  std::int64_t gap_limit_us = 100'000;
  std::string layout = "initial";  // initial | optimized-table2 | <file.json>

  PipelineConfig() {
    swarm.seed = seed;
    sensor_model.seed = seed;
  }
};

namespace pipeline_detail {

inline void read_fov(const json& j, FovConfig& fov) {
  fov.horizontal_deg = j.value("horizontal_deg", fov.horizontal_deg);
  fov.vertical_deg = j.value("vertical_deg", fov.vertical_deg);
  fov.range_mm = j.value("range_mm", fov.range_mm);
}

inline json fov_to_json(const FovConfig& fov) {
  return {{"horizontal_deg", fov.horizontal_deg},
          {"vertical_deg", fov.vertical_deg},
          {"range_mm", fov.range_mm}};
}

inline void read_sweep(const json& j, SweepSpec& s) {
  s.start_deg = j.value("start_deg", s.start_deg);
  s.end_deg = j.value("end_deg", s.end_deg);
  s.step_deg = j.value("step_deg", s.step_deg);
}

inline json sweep_to_json(const SweepSpec& s) {
  return {{"start_deg", s.start_deg}, {"end_deg", s.end_deg}, {"step_deg", s.step_deg}};
}

}  // namespace pipeline_detail

inline json pipeline_config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  json fingers = json::array();
  for (const auto& f : c.dims.fingers)
    fingers.push_back({{"metacarpal_mm", f.metacarpal_mm},
                       {"proximal_mm", f.proximal_mm},
                       {"intermediate_mm", f.intermediate_mm},
                       {"distal_mm", f.distal_mm}});
  j["hand"] = {{"fingers", fingers},
               {"palm_width_mm", c.dims.palm_width_mm},
               {"forearm_length_mm", c.dims.forearm_length_mm},
               {"thumb_split_ratio", c.dims.thumb_split_ratio}};
  j["trajectory"] = {{"frame_dt_us", c.trajectory.frame_dt_us},
                     {"static_frames", c.trajectory.static_frames},
                     {"hand_position_mm",
                      {c.trajectory.hand_position.x(), c.trajectory.hand_position.y(),
                       c.trajectory.hand_position.z()}},
                     {"index_sweep", pipeline_detail::sweep_to_json(c.trajectory.index_sweep)},
                     {"thumb_sweep", pipeline_detail::sweep_to_json(c.trajectory.thumb_sweep)},
                     {"wrist_sweep", pipeline_detail::sweep_to_json(c.trajectory.wrist_sweep)},
                     {"pinch_steps", c.trajectory.pinch_steps}};
  j["monte_carlo"] = {{"samples_per_frame", c.mc_samples_per_frame},
                      {"position_jitter_mm", c.perturbation.position_jitter_mm},
                      {"angle_jitter_deg", c.perturbation.angle_jitter_deg}};
  j["sensor_model"] = {{"fov_horizontal_deg", c.sensor_model.fov_horizontal_deg},
                       {"fov_vertical_deg", c.sensor_model.fov_vertical_deg},
                       {"fov_range_mm", c.sensor_model.fov_range_mm},
                       {"axis_cut_mm", c.sensor_model.axis_cut_mm},
                       {"internal_model_sigma_mm", c.sensor_model.internal_model_sigma_mm},
                       {"internal_model_bias_mm", c.sensor_model.internal_model_bias_mm},
                       {"direct_sigma_mm", c.sensor_model.direct_sigma_mm},
                       {"rate_min_hz", c.sensor_model.rate_min_hz},
                       {"rate_max_hz", c.sensor_model.rate_max_hz},
                       {"elbow_bias_mm", c.sensor_model.elbow_bias_mm},
                       {"elbow_bias_sensor_id", c.sensor_model.elbow_bias_sensor_id},
                       {"seed", c.sensor_model.seed}};
  j["swarm"] = {{"particles", c.swarm.particles},
                {"iterations", c.swarm.iterations},
                {"inertia", c.swarm.inertia},
                {"cognitive", c.swarm.cognitive},
                {"social", c.swarm.social},
                {"seed", c.swarm.seed},
                {"threads", c.swarm.threads},
                {"metric_form",
                 c.swarm.metric_form == MetricForm::Lexicographic ? "lexicographic" : "literal"},
                {"bounds",
                 {{"x_min", c.swarm.bounds.x_min},
                  {"x_max", c.swarm.bounds.x_max},
                  {"z_min", c.swarm.bounds.z_min},
                  {"z_max", c.swarm.bounds.z_max},
                  {"phi_min", c.swarm.bounds.phi_min},
                  {"phi_max", c.swarm.bounds.phi_max},
                  {"theta_min", c.swarm.bounds.theta_min},
                  {"theta_max", c.swarm.bounds.theta_max},
                  {"clearance_mm", c.swarm.bounds.clearance_mm}}}};
  j["visibility"] = {{"fov_scope", c.swarm.visibility.fov_scope == FovScope::AllMarkers
                                       ? "all"
                                       : "fingers-only"},
                     {"first_occlusion_marker", c.swarm.visibility.first_occlusion_marker},
                     {"cylinder_radius_mm", c.swarm.visibility.cylinder_radius_mm}};
  j["fov_optimization"] = pipeline_detail::fov_to_json(c.fov_optimization);
  j["fov_sensing"] = pipeline_detail::fov_to_json(c.fov_sensing);
  j["kalman"] = {{"process_noise", c.kalman.process_noise},
                 {"measurement_noise_mm2", c.kalman.measurement_noise_mm2},
                 {"initial_variance_mm2", c.kalman.initial_variance_mm2}};
  j["fusion"] = {{"resample_rate_hz", c.resample_rate_hz}, {"gap_limit_us", c.gap_limit_us}};
  j["layout"] = c.layout;
  return j;
}

inline PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  c.seed = j.value("seed", c.seed);
  c.swarm.seed = c.seed;
  c.sensor_model.seed = c.seed;
  if (j.contains("hand")) {
    const auto& h = j["hand"];
    if (h.contains("fingers")) {
      const auto& fingers = h["fingers"];
      if (fingers.size() != kFingerCount)
        throw std::invalid_argument("hand.fingers must list five fingers");
      for (int f = 0; f < kFingerCount; ++f) {
        auto& d = c.dims.fingers[f];
        d.metacarpal_mm = fingers[f].value("metacarpal_mm", d.metacarpal_mm);
        d.proximal_mm = fingers[f].value("proximal_mm", d.proximal_mm);
        d.intermediate_mm = fingers[f].value("intermediate_mm", d.intermediate_mm);
        d.distal_mm = fingers[f].value("distal_mm", d.distal_mm);
      }
    }
    c.dims.palm_width_mm = h.value("palm_width_mm", c.dims.palm_width_mm);
    c.dims.forearm_length_mm = h.value("forearm_length_mm", c.dims.forearm_length_mm);
    c.dims.thumb_split_ratio = h.value("thumb_split_ratio", c.dims.thumb_split_ratio);
  }
  if (j.contains("trajectory")) {
    const auto& t = j["trajectory"];
    c.trajectory.frame_dt_us = t.value("frame_dt_us", c.trajectory.frame_dt_us);
    c.trajectory.static_frames = t.value("static_frames", c.trajectory.static_frames);
    if (t.contains("hand_position_mm")) {
      const auto& p = t["hand_position_mm"];
      c.trajectory.hand_position = Vec3{p.at(0).get<double>(), p.at(1).get<double>(),
                                        p.at(2).get<double>()};
    }
    if (t.contains("index_sweep")) pipeline_detail::read_sweep(t["index_sweep"], c.trajectory.index_sweep);
    if (t.contains("thumb_sweep")) pipeline_detail::read_sweep(t["thumb_sweep"], c.trajectory.thumb_sweep);
    if (t.contains("wrist_sweep")) pipeline_detail::read_sweep(t["wrist_sweep"], c.trajectory.wrist_sweep);
    c.trajectory.pinch_steps = t.value("pinch_steps", c.trajectory.pinch_steps);
  }
  if (j.contains("monte_carlo")) {
    const auto& m = j["monte_carlo"];
    c.mc_samples_per_frame = m.value("samples_per_frame", c.mc_samples_per_frame);
    c.perturbation.position_jitter_mm = m.value("position_jitter_mm", c.perturbation.position_jitter_mm);
    c.perturbation.angle_jitter_deg = m.value("angle_jitter_deg", c.perturbation.angle_jitter_deg);
  }
  if (j.contains("sensor_model")) {
    const auto& s = j["sensor_model"];
    auto& sm = c.sensor_model;
    sm.fov_horizontal_deg = s.value("fov_horizontal_deg", sm.fov_horizontal_deg);
    sm.fov_vertical_deg = s.value("fov_vertical_deg", sm.fov_vertical_deg);
    sm.fov_range_mm = s.value("fov_range_mm", sm.fov_range_mm);
    sm.axis_cut_mm = s.value("axis_cut_mm", sm.axis_cut_mm);
    sm.internal_model_sigma_mm = s.value("internal_model_sigma_mm", sm.internal_model_sigma_mm);
    sm.internal_model_bias_mm = s.value("internal_model_bias_mm", sm.internal_model_bias_mm);
    sm.direct_sigma_mm = s.value("direct_sigma_mm", sm.direct_sigma_mm);
    sm.rate_min_hz = s.value("rate_min_hz", sm.rate_min_hz);
    sm.rate_max_hz = s.value("rate_max_hz", sm.rate_max_hz);
    sm.elbow_bias_mm = s.value("elbow_bias_mm", sm.elbow_bias_mm);
    sm.elbow_bias_sensor_id = s.value("elbow_bias_sensor_id", sm.elbow_bias_sensor_id);
    sm.seed = s.value("seed", sm.seed);
  }
  if (j.contains("swarm")) {
    const auto& s = j["swarm"];
    auto& sw = c.swarm;
    sw.particles = s.value("particles", sw.particles);
    sw.iterations = s.value("iterations", sw.iterations);
    sw.inertia = s.value("inertia", sw.inertia);
    sw.cognitive = s.value("cognitive", sw.cognitive);
    sw.social = s.value("social", sw.social);
    sw.seed = s.value("seed", sw.seed);
    sw.threads = s.value("threads", sw.threads);
    std::string form = s.value("metric_form", std::string("lexicographic"));
    if (form == "lexicographic") {
      sw.metric_form = MetricForm::Lexicographic;
    } else if (form == "literal") {
      sw.metric_form = MetricForm::Literal;
    } else {
      throw std::invalid_argument("swarm.metric_form must be lexicographic or literal");
    }
    if (s.contains("bounds")) {
      const auto& b = s["bounds"];
      auto& bo = sw.bounds;
      bo.x_min = b.value("x_min", bo.x_min);
      bo.x_max = b.value("x_max", bo.x_max);
      bo.z_min = b.value("z_min", bo.z_min);
      bo.z_max = b.value("z_max", bo.z_max);
      bo.phi_min = b.value("phi_min", bo.phi_min);
      bo.phi_max = b.value("phi_max", bo.phi_max);
      bo.theta_min = b.value("theta_min", bo.theta_min);
      bo.theta_max = b.value("theta_max", bo.theta_max);
      bo.clearance_mm = b.value("clearance_mm", bo.clearance_mm);
    }
  }
  if (j.contains("visibility")) {
    const auto& v = j["visibility"];
    std::string scope = v.value("fov_scope", std::string("all"));
    if (scope == "all") {
      c.swarm.visibility.fov_scope = FovScope::AllMarkers;
    } else if (scope == "fingers-only") {
      c.swarm.visibility.fov_scope = FovScope::FingersOnly;
    } else {
      throw std::invalid_argument("visibility.fov_scope must be all or fingers-only");
    }
    c.swarm.visibility.first_occlusion_marker =
        v.value("first_occlusion_marker", c.swarm.visibility.first_occlusion_marker);
    c.swarm.visibility.cylinder_radius_mm =
        v.value("cylinder_radius_mm", c.swarm.visibility.cylinder_radius_mm);
    c.sensor_model.visibility = c.swarm.visibility;
  }
  if (j.contains("fov_optimization")) pipeline_detail::read_fov(j["fov_optimization"], c.fov_optimization);
  if (j.contains("fov_sensing")) pipeline_detail::read_fov(j["fov_sensing"], c.fov_sensing);
  if (j.contains("kalman")) {
    const auto& k = j["kalman"];
    c.kalman.process_noise = k.value("process_noise", c.kalman.process_noise);
    c.kalman.measurement_noise_mm2 = k.value("measurement_noise_mm2", c.kalman.measurement_noise_mm2);
    c.kalman.initial_variance_mm2 = k.value("initial_variance_mm2", c.kalman.initial_variance_mm2);
    if (k.contains("per_sensor_noise_mm2"))
      for (const auto& [key, value] : k["per_sensor_noise_mm2"].items())
        c.kalman.per_sensor_noise_mm2[std::stoi(key)] = value.get<double>();
  }
  if (j.contains("fusion")) {
    c.resample_rate_hz = j["fusion"].value("resample_rate_hz", c.resample_rate_hz);
    c.gap_limit_us = j["fusion"].value("gap_limit_us", c.gap_limit_us);
  }
  c.layout = j.value("layout", c.layout);
  // The sensing FoV drives the simulator unless sensor_model overrode it.
  const json sm = j.contains("sensor_model") ? j["sensor_model"] : json::object();
  if (!sm.contains("fov_horizontal_deg")) c.sensor_model.fov_horizontal_deg = c.fov_sensing.horizontal_deg;
  if (!sm.contains("fov_vertical_deg")) c.sensor_model.fov_vertical_deg = c.fov_sensing.vertical_deg;
  if (!sm.contains("fov_range_mm")) c.sensor_model.fov_range_mm = c.fov_sensing.range_mm;
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  auto f = io_detail::open_in(path);
  json j = json::parse(f);
  return pipeline_config_from_json(j);
}

inline ArtifactMeta artifact_meta(const PipelineConfig& c) {
  return ArtifactMeta{fnv1a64(pipeline_config_to_json(c).dump()), c.seed};
}

/// Layout selection: the two fixtures by name, otherwise a layout JSON path.
inline PlacementVector resolve_layout(const std::string& selector) {
  if (selector == "initial") return initial_layout();
  if (selector == "optimized-table2") return optimized_table_layout();
  return read_layout_json(selector);
}

inline std::vector<MeasuredStream> simulate_all(const PoseDataset& dataset,
                                                const PlacementVector& layout,
                                                const SensorModelConfig& config) {
  std::vector<MeasuredStream> streams;
  streams.reserve(kSensorCount);
  for (const auto& sensor : layout.sensors) streams.push_back(simulate_sensor(dataset, sensor, config));
  return streams;
}

/// Resample-realign-fuse with the common epoch at the earliest hand
/// detection across the four streams.
inline FusedStream fuse_streams(const std::vector<MeasuredStream>& streams,
                                const PlacementVector& layout, const PipelineConfig& config) {
  std::optional<std::int64_t> epoch;
  for (const auto& s : streams) {
    auto d = first_detection_us(s);
    if (d && (!epoch || *d < *epoch)) epoch = d;
  }
  if (!epoch) throw std::runtime_error("no sensor ever detected the hand");

  std::vector<ResampledStream> resampled;
  std::vector<RealignmentTransform> transforms;
  for (const auto& s : streams) {
    resampled.push_back(resample_bspline(s, config.resample_rate_hz, epoch, config.gap_limit_us));
    const SensorPlacement* placement = nullptr;
    for (const auto& p : layout.sensors)
      if (p.id == s.sensor_id) placement = &p;
    if (!placement) throw std::runtime_error("stream sensor id not present in layout");
    transforms.push_back(
        realignment_from_placement(*placement, config.sensor_model.axis_cut_mm));
  }
  return kalman_fuse(std::move(resampled), transforms, config.kalman);
}

/// Validation report: finger lengths, joint RoM, agreement against ground
/// truth, and optional visibility summaries.
inline json build_report(const FusedStream& fused, const PoseDataset& truth,
                         const std::vector<AnnotationRow>& annotations, const ArtifactMeta& meta,
                         const std::string& configuration = "", const std::string& motion = "") {
  // Ground truth evaluated on the fused tick grid.
  std::vector<MarkerFrame> truth_frames;
  truth_frames.reserve(fused.frames.size());
  for (const auto& f : fused.frames)
    truth_frames.push_back(detail::interpolate_truth(truth, f.timestamp_us));

  json report;
  report["meta"] = {{"config_hash", meta.config_hash}, {"seed", meta.seed}};
  if (!configuration.empty() || !motion.empty())
    report["label"] = {{"configuration", configuration}, {"motion", motion}};

  auto fused_len = compute_finger_length(fused.frames);
  auto truth_len = compute_finger_length(truth_frames);
  json lengths;
  for (int f = 0; f < kFingerCount; ++f) {
    const char* name = finger_name(static_cast<Finger>(f));
    lengths["fused_mm"][name] = fused_len[f];
    lengths["truth_mm"][name] = truth_len[f];
    lengths["diff_mm"][name] = fused_len[f] - truth_len[f];
  }
  double mean_abs = 0.0;
  for (int f = 0; f < kFingerCount; ++f) mean_abs += std::abs(fused_len[f] - truth_len[f]);
  lengths["mean_abs_diff_mm"] = mean_abs / kFingerCount;
  report["finger_length"] = lengths;

  json joints;
  auto quads = default_joint_quadruples();
  for (JointId joint : all_joints()) {
    JointAngleSeries sf = joint_angle_series(fused.frames, joint, quads.at(joint));
    JointAngleSeries st = joint_angle_series(truth_frames, joint, quads.at(joint));
    json entry;
    try {
      entry["rom_fused_deg"] = compute_rom(sf);
      entry["rom_truth_deg"] = compute_rom(st);
    } catch (const EmptyResultError&) {
      entry["rom_fused_deg"] = nullptr;
      entry["rom_truth_deg"] = nullptr;
    }
    try {
      AgreementSummary a = agreement(sf.angle_deg, st.angle_deg);
      entry["agreement_deg"] = {{"mean_diff", a.mean_diff},
                                {"stddev", a.stddev},
                                {"count", a.count},
                                {"populated_fraction", a.populated_fraction}};
    } catch (const EmptyResultError&) {
      entry["agreement_deg"] = nullptr;
    }
    joints[to_string(joint)] = entry;
  }
  report["joint_angles"] = joints;

  if (!annotations.empty()) {
    std::map<int, std::vector<int>> by_sensor;
    for (const auto& row : annotations) by_sensor[row.sensor_id].push_back(row.vis_rate);
    json vis;
    for (const auto& [id, rates] : by_sensor) {
      MeanStd ms = summarize_visibility(rates);
      vis[std::to_string(id)] = {{"mean", ms.mean}, {"stddev", ms.stddev}, {"count", ms.count}};
    }
    report["visibility_rate"] = vis;
  }

  // Fraction of fused ticks that carry data (not prediction-only).
  int populated = 0;
  for (bool p : fused.predicted_only) populated += p ? 0 : 1;
  report["populated_tick_fraction"] =
      fused.frames.empty() ? 0.0 : static_cast<double>(populated) / fused.frames.size();
  return report;
}

}  // namespace handfield
