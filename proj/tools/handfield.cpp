// handfield: sensor-placement optimization and multi-sensor fusion pipeline
// for hand tracking. Subcommands: generate, optimize, simulate, fuse,
// raytrace, evaluate.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "handfield/pipeline.hpp"

namespace fs = std::filesystem;
using namespace handfield;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  try {
    return load_pipeline_config(path);
  } catch (const json::exception& e) {
    throw UsageError("malformed config " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError("invalid config " + path + ": " + e.what());
  }
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path);
}

PoseDataset load_dataset(const std::string& path) {
  require_file(path, "dataset");
  return read_pose_csv(path);
}

PlacementVector load_layout(const std::string& selector) {
  if (selector != "initial" && selector != "optimized-table2") require_file(selector, "layout");
  return resolve_layout(selector);
}

int run_generate(const PipelineConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  ArtifactMeta meta = artifact_meta(config);
  auto trajectories = generate_reference_trajectories(config.dims, config.trajectory);
  json provenance;
  provenance["meta"] = {{"config_hash", meta.config_hash}, {"seed", meta.seed}};
  json files = json::array();
  for (const auto& traj : trajectories) {
    std::string path = out_dir + "/trajectory_" + traj.name + ".csv";
    write_pose_csv(path, traj, meta);
    files.push_back({{"name", traj.name}, {"path", path}, {"frames", traj.frames.size()}});
  }
  PoseDataset mc = monte_carlo_expand(trajectories, config.mc_samples_per_frame,
                                      config.perturbation, config.seed, config.dims,
                                      config.trajectory);
  std::string mc_path = out_dir + "/monte_carlo.csv";
  write_pose_csv(mc_path, mc, meta);
  files.push_back({{"name", mc.name}, {"path", mc_path}, {"frames", mc.frames.size()}});
  provenance["files"] = files;
  provenance["samples_per_frame"] = config.mc_samples_per_frame;
  std::ofstream(out_dir + "/provenance.json") << provenance.dump(2) << "\n";
  std::cout << "wrote " << files.size() << " datasets to " << out_dir << " ("
            << mc.frames.size() << " Monte Carlo frames)\n";
  return 0;
}

int run_optimize(const PipelineConfig& config, const std::string& dataset_path,
                 const std::string& out_path, const std::string& trace_path,
                 const std::string& score_layout) {
  PoseDataset dataset = load_dataset(dataset_path);
  FieldOfView fov = config.fov_optimization.build();
  ArtifactMeta meta = artifact_meta(config);

  if (!score_layout.empty()) {
    PlacementVector layout = load_layout(score_layout);
    MetricValue metric = placement_metric(layout, dataset, fov, config.swarm.visibility,
                                          config.swarm.metric_form);
    json j = layout_to_json(layout, metric, meta);
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) write_layout_json(out_path, layout, metric, meta);
    return 0;
  }

  PsoResult result = pso_optimize(dataset, fov, config.swarm);
  write_layout_json(out_path, result.best, result.best_metric, meta);
  if (!trace_path.empty()) write_trace_csv(trace_path, result.trace, meta);
  std::cout << "best score " << result.best_metric.score << " after "
            << config.swarm.iterations << " iterations -> " << out_path << "\n";
  return 0;
}

int run_simulate(const PipelineConfig& config, const std::string& dataset_path,
                 const std::string& layout_sel, const std::string& out_dir) {
  PoseDataset dataset = load_dataset(dataset_path);
  PlacementVector layout = load_layout(layout_sel);
  fs::create_directories(out_dir);
  ArtifactMeta meta = artifact_meta(config);
  auto streams = simulate_all(dataset, layout, config.sensor_model);
  for (const auto& s : streams)
    write_stream_csv(out_dir + "/s" + std::to_string(s.sensor_id) + ".csv", s, meta);
  write_annotations_csv(out_dir + "/annotations.csv", streams, meta);
  std::cout << "wrote " << streams.size() << " sensor streams to " << out_dir << "\n";
  return 0;
}

int run_raytrace(const PipelineConfig& config, const std::string& dataset_path,
                 const std::string& layout_sel, const std::string& fov_kind,
                 const std::string& out_path) {
  PoseDataset dataset = load_dataset(dataset_path);
  PlacementVector layout = load_layout(layout_sel);
  FieldOfView fov;
  if (fov_kind == "optimization") {
    fov = config.fov_optimization.build();
  } else if (fov_kind == "sensing") {
    fov = config.fov_sensing.build();
  } else {
    throw UsageError("--fov must be optimization or sensing");
  }
  VisibilityReport report =
      build_visibility_report(dataset, layout.sensors, fov, config.swarm.visibility);
  write_visibility_csv(out_path, report, artifact_meta(config));
  std::cout << "wrote visibility report (" << report.frame_scores.size() << " frames) to "
            << out_path << "\n";
  return 0;
}

int run_fuse(const PipelineConfig& config, const std::vector<std::string>& stream_paths,
             const std::string& layout_sel, const std::string& out_path) {
  PlacementVector layout = load_layout(layout_sel);
  std::vector<MeasuredStream> streams;
  for (const auto& p : stream_paths) {
    require_file(p, "stream");
    streams.push_back(read_stream_csv(p));
  }
  FusedStream fused = fuse_streams(streams, layout, config);
  write_fused_csv(out_path, fused, artifact_meta(config));
  std::cout << "fused " << streams.size() << " streams into " << fused.frames.size()
            << " ticks -> " << out_path << "\n";
  return 0;
}

int run_evaluate(const PipelineConfig& config, const std::string& fused_path,
                 const std::string& truth_path, const std::string& annotations_path,
                 const std::string& out_path, const std::string& configuration,
                 const std::string& motion) {
  require_file(fused_path, "fused stream");
  FusedStream fused = read_fused_csv(fused_path);
  PoseDataset truth = load_dataset(truth_path);
  std::vector<AnnotationRow> annotations;
  if (!annotations_path.empty()) {
    require_file(annotations_path, "annotations");
    annotations = read_annotations_csv(annotations_path);
  }
  json report =
      build_report(fused, truth, annotations, artifact_meta(config), configuration, motion);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << report.dump(2) << "\n";
  std::cout << "wrote report to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hand-tracking sensor placement optimization and fusion toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.set_version_flag("--version", "handfield 1.0");
  auto* seed_opt = app.add_option("--seed", seed, "override the master seed");

  auto* gen = app.add_subcommand("generate", "generate reference and Monte Carlo pose datasets");
  std::string gen_out = "out";
  int gen_samples = -1;
  gen->add_option("--out-dir", gen_out, "output directory");
  gen->add_option("--samples", gen_samples, "Monte Carlo samples per frame");

  auto* opt = app.add_subcommand("optimize", "optimize sensor placement by PSO");
  std::string opt_dataset, opt_out = "layout.json", opt_trace, opt_score;
  int opt_threads = -1;
  opt->add_option("--dataset", opt_dataset, "pose dataset CSV")->required();
  opt->add_option("--out", opt_out, "layout JSON output");
  opt->add_option("--trace", opt_trace, "convergence trace CSV output");
  opt->add_option("--score-layout", opt_score,
                  "score a fixed layout (initial | optimized-table2 | file) instead of optimizing");
  opt->add_option("--threads", opt_threads, "evaluation threads (0 = hardware)");

  auto* sim = app.add_subcommand("simulate", "run the virtual sensors over a dataset");
  std::string sim_dataset, sim_layout = "initial", sim_out = "out";
  sim->add_option("--dataset", sim_dataset, "ground-truth pose dataset CSV")->required();
  sim->add_option("--layout", sim_layout, "layout (initial | optimized-table2 | file)");
  sim->add_option("--out-dir", sim_out, "output directory");

  auto* ray = app.add_subcommand("raytrace", "emit the per-finger visibility report");
  std::string ray_dataset, ray_layout = "initial", ray_fov = "optimization", ray_out = "visibility.csv";
  ray->add_option("--dataset", ray_dataset, "pose dataset CSV")->required();
  ray->add_option("--layout", ray_layout, "layout (initial | optimized-table2 | file)");
  ray->add_option("--fov", ray_fov, "FoV parameters: optimization | sensing");
  ray->add_option("--out", ray_out, "visibility CSV output");

  auto* fuse = app.add_subcommand("fuse", "resample, realign and Kalman-fuse sensor streams");
  std::vector<std::string> fuse_streams_paths;
  std::string fuse_layout = "initial", fuse_out = "fused.csv";
  fuse->add_option("--streams", fuse_streams_paths, "sensor stream CSVs")->required()->expected(1, 4);
  fuse->add_option("--layout", fuse_layout, "layout (initial | optimized-table2 | file)");
  fuse->add_option("--out", fuse_out, "fused CSV output");

  auto* eval = app.add_subcommand("evaluate", "compare a fused stream against ground truth");
  std::string eval_fused, eval_truth, eval_ann, eval_out = "report.json";
  std::string eval_configuration, eval_motion;
  eval->add_option("--fused", eval_fused, "fused CSV")->required();
  eval->add_option("--truth", eval_truth, "ground-truth pose CSV")->required();
  eval->add_option("--annotations", eval_ann, "visibility annotation CSV");
  eval->add_option("--out", eval_out, "report JSON output");
  eval->add_option("--configuration", eval_configuration, "configuration label for the report");
  eval->add_option("--motion", eval_motion, "motion label for the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  seed_set = seed_opt->count() > 0;

  try {
    PipelineConfig config = load_config(config_path);
    if (seed_set) {
      config.seed = seed;
      config.swarm.seed = seed;
      config.sensor_model.seed = seed;
    }
    if (gen->parsed()) {
      if (gen_samples == 0) throw UsageError("--samples must be >= 1");
      if (gen_samples > 0) config.mc_samples_per_frame = gen_samples;
      return run_generate(config, gen_out);
    }
    if (opt->parsed()) {
      if (opt_threads >= 0) config.swarm.threads = opt_threads;
      return run_optimize(config, opt_dataset, opt_out, opt_trace, opt_score);
    }
    if (sim->parsed()) return run_simulate(config, sim_dataset, sim_layout, sim_out);
    if (ray->parsed()) return run_raytrace(config, ray_dataset, ray_layout, ray_fov, ray_out);
    if (fuse->parsed()) return run_fuse(config, fuse_streams_paths, fuse_layout, fuse_out);
    if (eval->parsed())
      return run_evaluate(config, eval_fused, eval_truth, eval_ann, eval_out, eval_configuration,
                          eval_motion);
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
