// End-to-end exercise of the handfield CLI: generate -> optimize (scoring and
// a small swarm) -> simulate -> fuse -> evaluate, plus exit-code checks.
// The binary path arrives in the HANDFIELD_BIN environment variable.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
  if (!ok) ++failures;
}

int run(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const char* bin_env = std::getenv("HANDFIELD_BIN");
  if (!bin_env) {
    std::fprintf(stderr, "HANDFIELD_BIN not set\n");
    return 1;
  }
  std::string bin = bin_env;
  fs::path dir = fs::temp_directory_path() / "handfield_cli_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string d = dir.string();

  // Small config so the whole pipeline stays fast.
  std::ofstream(dir / "config.json") << R"({
    "seed": 5,
    "trajectory": {"static_frames": 30},
    "monte_carlo": {"samples_per_frame": 2},
    "swarm": {"particles": 8, "iterations": 6, "threads": 2},
    "visibility": {"fov_scope": "fingers-only"}
  })";
  std::string cfg = " --config " + d + "/config.json";

  check(run(bin + cfg + " generate --out-dir " + d + "/out > /dev/null") == 0, "generate");
  check(fs::exists(dir / "out/monte_carlo.csv"), "monte carlo dataset written");
  check(fs::exists(dir / "out/trajectory_static_horizontal.csv"), "trajectory files written");
  check(fs::exists(dir / "out/provenance.json"), "provenance written");

  // Deterministic rerun produces identical bytes.
  check(run(bin + cfg + " generate --out-dir " + d + "/out2 > /dev/null") == 0, "generate rerun");
  check(slurp(dir / "out/monte_carlo.csv") == slurp(dir / "out2/monte_carlo.csv"),
        "generate is byte-identical for a fixed seed");

  check(run(bin + cfg + " generate --out-dir " + d + "/bad --samples 0 > /dev/null 2>&1") == 2,
        "--samples 0 is a usage error");

  std::string mc = d + "/out/monte_carlo.csv";
  check(run(bin + cfg + " optimize --dataset " + mc + " --score-layout initial > " + d +
            "/score_initial.json") == 0,
        "score the initial layout");
  check(run(bin + cfg + " optimize --dataset " + mc + " --score-layout optimized-table2 > " + d +
            "/score_tbl2.json") == 0,
        "score the published layout");
  check(run(bin + cfg + " optimize --dataset " + mc + " --out " + d + "/layout.json --trace " + d +
            "/trace.csv > /dev/null") == 0,
        "swarm optimization");
  check(fs::exists(dir / "layout.json") && fs::exists(dir / "trace.csv"),
        "layout and trace written");

  check(run(bin + cfg + " raytrace --dataset " + mc + " --layout " + d +
            "/layout.json --out " + d + "/vis.csv > /dev/null") == 0,
        "raytrace report");
  check(fs::exists(dir / "vis.csv"), "visibility CSV written");

  std::string truth = d + "/out/trajectory_index_flexion_horizontal.csv";
  check(run(bin + cfg + " simulate --dataset " + truth + " --layout initial --out-dir " + d +
            "/sim > /dev/null") == 0,
        "simulate");
  bool sim_files = fs::exists(dir / "sim/s1.csv") && fs::exists(dir / "sim/s4.csv") &&
                   fs::exists(dir / "sim/annotations.csv");
  check(sim_files, "per-sensor streams and annotations written");

  check(run(bin + cfg + " fuse --streams " + d + "/sim/s1.csv " + d + "/sim/s2.csv " + d +
            "/sim/s3.csv " + d + "/sim/s4.csv --layout initial --out " + d +
            "/fused.csv > /dev/null") == 0,
        "fuse");
  check(fs::exists(dir / "fused.csv"), "fused CSV written");

  check(run(bin + cfg + " evaluate --fused " + d + "/fused.csv --truth " + truth +
            " --annotations " + d + "/sim/annotations.csv --out " + d +
            "/report.json --configuration initial --motion index_flexion > /dev/null") == 0,
        "evaluate");
  check(fs::exists(dir / "report.json"), "report written");
  std::string report = slurp(dir / "report.json");
  check(report.find("finger_length") != std::string::npos &&
            report.find("visibility_rate") != std::string::npos,
        "report carries lengths and visibility summaries");

  check(run(bin + cfg + " evaluate --fused " + d + "/missing.csv --truth " + truth +
            " --out /dev/null > /dev/null 2>&1") == 2,
        "missing input file is a usage error");
  check(run(bin + " --config " + d + "/nonexistent.json generate > /dev/null 2>&1") == 2,
        "missing config file is a usage error");
  std::ofstream(dir / "broken.json") << "{ not json";
  check(run(bin + " --config " + d + "/broken.json generate > /dev/null 2>&1") == 2,
        "malformed config is a usage error");
  check(run(bin + " frobnicate > /dev/null 2>&1") == 2, "unknown subcommand is a usage error");

  if (failures == 0) fs::remove_all(dir);
  std::printf("%s (%d failures)\n", failures == 0 ? "CLI end-to-end passed" : "CLI end-to-end FAILED",
              failures);
  return failures == 0 ? 0 : 1;
}
