#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handfield/fusion.hpp"
#include "handfield/placement_opt.hpp"

namespace handfield {

using json = nlohmann::json;

/// Provenance stamped into every artifact: the master seed and a hash of the
/// effective config.
struct ArtifactMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace io_detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string meta_comment(const ArtifactMeta& meta) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "# config_hash=%016llx seed=%llu",
                static_cast<unsigned long long>(meta.config_hash),
                static_cast<unsigned long long>(meta.seed));
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& s) {
  if (s == "NaN" || s == "nan" || s == "NAN") return kMissing;
  return std::stod(s);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return f;
}

inline void write_marker_header(std::ostream& os, const std::string& prefix_cols,
                                const std::string& suffix_cols = "") {
  os << prefix_cols;
  for (int i = 0; i < kMarkerCount; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), ",m%02d", i);
    os << buf << "_x" << buf << "_y" << buf << "_z";
  }
  os << suffix_cols << "\n";
}

inline void write_marker_row(std::ostream& os, const MarkerFrame& f) {
  for (int i = 0; i < kMarkerCount; ++i)
    for (int a = 0; a < 3; ++a) os << ',' << format_double(f.markers[i][a]);
}

}  // namespace io_detail

// --- pose dataset CSV -------------------------------------------------------

inline void write_pose_csv(const std::string& path, const PoseDataset& dataset,
                           const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << io_detail::meta_comment(meta) << "\n";
  io_detail::write_marker_header(f, "timestamp_us");
  for (const auto& frame : dataset.frames) {
    f << frame.timestamp_us;
    io_detail::write_marker_row(f, frame);
    f << "\n";
  }
}

inline PoseDataset read_pose_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  PoseDataset ds;
  ds.name = path;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto cols = io_detail::split_csv(line);
    if (cols.size() != 1 + kMarkerCount * 3)
      throw std::runtime_error(path + ": bad column count in pose CSV");
    MarkerFrame frame;
    frame.timestamp_us = std::stoll(cols[0]);
    for (int i = 0; i < kMarkerCount; ++i)
      for (int a = 0; a < 3; ++a)
        frame.markers[i][a] = io_detail::parse_double(cols[1 + 3 * i + a]);
    ds.frames.push_back(frame);
  }
  if (ds.frames.empty()) throw std::runtime_error(path + ": no frames");
  return ds;
}

// --- measured stream CSV ----------------------------------------------------

inline void write_stream_csv(const std::string& path, const MeasuredStream& stream,
                             const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << io_detail::meta_comment(meta) << "\n";
  io_detail::write_marker_header(f, "timestamp_us,sensor_id");
  for (const auto& frame : stream.frames) {
    f << frame.timestamp_us << ',' << stream.sensor_id;
    io_detail::write_marker_row(f, frame);
    f << "\n";
  }
}

inline MeasuredStream read_stream_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  MeasuredStream stream;
  std::string line;
  bool header_seen = false;
  bool id_set = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto cols = io_detail::split_csv(line);
    if (cols.size() != 2 + kMarkerCount * 3)
      throw std::runtime_error(path + ": bad column count in stream CSV");
    int id = std::stoi(cols[1]);
    if (!id_set) {
      stream.sensor_id = id;
      id_set = true;
    } else if (id != stream.sensor_id) {
      throw std::runtime_error(path + ": mixed sensor ids in one stream file");
    }
    MarkerFrame frame;
    frame.timestamp_us = std::stoll(cols[0]);
    for (int i = 0; i < kMarkerCount; ++i)
      for (int a = 0; a < 3; ++a)
        frame.markers[i][a] = io_detail::parse_double(cols[2 + 3 * i + a]);
    stream.frames.push_back(frame);
  }
  if (stream.frames.empty()) throw std::runtime_error(path + ": no frames");
  return stream;
}

// --- visibility annotations / report ---------------------------------------

inline void write_annotations_csv(const std::string& path,
                                  std::span<const MeasuredStream> streams,
                                  const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << io_detail::meta_comment(meta) << "\n";
  f << "frame_idx,sensor_id,vis_rate\n";
  for (const auto& s : streams)
    for (std::size_t i = 0; i < s.annotations.size(); ++i)
      f << i << ',' << s.sensor_id << ',' << s.annotations[i].vis_rate << "\n";
}

struct AnnotationRow {
  int frame_idx;
  int sensor_id;
  int vis_rate;
};

inline std::vector<AnnotationRow> read_annotations_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  std::vector<AnnotationRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto cols = io_detail::split_csv(line);
    if (cols.size() != 3) throw std::runtime_error(path + ": bad annotation row");
    rows.push_back({std::stoi(cols[0]), std::stoi(cols[1]), std::stoi(cols[2])});
  }
  return rows;
}

inline void write_visibility_csv(const std::string& path, const VisibilityReport& report,
                                 const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << io_detail::meta_comment(meta) << "\n";
  f << "frame_idx,sensor_id,finger,visible,cause,F\n";
  for (const auto& r : report.records) {
    f << r.frame_idx << ',' << r.sensor_id << ',' << finger_name(r.finger) << ','
      << (r.visible ? 1 : 0) << ',' << to_string(r.cause) << ',' << r.frame_score << "\n";
  }
}

// --- fused stream CSV -------------------------------------------------------

inline void write_fused_csv(const std::string& path, const FusedStream& fused,
                            const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << io_detail::meta_comment(meta) << "\n";
  io_detail::write_marker_header(f, "timestamp_us", ",predicted_only");
  for (std::size_t k = 0; k < fused.frames.size(); ++k) {
    f << fused.frames[k].timestamp_us;
    io_detail::write_marker_row(f, fused.frames[k]);
    f << ',' << (fused.predicted_only[k] ? 1 : 0) << "\n";
  }
}

inline FusedStream read_fused_csv(const std::string& path) {
  auto f = io_detail::open_in(path);
  FusedStream fused;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto cols = io_detail::split_csv(line);
    if (cols.size() != 2 + kMarkerCount * 3)
      throw std::runtime_error(path + ": bad column count in fused CSV");
    MarkerFrame frame;
    frame.timestamp_us = std::stoll(cols[0]);
    for (int i = 0; i < kMarkerCount; ++i)
      for (int a = 0; a < 3; ++a)
        frame.markers[i][a] = io_detail::parse_double(cols[1 + 3 * i + a]);
    fused.frames.push_back(frame);
    fused.predicted_only.push_back(cols.back() == "1");
  }
  if (fused.frames.size() >= 2) {
    fused.epoch_us = fused.frames.front().timestamp_us;
    fused.tick_us = fused.frames[1].timestamp_us - fused.frames[0].timestamp_us;
  }
  return fused;
}

// --- layout JSON ------------------------------------------------------------

inline json layout_to_json(const PlacementVector& layout,
                           const std::optional<MetricValue>& metric, const ArtifactMeta& meta) {
  json sensors = json::array();
  for (const auto& s : layout.sensors) {
    sensors.push_back({{"id", s.id},
                       {"x_mm", s.x_mm},
                       {"z_mm", s.z_mm},
                       {"phi_deg", s.phi_deg},
                       {"theta_deg", s.theta_deg}});
  }
  json j{{"sensors", sensors}};
  if (metric) {
    j["score"] = metric->score;
    j["tier_counts"] = metric->tier_counts;
  }
  j["config_hash"] = meta.config_hash;
  j["seed"] = meta.seed;
  return j;
}

inline void write_layout_json(const std::string& path, const PlacementVector& layout,
                              const std::optional<MetricValue>& metric, const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << layout_to_json(layout, metric, meta).dump(2) << "\n";
}

inline PlacementVector layout_from_json(const json& j) {
  PlacementVector layout;
  const auto& sensors = j.at("sensors");
  if (sensors.size() != kSensorCount)
    throw std::runtime_error("layout must contain exactly four sensors");
  for (int i = 0; i < kSensorCount; ++i) {
    const auto& s = sensors[i];
    layout.sensors[i] = SensorPlacement{s.at("id").get<int>(), s.at("x_mm").get<double>(),
                                        s.at("z_mm").get<double>(), s.at("phi_deg").get<double>(),
                                        s.at("theta_deg").get<double>()};
  }
  return layout;
}

inline PlacementVector read_layout_json(const std::string& path) {
  auto f = io_detail::open_in(path);
  json j = json::parse(f);
  return layout_from_json(j);
}

// --- convergence trace ------------------------------------------------------

inline void write_trace_csv(const std::string& path, std::span<const double> trace,
                            const ArtifactMeta& meta) {
  auto f = io_detail::open_out(path);
  f << io_detail::meta_comment(meta) << "\n";
  f << "iteration,best_score\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    f << i << ',' << io_detail::format_double(trace[i]) << "\n";
}

}  // namespace handfield
