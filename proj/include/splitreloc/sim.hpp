#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitreloc/trajectory.hpp"

namespace splitreloc {

// Frames arriving while an inference is in flight are discarded
// (drop_if_busy) or the source pauses until the next capture tick after the
// inference completes (block).
enum class DropPolicy { drop_if_busy, block };

enum class ServiceKind { constant, lognormal };

// Per-frame inference time model. For lognormal, mean_s is the distribution
// mean and sigma the log-space shape; draws come from the documented
// splitmix64 + Box-Muller stream, one sample per accepted frame.
struct ServiceModel {
  ServiceKind kind = ServiceKind::constant;
  double mean_s = 1.0;
  double sigma = 0.0;
  uint64_t seed = 0;
};

struct SimScenario {
  double fps = 30.0;
  double duration_s = 10.0;
  DropPolicy policy = DropPolicy::drop_if_busy;
  ServiceModel service;
  // Per-frame ground truth at the capture fps; enables coverage reporting.
  std::optional<Trajectory> route;
};

struct SimReport {
  uint64_t frames_captured = 0;
  uint64_t poses_produced = 0;
  uint64_t frames_dropped = 0;
  std::vector<double> pose_timestamps;  // completion instants, seconds
  double mean_service_s = 0.0;
  double median_service_s = 0.0;
  std::optional<double> covered_distance_m;
};

// Deterministic single-server pipeline: arrivals on the k/fps grid for
// k/fps < duration. An arrival exactly at a completion instant is accepted.
SimReport simulate_realtime(const SimScenario& scenario);

struct ReplayReport {
  uint64_t frames_processed = 0;
  double covered_distance_m = 0.0;
  double per_frame_s = 0.0;
  double wall_time_s = 0.0;
};

// Strictly sequential replay of a recorded route: processed =
// min(frame_count, max(1, floor(wall_time / per_frame))); coverage is the
// polyline length through the last processed frame.
ReplayReport simulate_replay(uint64_t frame_count, double per_frame_s,
                             double wall_time_s, const Trajectory& route);

// Chordal polyline length over the first n_processed samples.
double covered_distance(const Trajectory& route, size_t n_processed);

// Scenario file schema (JSON):
//   {"mode": "realtime", "fps": 30, "duration_s": 10, "policy": "drop",
//    "service": {"kind": "constant", "mean_s": 1.0, "sigma": 0, "seed": 1},
//    "route_csv": "optional/route.csv"}
//   {"mode": "replay", "frame_count": N, "wall_time_s": T,
//    "route_csv": "route.csv",
//    "runs": [{"name": "local", "per_frame_s": 1.0}, ...]}
// route_csv paths resolve relative to the scenario file.
struct ReplayRunSpec {
  std::string name;
  double per_frame_s = 0.0;
};

struct SimConfig {
  enum class Mode { realtime, replay };
  Mode mode = Mode::realtime;
  SimScenario scenario;       // realtime
  uint64_t frame_count = 0;   // replay
  double wall_time_s = 0.0;   // replay
  std::vector<ReplayRunSpec> runs;
  std::string route_csv;  // resolved path; may be empty in realtime mode
};

SimConfig load_sim_config_json(const std::string& path);

}  // namespace splitreloc
