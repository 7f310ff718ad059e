#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitreloc/trajectory.hpp"

namespace splitreloc {

// Horizontal-plane Gaussian position noise with an optional heavy-tail
// mixture and an optional small random-axis orientation perturbation.
// orientation_sigma_deg = 0 models a GPS-like stream (position only).
struct NoiseModel {
  double sigma_m = 0.0;
  double outlier_prob = 0.0;
  double outlier_scale = 1.0;
  double orientation_sigma_deg = 0.0;
  uint64_t seed = 0;
};

// Circular constant-speed route: position (R cos wt, R sin wt, 0) with
// w = speed/R, heading tangent to the circle, samples at k/fps < duration.
Trajectory gen_trajectory(double radius_m, double speed_mps, double fps,
                          double duration_s);

// Applies the noise model per sample, drawing from a splitmix64 stream
// keyed by (seed, sample_index). Draw order per sample: outlier uniform,
// x gaussian, y gaussian, then (when orientation_sigma_deg > 0) three
// gaussians for the axis and one for the angle.
Trajectory corrupt(const Trajectory& traj, const NoiseModel& model);

// Element-wise fuse_pair over two aligned trajectories (equal length,
// timestamps matching to 1e-9).
Trajectory fuse_streams(const Trajectory& a, const Trajectory& b);

struct StreamSummary {
  double mean = 0.0;
  double median = 0.0;
  double variance = 0.0;  // population variance
};

struct EvalResult {
  std::vector<double> losses;  // per-frame translation error, meters
  StreamSummary summary;
};

EvalResult evaluate(const Trajectory& est, const Trajectory& gt);

struct FusionStudyConfig {
  double radius_m = 100.0;
  double speed_mps = 10.0;
  double fps = 20.0;
  double duration_s = 500.0;
  NoiseModel gps{7.0, 0.0, 1.0, 0.0, 101};
  NoiseModel dnn{5.0, 0.05, 10.0, 5.0, 202};
  // GPS carries no orientation: the fused stream keeps the DNN orientation
  // and only the translations are averaged.
  bool gps_orientation_absent = true;
  double hist_bin_m = 0.5;
};

struct FusionReport {
  std::vector<double> gps_loss, dnn_loss, fused_loss;
  StreamSummary gps, dnn, fused;
  struct HistRow {
    double lo = 0.0, hi = 0.0;
    uint64_t gps = 0, dnn = 0, fused = 0;
  };
  std::vector<HistRow> hist;
};

// Truth -> two corrupted streams -> fused stream -> per-stream losses,
// summaries and a shared-bin loss histogram.
FusionReport run_fusion_study(const FusionStudyConfig& config);

FusionStudyConfig load_fusion_config_json(const std::string& path);

// losses.csv (frame,gps,dnn,fused), summary.csv (stream,mean,median,
// variance), hist.csv (bin_lo,bin_hi,gps,dnn,fused).
void save_fusion_report(const FusionReport& report, const std::string& out_prefix);

}  // namespace splitreloc
