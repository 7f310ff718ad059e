#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splitreloc/graph.hpp"

namespace splitreloc {

// Cost model for one client/server/link triple. Rates are seconds per
// GFLOP; bandwidth is uplink bytes per second.
struct CostProfile {
  double c_client_s_per_gflop = 0.0;
  double c_server_s_per_gflop = 0.0;
  double bandwidth_bytes_per_s = 1.0;
  double rtt_overhead_s = 0.0;
  double preprocess_s = 0.0;
  double response_bytes = 56.0;  // fixed response frame size on the wire
};

struct CutMeasurement {
  std::string cut_name;
  double mean_latency_s = 0.0;
  std::optional<double> single_frame_s;
};

struct SplitPlan {
  // (cut, predicted seconds) in graph cut order.
  std::vector<std::pair<std::string, double>> predicted;
  // cuts sorted ascending by predicted latency; ties keep the earlier cut.
  std::vector<std::string> ranking;
  std::string best_cut;
};

// T(cut) = preprocess + c_client*prefix_gflops + rtt + payload/B
//        + c_server*suffix_gflops + response/B
double predict_latency(const LayerGraph& graph, const CostProfile& profile,
                       std::string_view cut_name);

SplitPlan plan(const LayerGraph& graph, const CostProfile& profile);

struct CalibrationResult {
  CostProfile profile;
  // residual (predicted - measured) per mean-latency row, in input order.
  std::vector<double> residuals;
  double rss = 0.0;
  // Spearman rank correlation between predicted and measured mean latencies.
  double spearman = 0.0;
  std::string notes;
};

// Weighted nonnegative least squares over the per-cut latency model. By
// default only the mean-latency rows are fit; setting include_single_frames
// adds the single-frame rows down-weighted 0.25x (they carry uncontrolled
// transport jitter, e.g. the relu outlier in the bundled data).
//
// With a single graph the prefix and suffix GFLOPs sum to a constant, so
// only (c_client - c_server), 1/bandwidth and one lumped constant are
// identifiable. calibrate() fits those three and reports the canonical
// decomposition: the slower side carries the rate difference, the lumped
// constant lands in rtt_overhead_s (preprocess_s is reported as 0). Every
// profile on the unidentifiable ray predicts identical per-cut latencies.
CalibrationResult calibrate(const LayerGraph& graph,
                            const std::vector<CutMeasurement>& measurements,
                            bool include_single_frames = false);

// CSV `cut,mean_latency_s[,single_frame_s]`, optional header.
std::vector<CutMeasurement> load_measurements_csv(const std::string& path);

CostProfile load_profile_json(const std::string& path);
void save_profile_json(const CostProfile& profile, const std::string& path);

// Rank correlation with average ranks on ties; NaN-free for n >= 2.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace splitreloc
