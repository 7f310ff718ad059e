#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "splitreloc/errors.hpp"
#include "splitreloc/executor.hpp"
#include "splitreloc/fusion.hpp"
#include "splitreloc/planner.hpp"
#include "splitreloc/runtime.hpp"
#include "splitreloc/sim.hpp"

namespace sr = splitreloc;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInsufficientData = 3;

struct GlobalOpts {
  uint32_t resolution = 224;
  uint32_t feature_dim = 2048;
  uint64_t seed = 42;
  std::string out_dir = ".";
  std::string log_level = "info";
};

bool verbose(const GlobalOpts& g) { return g.log_level == "debug"; }

std::string out_path(const GlobalOpts& g, const std::string& name) {
  return (fs::path(g.out_dir) / name).string();
}

// host:port -> pair; raises on malformed input
std::pair<std::string, uint16_t> split_endpoint(const std::string& ep) {
  auto colon = ep.rfind(':');
  if (colon == std::string::npos || colon + 1 == ep.size()) {
    sr::raise(sr::Errc::invalid_argument, "endpoint must be HOST:PORT, got " + ep);
  }
  int port = 0;
  try {
    port = std::stoi(ep.substr(colon + 1));
  } catch (const std::exception&) {
    sr::raise(sr::Errc::invalid_argument, "bad port in " + ep);
  }
  if (port < 0 || port > 65535) {
    sr::raise(sr::Errc::invalid_argument, "port out of range in " + ep);
  }
  return {ep.substr(0, colon), static_cast<uint16_t>(port)};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) sr::raise(sr::Errc::io_error, "cannot write " + path);
  return out;
}

int cmd_describe_model(const GlobalOpts& g, const std::string& out_file,
                       bool checksums, uint64_t input_seed) {
  sr::LayerGraph graph = sr::build_backbone(g.resolution, g.feature_dim);
  std::string path = out_file.empty()
                         ? out_path(g, checksums ? "checksums.csv" : "model.csv")
                         : out_file;
  std::ofstream out = open_out(path);
  if (checksums) {
    sr::WeightSet weights = sr::init_weights(graph, g.seed);
    sr::Frame frame =
        sr::synthetic_frame(g.resolution, g.resolution, input_seed, 0);
    sr::Tensor x = sr::preprocess(frame, g.resolution);
    out << "cut,crc32_hex\n";
    char buf[64];
    for (const auto& [cut, crc] : sr::activation_checksums(graph, weights, x)) {
      std::snprintf(buf, sizeof(buf), "%s,%08x", cut.c_str(), crc);
      out << buf << '\n';
    }
  } else {
    sr::FlopsReport flops = sr::count_flops(graph);
    out << "cut,layer_index,out_shape,payload_bytes,prefix_flops,suffix_flops\n";
    for (size_t i = 0; i < graph.cut_points.size(); ++i) {
      const auto& cp = graph.cut_points[i];
      uint64_t prefix = flops.prefix_at_cut[i];
      out << cp.name << ',' << cp.layer_index << ','
          << graph.activation_shape_at(i).to_string() << ','
          << sr::cut_payload_bytes(graph, cp.name) << ',' << prefix << ','
          << (flops.total - prefix) << '\n';
    }
  }
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int cmd_plan(const GlobalOpts& g, const std::string& profile_file,
             const std::string& out_file) {
  sr::LayerGraph graph = sr::build_backbone(g.resolution, g.feature_dim);
  sr::CostProfile profile = sr::load_profile_json(profile_file);
  sr::SplitPlan p = sr::plan(graph, profile);
  std::string path = out_file.empty() ? out_path(g, "plan.csv") : out_file;
  std::ofstream out = open_out(path);
  out << "cut,predicted_s,rank\n";
  char buf[128];
  for (const auto& [cut, seconds] : p.predicted) {
    size_t rank = 0;
    for (size_t i = 0; i < p.ranking.size(); ++i) {
      if (p.ranking[i] == cut) rank = i + 1;
    }
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%zu", cut.c_str(), seconds, rank);
    out << buf << '\n';
  }
  std::printf("%s\n", p.best_cut.c_str());
  return kExitOk;
}

int cmd_calibrate(const GlobalOpts& g, const std::string& measurements_file,
                  const std::string& out_profile, const std::string& report_file,
                  bool include_single_frames) {
  sr::LayerGraph graph = sr::build_backbone(g.resolution, g.feature_dim);
  auto measurements = sr::load_measurements_csv(measurements_file);
  sr::CalibrationResult fit =
      sr::calibrate(graph, measurements, include_single_frames);
  std::string profile_path =
      out_profile.empty() ? out_path(g, "profile.json") : out_profile;
  sr::save_profile_json(fit.profile, profile_path);
  if (!report_file.empty()) {
    std::ofstream out = open_out(report_file);
    out << "cut,measured_s,predicted_s,residual_s\n";
    char buf[160];
    for (size_t i = 0; i < measurements.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g",
                    measurements[i].cut_name.c_str(), measurements[i].mean_latency_s,
                    measurements[i].mean_latency_s + fit.residuals[i],
                    fit.residuals[i]);
      out << buf << '\n';
    }
  }
  sr::SplitPlan p = sr::plan(graph, fit.profile);
  std::printf("profile: %s\n", profile_path.c_str());
  std::printf("spearman: %.4f\n", fit.spearman);
  std::printf("best_cut: %s\n", p.best_cut.c_str());
  if (verbose(g)) std::printf("notes: %s\n", fit.notes.c_str());
  return kExitOk;
}

int cmd_serve(const GlobalOpts& g, const std::string& listen, double throttle,
              uint32_t max_sessions) {
  auto [host, port] = split_endpoint(listen);
  sr::ServerConfig cfg;
  cfg.listen_host = host;
  cfg.port = port;
  cfg.resolution = g.resolution;
  cfg.feature_dim = g.feature_dim;
  cfg.weight_seed = g.seed;
  cfg.throttle_s_per_gflop = throttle;
  cfg.max_sessions = max_sessions;
  return sr::serve(cfg);
}

int cmd_client(const GlobalOpts& g, const std::string& server, const std::string& cut,
               double fps, double duration, const std::string& policy,
               const std::string& source, double throttle, uint64_t frame_seed,
               const std::string& out_file) {
  sr::ClientConfig cfg;
  if (cut != sr::kLocalCut) {
    auto [host, port] = split_endpoint(server);
    cfg.server_host = host;
    cfg.server_port = port;
  }
  cfg.cut = cut;
  cfg.fps = fps;
  cfg.duration_s = duration;
  if (policy == "drop" || policy == "drop-if-busy") {
    cfg.policy = sr::DropPolicy::drop_if_busy;
  } else if (policy == "block") {
    cfg.policy = sr::DropPolicy::block;
  } else {
    sr::raise(sr::Errc::invalid_argument, "policy must be drop or block");
  }
  if (source == "seeded") {
    cfg.source = sr::FrameSourceKind::seeded;
  } else if (source.rfind("dir:", 0) == 0) {
    cfg.source = sr::FrameSourceKind::directory;
    cfg.source_dir = source.substr(4);
  } else {
    sr::raise(sr::Errc::invalid_argument, "source must be seeded or dir:PATH");
  }
  cfg.resolution = g.resolution;
  cfg.feature_dim = g.feature_dim;
  cfg.weight_seed = g.seed;
  cfg.frame_seed = frame_seed;
  cfg.throttle_s_per_gflop = throttle;

  sr::CaptureReport report = sr::run_capture_loop(cfg);
  std::string path = out_file.empty() ? out_path(g, "report.csv") : out_file;
  sr::save_capture_csv(report, path);
  std::printf("captured=%llu posed=%llu dropped=%llu mean_latency_s=%.6f\n",
              static_cast<unsigned long long>(report.captured),
              static_cast<unsigned long long>(report.posed),
              static_cast<unsigned long long>(report.dropped),
              report.mean_latency_s);
  std::printf("wrote %s\n", path.c_str());
  if (!report.complete) {
    std::fprintf(stderr, "run incomplete: connection retry budget exhausted\n");
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_bench_local(const GlobalOpts& g, uint32_t frames, const std::string& cut,
                    double throttle_client, double throttle_server,
                    uint64_t frame_seed, const std::string& out_file) {
  sr::LayerGraph graph = sr::build_backbone(g.resolution, g.feature_dim);
  sr::WeightSet weights = sr::init_weights(graph, g.seed);
  std::vector<std::string> cuts;
  if (cut.empty()) {
    for (const auto& cp : graph.cut_points) cuts.push_back(cp.name);
  } else {
    graph.cut_pos(cut);
    cuts.push_back(cut);
  }

  std::string path = out_file.empty() ? out_path(g, "bench.csv") : out_file;
  std::ofstream out = open_out(path);
  out << "cut,mean_latency_s,single_frame_s\n";
  double total_gflops = static_cast<double>(graph.total_flops()) * 1e-9;
  using Clock = std::chrono::steady_clock;
  char buf[128];
  for (const auto& c : cuts) {
    size_t pos = graph.cut_pos(c);
    double prefix_gflops = static_cast<double>(graph.prefix_flops_at(pos)) * 1e-9;
    double suffix_gflops = total_gflops - prefix_gflops;
    double sum = 0.0;
    double first = 0.0;
    for (uint32_t i = 0; i < frames; ++i) {
      sr::Frame f = sr::synthetic_frame(g.resolution, g.resolution, frame_seed, i);
      auto t0 = Clock::now();
      sr::Tensor x = sr::preprocess(f, g.resolution);
      auto t1 = Clock::now();
      sr::Tensor act = c == "null" ? std::move(x)
                                   : sr::execute(graph, weights, x, "null", c);
      if (throttle_client > 0 && prefix_gflops > 0) {
        std::this_thread::sleep_until(
            t1 + std::chrono::duration_cast<Clock::duration>(
                     std::chrono::duration<double>(prefix_gflops * throttle_client)));
      }
      auto t2 = Clock::now();
      sr::Tensor head = sr::execute(graph, weights, act, c, sr::kEndCut);
      if (throttle_server > 0 && suffix_gflops > 0) {
        std::this_thread::sleep_until(
            t2 + std::chrono::duration_cast<Clock::duration>(
                     std::chrono::duration<double>(suffix_gflops * throttle_server)));
      }
      auto t3 = Clock::now();
      double elapsed = std::chrono::duration<double>(t3 - t0).count();
      sum += elapsed;
      if (i == 0) first = elapsed;
    }
    double mean = frames ? sum / frames : 0.0;
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g", c.c_str(), mean, first);
    out << buf << '\n';
    if (verbose(g)) std::printf("%s mean %.4f s\n", c.c_str(), mean);
  }
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int cmd_simulate(const GlobalOpts& g, const std::string& config_file,
                 std::string out_prefix) {
  sr::SimConfig cfg = sr::load_sim_config_json(config_file);
  if (out_prefix.empty()) out_prefix = out_path(g, "sim_");
  char buf[160];
  if (cfg.mode == sr::SimConfig::Mode::realtime) {
    if (!cfg.route_csv.empty()) {
      cfg.scenario.route = sr::load_trajectory_csv(cfg.route_csv);
    }
    sr::SimReport r = sr::simulate_realtime(cfg.scenario);
    {
      std::ofstream out = open_out(out_prefix + "report.csv");
      out << "metric,value\n";
      out << "frames_captured," << r.frames_captured << '\n';
      out << "poses_produced," << r.poses_produced << '\n';
      out << "frames_dropped," << r.frames_dropped << '\n';
      std::snprintf(buf, sizeof(buf), "mean_service_s,%.9g", r.mean_service_s);
      out << buf << '\n';
      std::snprintf(buf, sizeof(buf), "median_service_s,%.9g", r.median_service_s);
      out << buf << '\n';
      if (r.covered_distance_m) {
        std::snprintf(buf, sizeof(buf), "covered_distance_m,%.9g", *r.covered_distance_m);
        out << buf << '\n';
      }
    }
    {
      std::ofstream out = open_out(out_prefix + "poses.csv");
      out << "pose_index,timestamp_s\n";
      for (size_t i = 0; i < r.pose_timestamps.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g", i, r.pose_timestamps[i]);
        out << buf << '\n';
      }
    }
    std::printf("poses=%llu dropped=%llu\n",
                static_cast<unsigned long long>(r.poses_produced),
                static_cast<unsigned long long>(r.frames_dropped));
  } else {
    sr::Trajectory route = sr::load_trajectory_csv(cfg.route_csv);
    std::ofstream out = open_out(out_prefix + "coverage.csv");
    out << "name,per_frame_s,frames_processed,covered_distance_m\n";
    for (const auto& run : cfg.runs) {
      sr::ReplayReport r =
          sr::simulate_replay(cfg.frame_count, run.per_frame_s, cfg.wall_time_s, route);
      std::snprintf(buf, sizeof(buf), "%s,%.9g,%llu,%.9g", run.name.c_str(),
                    run.per_frame_s, static_cast<unsigned long long>(r.frames_processed),
                    r.covered_distance_m);
      out << buf << '\n';
      std::printf("%s: %llu frames, %.3f m\n", run.name.c_str(),
                  static_cast<unsigned long long>(r.frames_processed),
                  r.covered_distance_m);
    }
  }
  std::printf("wrote %s*\n", out_prefix.c_str());
  return kExitOk;
}

int cmd_fuse(const GlobalOpts& g, const std::string& config_file,
             std::string out_prefix) {
  sr::FusionStudyConfig cfg = sr::load_fusion_config_json(config_file);
  if (out_prefix.empty()) out_prefix = out_path(g, "fusion_");
  sr::FusionReport report = sr::run_fusion_study(cfg);
  sr::save_fusion_report(report, out_prefix);
  std::printf("mean gps=%.4f dnn=%.4f fused=%.4f\n", report.gps.mean,
              report.dnn.mean, report.fused.mean);
  std::printf("wrote %s{losses,summary,hist}.csv\n", out_prefix.c_str());
  return kExitOk;
}

int exit_code_for(const sr::Error& e) {
  switch (e.code()) {
    case sr::Errc::invalid_argument:
    case sr::Errc::parse_error:
    case sr::Errc::validation_error:
      return kExitConfig;
    case sr::Errc::insufficient_data:
      return kExitInsufficientData;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"split-inference offloading toolkit for DNN camera relocalization"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  GlobalOpts g;
  if (const char* env = std::getenv("SPLITRELOC_OUT_DIR")) g.out_dir = env;
  app.add_option("--res", g.resolution, "network input resolution (56, 112, 224)")
      ->capture_default_str();
  app.add_option("--feat", g.feature_dim, "feature width of the regression head")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "weight seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "default output directory")
      ->capture_default_str();
  app.add_option("--log-level", g.log_level, "info or debug")->capture_default_str();

  auto* describe = app.add_subcommand(
      "describe-model", "per-cut shapes, payload bytes and FLOPs as CSV");
  bool checksums = false;
  uint64_t input_seed = 7;
  std::string describe_out;
  describe->add_flag("--checksums", checksums,
                     "emit per-cut activation crc32 goldens instead");
  describe->add_option("--input-seed", input_seed, "synthetic input frame seed")
      ->capture_default_str();
  describe->add_option("--out", describe_out, "output file");

  auto* plan_cmd = app.add_subcommand("plan", "rank cuts by predicted latency");
  std::string plan_profile, plan_out;
  plan_cmd->add_option("--profile", plan_profile, "cost profile JSON")->required();
  plan_cmd->add_option("--out", plan_out, "plan CSV");

  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "fit a cost profile to measured cut latencies");
  std::string meas_file, out_profile, fit_report;
  bool include_singles = false;
  calibrate_cmd->add_option("--measurements", meas_file, "measurements CSV")->required();
  calibrate_cmd->add_option("--out-profile", out_profile, "fitted profile JSON");
  calibrate_cmd->add_option("--report", fit_report, "per-cut fit residual CSV");
  calibrate_cmd->add_flag("--include-single-frames", include_singles,
                          "also fit single-frame rows at 0.25x weight");

  auto* serve_cmd = app.add_subcommand("serve", "run the suffix-execution server");
  std::string listen = "0.0.0.0:9901";
  double serve_throttle = 0.0;
  uint32_t max_sessions = 8;
  serve_cmd->add_option("--listen", listen, "bind address HOST:PORT")
      ->capture_default_str();
  serve_cmd->add_option("--throttle-gflops", serve_throttle,
                        "seconds-per-GFLOP floor on suffix execution");
  serve_cmd->add_option("--max-sessions", max_sessions, "concurrent session cap")
      ->capture_default_str();

  auto* client_cmd = app.add_subcommand("client", "run the capture loop");
  std::string server = "127.0.0.1:9901", cut = "null", policy = "drop",
              source = "seeded", client_out;
  double fps = 30.0, duration = 10.0, client_throttle = 0.0;
  uint64_t frame_seed = 7;
  client_cmd->add_option("--server", server, "server HOST:PORT")->capture_default_str();
  client_cmd->add_option("--cut", cut, "cut name, or 'local' for no offloading")
      ->capture_default_str();
  client_cmd->add_option("--fps", fps, "capture rate")->capture_default_str();
  client_cmd->add_option("--duration", duration, "run length, seconds")
      ->capture_default_str();
  client_cmd->add_option("--policy", policy, "drop or block")->capture_default_str();
  client_cmd->add_option("--source", source, "seeded or dir:PATH")
      ->capture_default_str();
  client_cmd->add_option("--throttle-gflops", client_throttle,
                         "seconds-per-GFLOP floor on client execution");
  client_cmd->add_option("--frame-seed", frame_seed, "seed for synthetic frames")
      ->capture_default_str();
  client_cmd->add_option("--out", client_out, "per-frame timing CSV");

  auto* bench_cmd = app.add_subcommand(
      "bench-local", "measure per-cut prefix+suffix execution locally");
  uint32_t bench_frames = 100;
  std::string bench_cut, bench_out;
  double bench_tc = 0.0, bench_ts = 0.0;
  uint64_t bench_frame_seed = 7;
  bench_cmd->add_option("--frames", bench_frames, "frames per cut")
      ->capture_default_str();
  bench_cmd->add_option("--cut", bench_cut, "single cut (default: all)");
  bench_cmd->add_option("--throttle-client", bench_tc,
                        "seconds-per-GFLOP floor on the prefix");
  bench_cmd->add_option("--throttle-server", bench_ts,
                        "seconds-per-GFLOP floor on the suffix");
  bench_cmd->add_option("--frame-seed", bench_frame_seed, "synthetic frame seed")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "measurements CSV");

  auto* sim_cmd = app.add_subcommand("simulate", "deterministic pipeline simulation");
  std::string sim_config, sim_prefix;
  sim_cmd->add_option("--config", sim_config, "scenario JSON")->required();
  sim_cmd->add_option("--out-prefix", sim_prefix, "output file prefix");

  auto* fuse_cmd = app.add_subcommand("fuse", "pose-stream fusion study");
  std::string fuse_config, fuse_prefix;
  fuse_cmd->add_option("--config", fuse_config, "study JSON")->required();
  fuse_cmd->add_option("--out-prefix", fuse_prefix, "output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (describe->parsed()) {
      return cmd_describe_model(g, describe_out, checksums, input_seed);
    }
    if (plan_cmd->parsed()) return cmd_plan(g, plan_profile, plan_out);
    if (calibrate_cmd->parsed()) {
      return cmd_calibrate(g, meas_file, out_profile, fit_report, include_singles);
    }
    if (serve_cmd->parsed()) return cmd_serve(g, listen, serve_throttle, max_sessions);
    if (client_cmd->parsed()) {
      return cmd_client(g, server, cut, fps, duration, policy, source,
                        client_throttle, frame_seed, client_out);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench_local(g, bench_frames, bench_cut, bench_tc, bench_ts,
                             bench_frame_seed, bench_out);
    }
    if (sim_cmd->parsed()) return cmd_simulate(g, sim_config, sim_prefix);
    if (fuse_cmd->parsed()) return cmd_fuse(g, fuse_config, fuse_prefix);
  } catch (const sr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
