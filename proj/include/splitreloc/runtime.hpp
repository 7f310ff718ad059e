#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "splitreloc/executor.hpp"
#include "splitreloc/graph.hpp"
#include "splitreloc/net.hpp"
#include "splitreloc/sim.hpp"
#include "splitreloc/weights.hpp"
#include "splitreloc/wire.hpp"

namespace splitreloc {

struct ServerConfig {
  std::string listen_host = "0.0.0.0";
  uint16_t port = 9901;  // 0 binds an ephemeral port
  uint32_t resolution = 224;
  uint32_t feature_dim = 2048;
  uint64_t weight_seed = 42;
  uint32_t max_sessions = 8;
  // Seconds-per-GFLOP floor on suffix execution; emulates slower hardware.
  double throttle_s_per_gflop = 0.0;
};

// Suffix-execution server. Graph and weights are built once and shared
// read-only across sessions; per-session request handling is sequential,
// sessions run concurrently up to max_sessions.
class Server {
 public:
  explicit Server(ServerConfig cfg);
  ~Server();

  void start();
  void stop();
  uint16_t port() const { return port_; }
  uint64_t requests_served() const { return requests_served_.load(); }

 private:
  void accept_loop();
  void handle_session(Socket sock);

  ServerConfig cfg_;
  LayerGraph graph_;
  WeightSet weights_;
  std::unique_ptr<Listener> listener_;
  uint16_t port_ = 0;
  std::thread accept_thread_;
  std::mutex sessions_mu_;
  std::vector<std::thread> sessions_;
  std::atomic<uint32_t> active_sessions_{0};
  std::atomic<uint64_t> requests_served_{0};
  std::atomic<bool> stopping_{false};
};

// Runs a server until SIGINT/SIGTERM; returns a process exit code.
int serve(const ServerConfig& cfg);

enum class FrameOutcome { pose, dropped };

struct FrameTiming {
  uint64_t frame_id = 0;
  double capture_t = 0.0;  // scheduled capture instant, seconds from run start
  double preprocess_s = 0.0;
  double client_compute_s = 0.0;
  double serialize_s = 0.0;
  double transfer_s = 0.0;
  double server_compute_s = 0.0;
  double total_s = 0.0;
  FrameOutcome outcome = FrameOutcome::dropped;
};

enum class FrameSourceKind { seeded, directory };

// Pseudo-cut accepted by the client: run the whole network on the client,
// never touching the server. The local-only baseline of the pipeline
// comparisons.
inline constexpr std::string_view kLocalCut = "local";

struct ClientConfig {
  std::string server_host = "127.0.0.1";
  uint16_t server_port = 9901;
  std::string cut = "null";  // one of the 11 cut names, or kLocalCut
  double fps = 30.0;
  double duration_s = 10.0;
  DropPolicy policy = DropPolicy::drop_if_busy;
  FrameSourceKind source = FrameSourceKind::seeded;
  std::string source_dir;  // *.ppm frames, sorted, cycled
  uint64_t frame_seed = 7;
  uint32_t resolution = 224;
  uint32_t feature_dim = 2048;
  uint64_t weight_seed = 42;
  // Seconds-per-GFLOP floor on prefix (or full local) execution.
  double throttle_s_per_gflop = 0.0;
  int connect_retries = 3;
  double retry_backoff_s = 0.1;
};

// Single-connection client holding at most one request in flight.
class Client {
 public:
  explicit Client(const ClientConfig& cfg);

  // Establishes the connection, honoring the retry budget. No-op for the
  // local pseudo-cut.
  void connect();
  void close();

  // preprocess -> local prefix -> offload -> decode, with per-stage timing.
  std::pair<Pose, FrameTiming> infer_once(const Frame& frame);

  const LayerGraph& graph() const { return graph_; }

 private:
  ClientConfig cfg_;
  LayerGraph graph_;
  WeightSet weights_;
  Socket sock_;
  uint64_t next_request_id_ = 1;
  bool local_ = false;
  double prefix_gflops_ = 0.0;
};

struct CaptureReport {
  std::vector<FrameTiming> frames;
  std::vector<Pose> poses;  // in completion order
  uint64_t captured = 0;
  uint64_t posed = 0;
  uint64_t dropped = 0;
  double mean_latency_s = 0.0;
  double median_latency_s = 0.0;
  // false when the run aborted (connection retry budget exhausted)
  bool complete = false;
};

// Fixed-schedule capture loop: frames arrive at k/fps for k/fps < duration.
// Under drop_if_busy a frame arriving while an inference is in flight is
// recorded as dropped (one in-flight inference at most); under block the
// source pauses until the first capture tick at or after completion.
CaptureReport run_capture_loop(const ClientConfig& cfg);

// FrameTiming columns, one row per frame.
void save_capture_csv(const CaptureReport& report, const std::string& path);

}  // namespace splitreloc
