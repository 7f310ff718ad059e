#include "splitreloc/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splitreloc/errors.hpp"

namespace splitreloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

void throttle_sleep(Clock::time_point start, double gflops, double s_per_gflop) {
  if (s_per_gflop <= 0.0 || gflops <= 0.0) return;
  auto target = start + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(gflops * s_per_gflop));
  std::this_thread::sleep_until(target);
}

}  // namespace

Server::Server(ServerConfig cfg)
    : cfg_(std::move(cfg)),
      graph_(build_backbone(cfg_.resolution, cfg_.feature_dim)),
      weights_(init_weights(graph_, cfg_.weight_seed)) {}

Server::~Server() { stop(); }

void Server::start() {
  listener_ = std::make_unique<Listener>(cfg_.listen_host, cfg_.port);
  port_ = listener_->port();
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (listener_) listener_->close();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard<std::mutex> lk(sessions_mu_);
    sessions.swap(sessions_);
  }
  for (auto& t : sessions) {
    if (t.joinable()) t.join();
  }
}

void Server::accept_loop() {
  while (!stopping_.load()) {
    Socket sock = listener_->accept();
    if (!sock.valid()) break;  // listener closed
    if (active_sessions_.load() >= cfg_.max_sessions) {
      sock.shutdown_and_close();
      continue;
    }
    sock.set_recv_timeout(0.2);  // keeps sessions responsive to stop()
    active_sessions_.fetch_add(1);
    std::lock_guard<std::mutex> lk(sessions_mu_);
    sessions_.emplace_back(
        [this](Socket s) { handle_session(std::move(s)); }, std::move(sock));
  }
}

void Server::handle_session(Socket sock) {
  const double total_gflops = static_cast<double>(graph_.total_flops()) * 1e-9;
  std::vector<uint8_t> frame;
  while (!stopping_.load()) {
    // Assemble one frame off the stream: fixed prelude, then dims + payload
    // length, then the declared remainder.
    uint8_t prelude[kRequestPreludeSize];
    bool open = false;
    try {
      open = sock.recv_exact_or_eof(prelude, sizeof(prelude), &stopping_);
    } catch (const Error&) {
      break;
    }
    if (!open) break;

    RequestPrelude hdr;
    try {
      hdr = parse_request_prelude(std::span<const uint8_t>(prelude, sizeof(prelude)));
    } catch (const Error&) {
      break;  // framing cannot be trusted past a malformed prelude
    }

    InferResponse resp;
    resp.request_id = hdr.request_id;
    resp.status = Status::internal;
    bool decoded = false;
    InferRequest req;
    try {
      frame.assign(prelude, prelude + sizeof(prelude));
      size_t dims_len = 4ull * hdr.ndim + 4;
      frame.resize(frame.size() + dims_len);
      sock.recv_exact(frame.data() + kRequestPreludeSize, dims_len, &stopping_);
      uint32_t payload_len = 0;
      for (int i = 0; i < 4; ++i) {
        payload_len |= static_cast<uint32_t>(frame[kRequestPreludeSize + 4ull * hdr.ndim + i])
                       << (8 * i);
      }
      if (payload_len > 256u * 1024 * 1024) break;
      size_t tail = static_cast<size_t>(payload_len) + 4;
      size_t off = frame.size();
      frame.resize(off + tail);
      sock.recv_exact(frame.data() + off, tail, &stopping_);
      req = decode_request(frame);
      decoded = true;
    } catch (const Error& e) {
      if (e.code() == Errc::integrity_error) {
        // Framing held together, so answer with the readable request id.
        sock.send_all(encode_response(resp).data(), kResponseFrameSize);
        continue;
      }
      break;  // protocol/connection error: close the session
    }

    if (decoded) {
      if (req.cut_index >= graph_.cut_points.size()) {
        resp.status = Status::bad_cut;
      } else {
        const std::string& cut = graph_.cut_points[req.cut_index].name;
        Shape expected = graph_.activation_shape_at(req.cut_index);
        if (req.shape != expected) {
          resp.status = Status::shape_mismatch;
        } else {
          try {
            Tensor input(req.shape, std::move(req.payload));
            auto t0 = Clock::now();
            Tensor head = execute(graph_, weights_, input, cut, kEndCut);
            double suffix_gflops =
                total_gflops -
                static_cast<double>(graph_.prefix_flops_at(req.cut_index)) * 1e-9;
            throttle_sleep(t0, suffix_gflops, cfg_.throttle_s_per_gflop);
            auto t1 = Clock::now();
            resp.status = Status::ok;
            for (int i = 0; i < 6; ++i) resp.pose[i] = head.data[i];
            resp.server_compute_ns = static_cast<uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
          } catch (const Error&) {
            resp.status = Status::internal;
          }
        }
      }
    }
    requests_served_.fetch_add(1);
    try {
      sock.send_all(encode_response(resp).data(), kResponseFrameSize);
    } catch (const Error&) {
      break;
    }
  }
  active_sessions_.fetch_sub(1);
}

namespace {
std::atomic<bool> g_serve_interrupted{false};
void serve_signal_handler(int) { g_serve_interrupted.store(true); }
}  // namespace

int serve(const ServerConfig& cfg) {
  Server server(cfg);
  try {
    server.start();
  } catch (const Error& e) {
    std::fprintf(stderr, "serve: %s\n", e.what());
    return 1;
  }
  std::printf("listening on %s:%u (res=%u feat=%u seed=%llu)\n",
              cfg.listen_host.c_str(), server.port(), cfg.resolution,
              cfg.feature_dim, static_cast<unsigned long long>(cfg.weight_seed));
  std::fflush(stdout);
  g_serve_interrupted.store(false);
  std::signal(SIGINT, serve_signal_handler);
  std::signal(SIGTERM, serve_signal_handler);
  while (!g_serve_interrupted.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  return 0;
}

Client::Client(const ClientConfig& cfg)
    : cfg_(cfg),
      graph_(build_backbone(cfg.resolution, cfg.feature_dim)),
      weights_(init_weights(graph_, cfg.weight_seed)) {
  local_ = (cfg_.cut == kLocalCut);
  if (local_) {
    prefix_gflops_ = static_cast<double>(graph_.total_flops()) * 1e-9;
  } else {
    size_t pos = graph_.cut_pos(cfg_.cut);  // validates the name
    prefix_gflops_ = static_cast<double>(graph_.prefix_flops_at(pos)) * 1e-9;
  }
}

void Client::connect() {
  if (local_) return;
  int attempts = cfg_.connect_retries + 1;
  for (int i = 0; i < attempts; ++i) {
    try {
      sock_ = tcp_connect(cfg_.server_host, cfg_.server_port);
      return;
    } catch (const Error&) {
      if (i + 1 == attempts) throw;
      std::this_thread::sleep_for(
          std::chrono::duration<double>(cfg_.retry_backoff_s));
    }
  }
}

void Client::close() { sock_.close(); }

std::pair<Pose, FrameTiming> Client::infer_once(const Frame& frame) {
  FrameTiming timing;
  auto t0 = Clock::now();
  Tensor x = preprocess(frame, graph_.resolution);
  auto t1 = Clock::now();
  timing.preprocess_s = seconds_since(t0, t1);

  if (local_) {
    Tensor head = execute(graph_, weights_, x, "null", kEndCut);
    throttle_sleep(t1, prefix_gflops_, cfg_.throttle_s_per_gflop);
    auto t2 = Clock::now();
    timing.client_compute_s = seconds_since(t1, t2);
    timing.total_s = seconds_since(t0, t2);
    timing.outcome = FrameOutcome::pose;
    return {decode_pose(head), timing};
  }

  Tensor activation =
      cfg_.cut == "null" ? std::move(x)
                         : execute(graph_, weights_, x, "null", cfg_.cut);
  throttle_sleep(t1, prefix_gflops_, cfg_.throttle_s_per_gflop);
  auto t2 = Clock::now();
  timing.client_compute_s = seconds_since(t1, t2);

  InferRequest req;
  req.request_id = next_request_id_++;
  req.cut_index = static_cast<uint8_t>(graph_.cut_pos(cfg_.cut));
  req.shape = activation.shape;
  req.payload = std::move(activation.data);
  std::vector<uint8_t> encoded = encode_request(req);
  auto t3 = Clock::now();
  timing.serialize_s = seconds_since(t2, t3);

  if (!sock_.valid()) raise(Errc::connection_error, "client is not connected");
  sock_.send_all(encoded.data(), encoded.size());
  uint8_t buf[kResponseFrameSize];
  sock_.recv_exact(buf, sizeof(buf));
  auto t4 = Clock::now();
  InferResponse resp = decode_response(std::span<const uint8_t>(buf, sizeof(buf)));
  if (resp.status != Status::ok) {
    raise(Errc::remote_error,
          "server returned status " + std::to_string(static_cast<int>(resp.status)));
  }
  if (resp.request_id != req.request_id) {
    raise(Errc::protocol_error, "response id does not match request");
  }
  timing.server_compute_s = static_cast<double>(resp.server_compute_ns) * 1e-9;
  timing.transfer_s =
      std::max(0.0, seconds_since(t3, t4) - timing.server_compute_s);

  Pose pose;
  pose.t = {resp.pose[0], resp.pose[1], resp.pose[2]};
  pose.q = quat_exp(LogQuat{resp.pose[3], resp.pose[4], resp.pose[5]});
  auto t5 = Clock::now();
  timing.total_s = seconds_since(t0, t5);
  timing.outcome = FrameOutcome::pose;
  return {pose, timing};
}

namespace {

class FrameSource {
 public:
  explicit FrameSource(const ClientConfig& cfg) : cfg_(cfg) {
    if (cfg.source == FrameSourceKind::directory) {
      namespace fs = std::filesystem;
      std::vector<std::string> paths;
      for (const auto& e : fs::directory_iterator(cfg.source_dir)) {
        if (e.path().extension() == ".ppm") paths.push_back(e.path().string());
      }
      std::sort(paths.begin(), paths.end());
      if (paths.empty()) {
        raise(Errc::invalid_argument, "no .ppm frames in " + cfg.source_dir);
      }
      for (const auto& p : paths) frames_.push_back(load_ppm(p));
    }
  }

  Frame get(uint64_t index) const {
    if (cfg_.source == FrameSourceKind::seeded) {
      return synthetic_frame(cfg_.resolution, cfg_.resolution, cfg_.frame_seed, index);
    }
    return frames_[index % frames_.size()];
  }

 private:
  const ClientConfig& cfg_;
  std::vector<Frame> frames_;
};

void summarize(CaptureReport& report) {
  std::vector<double> latencies;
  for (const auto& f : report.frames) {
    if (f.outcome == FrameOutcome::pose) latencies.push_back(f.total_s);
  }
  if (!latencies.empty()) {
    double sum = 0;
    for (double v : latencies) sum += v;
    report.mean_latency_s = sum / static_cast<double>(latencies.size());
    std::sort(latencies.begin(), latencies.end());
    size_t n = latencies.size();
    report.median_latency_s =
        n % 2 ? latencies[n / 2] : 0.5 * (latencies[n / 2 - 1] + latencies[n / 2]);
  }
}

// Shared state of the one-slot handoff between the capture schedule and the
// in-flight inference.
struct InferenceSlot {
  std::mutex mu;
  std::condition_variable cv;
  bool busy = false;
  bool stop = false;
  bool aborted = false;  // retry budget exhausted
  Frame frame;
  uint64_t frame_id = 0;
  double capture_t = 0.0;
};

}  // namespace

CaptureReport run_capture_loop(const ClientConfig& cfg) {
  if (!(cfg.fps > 0.0) || !(cfg.duration_s > 0.0)) {
    raise(Errc::invalid_argument, "fps and duration must be positive");
  }
  Client client(cfg);
  CaptureReport report;
  FrameSource source(cfg);
  try {
    client.connect();
  } catch (const Error&) {
    return report;  // complete = false
  }

  auto start = Clock::now();
  auto instant_of = [&](double t) {
    return start + std::chrono::duration_cast<Clock::duration>(
                       std::chrono::duration<double>(t));
  };

  if (cfg.policy == DropPolicy::block) {
    uint64_t k = 0;
    bool aborted = false;
    while (!aborted) {
      double t = static_cast<double>(k) / cfg.fps;
      if (!(t < cfg.duration_s)) break;
      std::this_thread::sleep_until(instant_of(t));
      Frame f = source.get(report.captured);
      FrameTiming timing;
      try {
        auto [pose, tm] = client.infer_once(f);
        timing = tm;
        report.poses.push_back(pose);
        ++report.posed;
      } catch (const Error&) {
        try {
          client.connect();
          auto [pose, tm] = client.infer_once(f);
          timing = tm;
          report.poses.push_back(pose);
          ++report.posed;
        } catch (const Error&) {
          aborted = true;
          break;
        }
      }
      timing.frame_id = report.captured;
      timing.capture_t = t;
      report.frames.push_back(timing);
      ++report.captured;
      double completion = seconds_since(start, Clock::now());
      uint64_t resume = static_cast<uint64_t>(std::ceil(completion * cfg.fps));
      k = std::max(k + 1, resume);
    }
    summarize(report);
    report.complete = !aborted;
    return report;
  }

  // drop-if-busy: capture schedule on this thread, inference on a worker,
  // a single slot between them.
  InferenceSlot slot;
  std::vector<FrameTiming> frames;
  std::vector<Pose> poses;
  std::thread worker([&] {
    while (true) {
      Frame frame;
      uint64_t frame_id;
      double capture_t;
      {
        std::unique_lock<std::mutex> lk(slot.mu);
        slot.cv.wait(lk, [&] { return slot.busy || slot.stop; });
        if (slot.stop && !slot.busy) return;
        frame = std::move(slot.frame);
        frame_id = slot.frame_id;
        capture_t = slot.capture_t;
      }
      FrameTiming timing;
      bool ok = false;
      try {
        auto [pose, tm] = client.infer_once(frame);
        timing = tm;
        poses.push_back(pose);
        ok = true;
      } catch (const Error&) {
        try {
          client.connect();
          auto [pose, tm] = client.infer_once(frame);
          timing = tm;
          poses.push_back(pose);
          ok = true;
        } catch (const Error&) {
        }
      }
      timing.frame_id = frame_id;
      timing.capture_t = capture_t;
      frames[frame_id] = timing;
      std::lock_guard<std::mutex> lk(slot.mu);
      slot.busy = false;
      if (!ok) slot.aborted = true;
      slot.cv.notify_all();
    }
  });

  uint64_t n_frames = 0;
  for (uint64_t k = 0;; ++k) {
    if (!(static_cast<double>(k) / cfg.fps < cfg.duration_s)) break;
    ++n_frames;
  }
  frames.resize(n_frames);

  bool aborted = false;
  for (uint64_t k = 0; k < n_frames; ++k) {
    double t = static_cast<double>(k) / cfg.fps;
    std::this_thread::sleep_until(instant_of(t));
    std::unique_lock<std::mutex> lk(slot.mu);
    if (slot.aborted) {
      frames.resize(k);
      aborted = true;
      break;
    }
    if (slot.busy) {
      frames[k].frame_id = k;
      frames[k].capture_t = t;
      frames[k].outcome = FrameOutcome::dropped;
    } else {
      slot.frame = source.get(k);
      slot.frame_id = k;
      slot.capture_t = t;
      slot.busy = true;
      slot.cv.notify_all();
    }
    ++report.captured;
  }
  {
    std::unique_lock<std::mutex> lk(slot.mu);
    slot.cv.wait(lk, [&] { return !slot.busy; });
    slot.stop = true;
    slot.cv.notify_all();
  }
  worker.join();
  if (slot.aborted) aborted = true;

  report.frames = std::move(frames);
  report.poses = std::move(poses);
  report.posed = report.poses.size();
  // tally drops from the records: a frame whose inference failed outright
  // counts as dropped, keeping captured == posed + dropped even on aborts
  report.dropped = 0;
  for (const auto& f : report.frames) {
    if (f.outcome == FrameOutcome::dropped) ++report.dropped;
  }
  summarize(report);
  report.complete = !aborted;
  return report;
}

void save_capture_csv(const CaptureReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write report csv: " + path);
  out << "frame_id,capture_t,preprocess_s,client_compute_s,serialize_s,"
         "transfer_s,server_compute_s,total_s,outcome\n";
  char buf[320];
  for (const auto& f : report.frames) {
    std::snprintf(buf, sizeof(buf),
                  "%llu,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%s",
                  static_cast<unsigned long long>(f.frame_id), f.capture_t,
                  f.preprocess_s, f.client_compute_s, f.serialize_s, f.transfer_s,
                  f.server_compute_s, f.total_s,
                  f.outcome == FrameOutcome::pose ? "pose" : "dropped");
    out << buf << '\n';
  }
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

}  // namespace splitreloc
