#include "splitreloc/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "splitreloc/errors.hpp"
#include "splitreloc/rng.hpp"

namespace splitreloc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Trajectory gen_trajectory(double radius_m, double speed_mps, double fps,
                          double duration_s) {
  if (!(radius_m > 0) || !(speed_mps > 0) || !(fps > 0) || !(duration_s > 0)) {
    raise(Errc::invalid_argument, "gen_trajectory needs positive parameters");
  }
  double omega = speed_mps / radius_m;
  Trajectory traj;
  for (uint64_t k = 0;; ++k) {
    double t = static_cast<double>(k) / fps;
    if (!(t < duration_s)) break;
    TrajectorySample s;
    s.t = t;
    double a = omega * t;
    s.pose.t = {radius_m * std::cos(a), radius_m * std::sin(a), 0.0};
    s.pose.q = quat_from_yaw(a + kPi / 2.0);  // heading tangent to the circle
    traj.samples.push_back(s);
  }
  return traj;
}

Trajectory corrupt(const Trajectory& traj, const NoiseModel& model) {
  if (model.sigma_m < 0 || model.outlier_prob < 0 || model.outlier_prob > 1 ||
      model.outlier_scale < 1 || model.orientation_sigma_deg < 0) {
    raise(Errc::invalid_argument, "invalid noise model");
  }
  Trajectory out = traj;
  for (size_t i = 0; i < out.samples.size(); ++i) {
    SplitMix64 rng(stream_key(model.seed, i));
    double u = rng.next_double();
    double sigma = u < model.outlier_prob ? model.sigma_m * model.outlier_scale
                                          : model.sigma_m;
    out.samples[i].pose.t.x += sigma * rng.next_gaussian();
    out.samples[i].pose.t.y += sigma * rng.next_gaussian();
    if (model.orientation_sigma_deg > 0) {
      double ax = rng.next_gaussian();
      double ay = rng.next_gaussian();
      double az = rng.next_gaussian();
      double n = std::sqrt(ax * ax + ay * ay + az * az);
      if (n < 1e-12) {
        ax = 0;
        ay = 0;
        az = 1;
        n = 1;
      }
      double angle = rng.next_gaussian() * model.orientation_sigma_deg * kPi / 180.0;
      double h = 0.5 * angle / n;
      Quaternion perturb = quat_exp(LogQuat{ax * h, ay * h, az * h});
      out.samples[i].pose.q = normalized(quat_multiply(perturb, out.samples[i].pose.q));
    }
  }
  return out;
}

namespace {

void check_aligned(const Trajectory& a, const Trajectory& b, const char* what) {
  if (a.size() != b.size()) {
    raise(Errc::alignment_error, std::string(what) + ": lengths " +
                                     std::to_string(a.size()) + " vs " +
                                     std::to_string(b.size()));
  }
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.samples[i].t - b.samples[i].t) > 1e-9) {
      raise(Errc::alignment_error,
            std::string(what) + ": timestamps diverge at sample " + std::to_string(i));
    }
  }
}

StreamSummary summarize_losses(const std::vector<double>& losses) {
  StreamSummary s;
  if (losses.empty()) return s;
  double n = static_cast<double>(losses.size());
  double sum = 0;
  for (double v : losses) sum += v;
  s.mean = sum / n;
  double acc = 0;
  for (double v : losses) acc += (v - s.mean) * (v - s.mean);
  s.variance = acc / n;
  std::vector<double> sorted = losses;
  std::sort(sorted.begin(), sorted.end());
  size_t m = sorted.size();
  s.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return s;
}

}  // namespace

Trajectory fuse_streams(const Trajectory& a, const Trajectory& b) {
  check_aligned(a, b, "fuse_streams");
  Trajectory out;
  out.samples.reserve(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    TrajectorySample s;
    s.t = a.samples[i].t;
    s.pose = fuse_pair(a.samples[i].pose, b.samples[i].pose);
    out.samples.push_back(s);
  }
  return out;
}

EvalResult evaluate(const Trajectory& est, const Trajectory& gt) {
  check_aligned(est, gt, "evaluate");
  EvalResult r;
  r.losses.reserve(est.size());
  for (size_t i = 0; i < est.size(); ++i) {
    r.losses.push_back(translation_error(est.samples[i].pose.t, gt.samples[i].pose.t));
  }
  r.summary = summarize_losses(r.losses);
  return r;
}

FusionReport run_fusion_study(const FusionStudyConfig& config) {
  if (!(config.hist_bin_m > 0)) {
    raise(Errc::invalid_argument, "hist_bin_m must be positive");
  }
  Trajectory truth =
      gen_trajectory(config.radius_m, config.speed_mps, config.fps, config.duration_s);
  Trajectory gps_stream = corrupt(truth, config.gps);
  Trajectory dnn_stream = corrupt(truth, config.dnn);
  Trajectory fused = fuse_streams(gps_stream, dnn_stream);
  if (config.gps_orientation_absent) {
    for (size_t i = 0; i < fused.size(); ++i) {
      fused.samples[i].pose.q = dnn_stream.samples[i].pose.q;
    }
  }

  FusionReport report;
  EvalResult g = evaluate(gps_stream, truth);
  EvalResult d = evaluate(dnn_stream, truth);
  EvalResult f = evaluate(fused, truth);
  report.gps_loss = std::move(g.losses);
  report.dnn_loss = std::move(d.losses);
  report.fused_loss = std::move(f.losses);
  report.gps = g.summary;
  report.dnn = d.summary;
  report.fused = f.summary;

  double max_loss = 0;
  for (const auto* v : {&report.gps_loss, &report.dnn_loss, &report.fused_loss}) {
    for (double x : *v) max_loss = std::max(max_loss, x);
  }
  size_t bins = static_cast<size_t>(std::floor(max_loss / config.hist_bin_m)) + 1;
  report.hist.resize(bins);
  for (size_t i = 0; i < bins; ++i) {
    report.hist[i].lo = static_cast<double>(i) * config.hist_bin_m;
    report.hist[i].hi = static_cast<double>(i + 1) * config.hist_bin_m;
  }
  auto fill = [&](const std::vector<double>& losses, auto member) {
    for (double x : losses) {
      size_t b = std::min(bins - 1, static_cast<size_t>(std::floor(x / config.hist_bin_m)));
      report.hist[b].*member += 1;
    }
  };
  fill(report.gps_loss, &FusionReport::HistRow::gps);
  fill(report.dnn_loss, &FusionReport::HistRow::dnn);
  fill(report.fused_loss, &FusionReport::HistRow::fused);
  return report;
}

namespace {

NoiseModel noise_from_json(const nlohmann::json& j, std::vector<std::string>& bad,
                           const std::string& prefix) {
  NoiseModel m;
  auto want = [&](const char* key, double& out) {
    if (!j.contains(key) || !j[key].is_number()) {
      bad.push_back(prefix + "." + key);
      return;
    }
    out = j[key].get<double>();
  };
  want("sigma_m", m.sigma_m);
  want("outlier_prob", m.outlier_prob);
  want("outlier_scale", m.outlier_scale);
  want("orientation_sigma_deg", m.orientation_sigma_deg);
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
    bad.push_back(prefix + ".seed");
  } else {
    m.seed = j["seed"].get<uint64_t>();
  }
  return m;
}

}  // namespace

FusionStudyConfig load_fusion_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open fusion config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::parse_error, "fusion config: " + std::string(e.what()));
  }
  std::vector<std::string> bad;
  FusionStudyConfig cfg;
  if (!j.contains("trajectory") || !j["trajectory"].is_object()) {
    bad.push_back("trajectory");
  } else {
    const auto& t = j["trajectory"];
    auto want = [&](const char* key, double& out) {
      if (!t.contains(key) || !t[key].is_number()) {
        bad.push_back(std::string("trajectory.") + key);
        return;
      }
      out = t[key].get<double>();
    };
    want("radius_m", cfg.radius_m);
    want("speed_mps", cfg.speed_mps);
    want("fps", cfg.fps);
    want("duration_s", cfg.duration_s);
  }
  if (!j.contains("gps") || !j["gps"].is_object()) {
    bad.push_back("gps");
  } else {
    cfg.gps = noise_from_json(j["gps"], bad, "gps");
    cfg.gps_orientation_absent =
        j["gps"].value("orientation", std::string("absent")) == "absent";
  }
  if (!j.contains("dnn") || !j["dnn"].is_object()) {
    bad.push_back("dnn");
  } else {
    cfg.dnn = noise_from_json(j["dnn"], bad, "dnn");
  }
  if (j.contains("hist_bin_m")) {
    if (!j["hist_bin_m"].is_number()) {
      bad.push_back("hist_bin_m");
    } else {
      cfg.hist_bin_m = j["hist_bin_m"].get<double>();
    }
  }
  if (!bad.empty()) {
    std::string msg = "fusion config missing or ill-typed fields:";
    for (const auto& f : bad) msg += " " + f;
    raise(Errc::validation_error, msg);
  }
  return cfg;
}

void save_fusion_report(const FusionReport& report, const std::string& out_prefix) {
  {
    std::ofstream out(out_prefix + "losses.csv");
    if (!out) raise(Errc::io_error, "cannot write " + out_prefix + "losses.csv");
    out << "frame,gps,dnn,fused\n";
    char buf[160];
    for (size_t i = 0; i < report.gps_loss.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g", i, report.gps_loss[i],
                    report.dnn_loss[i], report.fused_loss[i]);
      out << buf << '\n';
    }
  }
  {
    std::ofstream out(out_prefix + "summary.csv");
    if (!out) raise(Errc::io_error, "cannot write " + out_prefix + "summary.csv");
    out << "stream,mean,median,variance\n";
    char buf[200];
    auto row = [&](const char* name, const StreamSummary& s) {
      std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g", name, s.mean, s.median,
                    s.variance);
      out << buf << '\n';
    };
    row("gps", report.gps);
    row("dnn", report.dnn);
    row("fused", report.fused);
  }
  {
    std::ofstream out(out_prefix + "hist.csv");
    if (!out) raise(Errc::io_error, "cannot write " + out_prefix + "hist.csv");
    out << "bin_lo,bin_hi,gps,dnn,fused\n";
    char buf[200];
    for (const auto& h : report.hist) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%llu,%llu,%llu", h.lo, h.hi,
                    static_cast<unsigned long long>(h.gps),
                    static_cast<unsigned long long>(h.dnn),
                    static_cast<unsigned long long>(h.fused));
      out << buf << '\n';
    }
  }
}

}  // namespace splitreloc
