#include "splitreloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "splitreloc/errors.hpp"
#include "splitreloc/rng.hpp"

namespace splitreloc {

namespace {

class ServiceSampler {
 public:
  explicit ServiceSampler(const ServiceModel& model)
      : model_(model), rng_(stream_key(model.seed, 0)) {
    if (!(model.mean_s > 0.0)) raise(Errc::invalid_argument, "service mean must be positive");
    if (model.sigma < 0.0) raise(Errc::invalid_argument, "service sigma must be nonnegative");
    // mean-parameterized lognormal: mu = ln(mean) - sigma^2/2
    mu_ = std::log(model.mean_s) - 0.5 * model.sigma * model.sigma;
  }

  double next() {
    if (model_.kind == ServiceKind::constant || model_.sigma == 0.0) {
      return model_.mean_s;
    }
    return std::exp(mu_ + model_.sigma * rng_.next_gaussian());
  }

 private:
  ServiceModel model_;
  SplitMix64 rng_;
  double mu_ = 0.0;
};

void finish_report(SimReport& r, std::vector<double>& services) {
  if (!services.empty()) {
    double sum = 0;
    for (double s : services) sum += s;
    r.mean_service_s = sum / static_cast<double>(services.size());
    std::sort(services.begin(), services.end());
    size_t n = services.size();
    r.median_service_s =
        n % 2 ? services[n / 2] : 0.5 * (services[n / 2 - 1] + services[n / 2]);
  }
}

}  // namespace

SimReport simulate_realtime(const SimScenario& scenario) {
  if (!(scenario.fps > 0.0) || !(scenario.duration_s > 0.0)) {
    raise(Errc::invalid_argument, "fps and duration must be positive");
  }
  ServiceSampler sampler(scenario.service);
  SimReport report;
  std::vector<double> services;
  int64_t last_accepted = -1;

  if (scenario.policy == DropPolicy::drop_if_busy) {
    double busy_until = -1.0;
    for (uint64_t k = 0;; ++k) {
      double t = static_cast<double>(k) / scenario.fps;
      if (!(t < scenario.duration_s)) break;
      ++report.frames_captured;
      if (t >= busy_until) {  // boundary rule: arrival at completion accepted
        double s = sampler.next();
        services.push_back(s);
        busy_until = t + s;
        report.pose_timestamps.push_back(busy_until);
        ++report.poses_produced;
        last_accepted = static_cast<int64_t>(k);
      } else {
        ++report.frames_dropped;
      }
    }
  } else {
    uint64_t k = 0;
    while (true) {
      double t = static_cast<double>(k) / scenario.fps;
      if (!(t < scenario.duration_s)) break;
      ++report.frames_captured;
      double s = sampler.next();
      services.push_back(s);
      double completion = t + s;
      report.pose_timestamps.push_back(completion);
      ++report.poses_produced;
      last_accepted = static_cast<int64_t>(k);
      // next capture tick at or after completion, same comparison the
      // drop path uses so boundaries round identically
      ++k;
      while (static_cast<double>(k) / scenario.fps < completion) ++k;
    }
  }

  finish_report(report, services);
  if (scenario.route) {
    if (scenario.route->size() < report.frames_captured) {
      raise(Errc::invalid_argument,
            "route shorter than the captured frame count");
    }
    if (last_accepted >= 0) {
      report.covered_distance_m =
          covered_distance(*scenario.route, static_cast<size_t>(last_accepted) + 1);
    } else {
      report.covered_distance_m = 0.0;
    }
  }
  return report;
}

ReplayReport simulate_replay(uint64_t frame_count, double per_frame_s,
                             double wall_time_s, const Trajectory& route) {
  if (frame_count == 0 || !(per_frame_s > 0.0) || !(wall_time_s > 0.0)) {
    raise(Errc::invalid_argument, "replay needs positive frame count, per-frame time and wall time");
  }
  if (route.size() < frame_count) {
    raise(Errc::invalid_argument,
          "route has " + std::to_string(route.size()) + " poses, need " +
              std::to_string(frame_count));
  }
  // The first frame is always processed, even when it alone exceeds the wall.
  uint64_t by_time = static_cast<uint64_t>(std::floor(wall_time_s / per_frame_s));
  uint64_t processed = std::min(frame_count, std::max<uint64_t>(1, by_time));
  ReplayReport r;
  r.frames_processed = processed;
  r.per_frame_s = per_frame_s;
  r.wall_time_s = wall_time_s;
  r.covered_distance_m = covered_distance(route, processed);
  return r;
}

double covered_distance(const Trajectory& route, size_t n_processed) {
  if (n_processed < 1 || n_processed > route.size()) {
    raise(Errc::invalid_argument,
          "n_processed " + std::to_string(n_processed) + " out of range 1.." +
              std::to_string(route.size()));
  }
  double total = 0.0;
  for (size_t i = 1; i < n_processed; ++i) {
    total += translation_error(route.samples[i].pose.t, route.samples[i - 1].pose.t);
  }
  return total;
}

SimConfig load_sim_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open scenario: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::parse_error, "scenario json: " + std::string(e.what()));
  }

  std::vector<std::string> bad;
  auto want_num = [&](const nlohmann::json& o, const char* key, double& out,
                      const std::string& prefix = "") {
    if (!o.contains(key) || !o[key].is_number()) {
      bad.push_back(prefix + key);
      return;
    }
    out = o[key].get<double>();
  };

  SimConfig cfg;
  std::string mode = j.value("mode", std::string());
  if (mode == "realtime") {
    cfg.mode = SimConfig::Mode::realtime;
    want_num(j, "fps", cfg.scenario.fps);
    want_num(j, "duration_s", cfg.scenario.duration_s);
    std::string policy = j.value("policy", std::string());
    if (policy == "drop" || policy == "drop-if-busy") {
      cfg.scenario.policy = DropPolicy::drop_if_busy;
    } else if (policy == "block") {
      cfg.scenario.policy = DropPolicy::block;
    } else {
      bad.push_back("policy");
    }
    if (!j.contains("service") || !j["service"].is_object()) {
      bad.push_back("service");
    } else {
      const auto& s = j["service"];
      std::string kind = s.value("kind", std::string());
      if (kind == "constant") {
        cfg.scenario.service.kind = ServiceKind::constant;
      } else if (kind == "lognormal") {
        cfg.scenario.service.kind = ServiceKind::lognormal;
      } else {
        bad.push_back("service.kind");
      }
      want_num(s, "mean_s", cfg.scenario.service.mean_s, "service.");
      want_num(s, "sigma", cfg.scenario.service.sigma, "service.");
      if (s.contains("seed") && s["seed"].is_number_unsigned()) {
        cfg.scenario.service.seed = s["seed"].get<uint64_t>();
      } else if (cfg.scenario.service.kind == ServiceKind::lognormal) {
        bad.push_back("service.seed");
      }
    }
    if (j.contains("route_csv")) {
      if (!j["route_csv"].is_string()) bad.push_back("route_csv");
      else cfg.route_csv = j["route_csv"].get<std::string>();
    }
  } else if (mode == "replay") {
    cfg.mode = SimConfig::Mode::replay;
    if (!j.contains("frame_count") || !j["frame_count"].is_number_unsigned()) {
      bad.push_back("frame_count");
    } else {
      cfg.frame_count = j["frame_count"].get<uint64_t>();
    }
    want_num(j, "wall_time_s", cfg.wall_time_s);
    if (!j.contains("route_csv") || !j["route_csv"].is_string()) {
      bad.push_back("route_csv");
    } else {
      cfg.route_csv = j["route_csv"].get<std::string>();
    }
    if (!j.contains("runs") || !j["runs"].is_array() || j["runs"].empty()) {
      bad.push_back("runs");
    } else {
      for (size_t i = 0; i < j["runs"].size(); ++i) {
        const auto& r = j["runs"][i];
        ReplayRunSpec spec;
        std::string prefix = "runs[" + std::to_string(i) + "].";
        if (!r.is_object() || !r.contains("name") || !r["name"].is_string()) {
          bad.push_back(prefix + "name");
        } else {
          spec.name = r["name"].get<std::string>();
        }
        if (r.is_object()) want_num(r, "per_frame_s", spec.per_frame_s, prefix);
        cfg.runs.push_back(std::move(spec));
      }
    }
  } else {
    bad.push_back("mode");
  }
  if (!bad.empty()) {
    std::string msg = "scenario missing or ill-typed fields:";
    for (const auto& f : bad) msg += " " + f;
    raise(Errc::validation_error, msg);
  }
  if (!cfg.route_csv.empty()) {
    std::filesystem::path p(cfg.route_csv);
    if (p.is_relative()) {
      cfg.route_csv = (std::filesystem::path(path).parent_path() / p).string();
    }
  }
  return cfg;
}

}  // namespace splitreloc
