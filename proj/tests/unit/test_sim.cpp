#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "helpers.hpp"
#include "splitreloc/rng.hpp"
#include "splitreloc/sim.hpp"

using namespace splitreloc;
using test_helpers::thrown_code;

namespace {

constexpr double kPi = 3.14159265358979323846;

SimScenario constant_scenario(double fps, double service_s, double duration_s,
                              DropPolicy policy) {
  SimScenario s;
  s.fps = fps;
  s.duration_s = duration_s;
  s.policy = policy;
  s.service.kind = ServiceKind::constant;
  s.service.mean_s = service_s;
  return s;
}

// Straight-line route along +x with the given spacing.
Trajectory line_route(size_t n, double spacing) {
  Trajectory t;
  for (size_t i = 0; i < n; ++i) {
    t.samples.push_back({static_cast<double>(i),
                         {{spacing * static_cast<double>(i), 0, 0}, {1, 0, 0, 0}}});
  }
  return t;
}

// Closed-form acceptance recurrence for constant service: the next accepted
// arrival is the first grid instant at or after the previous completion.
uint64_t recurrence_count(double fps, double service_s, double duration_s) {
  uint64_t produced = 0;
  uint64_t k = 0;
  while (true) {
    double t = static_cast<double>(k) / fps;
    if (!(t < duration_s)) break;
    ++produced;
    double completion = t + service_s;
    uint64_t next = k + 1;
    while (static_cast<double>(next) / fps < completion) ++next;
    k = next;
  }
  return produced;
}

}  // namespace

TEST_CASE("30 fps with 1 s constant service drops 290 of 300 frames") {
  SimReport r = simulate_realtime(constant_scenario(30, 1.0, 10, DropPolicy::drop_if_busy));
  CHECK(r.frames_captured == 300);
  CHECK(r.poses_produced == 10);
  CHECK(r.frames_dropped == 290);
  CHECK(r.frames_captured == r.poses_produced + r.frames_dropped);
  REQUIRE(r.pose_timestamps.size() == 10);
  CHECK(r.pose_timestamps.front() == doctest::Approx(1.0));
  CHECK(r.pose_timestamps.back() == doctest::Approx(10.0));
  CHECK(r.mean_service_s == doctest::Approx(1.0));
}

TEST_CASE("a 0.25 s service on the 30 fps grid accepts every 8th tick") {
  // completion at t+0.25 lands between grid points; the next arrival is
  // ceil(7.5)/30 after the acceptance, so the period is 8/30 s and
  // floor(10 / (8/30)) = 37 full periods fit after the first acceptance.
  SimReport r = simulate_realtime(constant_scenario(30, 0.25, 10, DropPolicy::drop_if_busy));
  CHECK(r.poses_produced == 38);
  CHECK(r.frames_dropped == 300 - 38);
}

TEST_CASE("an arrival exactly at a completion instant is accepted") {
  // service = 2 grid ticks: completions land exactly on arrivals
  SimReport r = simulate_realtime(
      constant_scenario(30, 2.0 / 30.0, 1.0, DropPolicy::drop_if_busy));
  CHECK(r.frames_captured == 30);
  CHECK(r.poses_produced == 15);  // every other tick
  CHECK(r.frames_dropped == 15);
}

TEST_CASE("block policy paces the source by the service time") {
  SimReport r = simulate_realtime(constant_scenario(30, 0.5, 10, DropPolicy::block));
  CHECK(r.poses_produced == 20);
  CHECK(r.frames_dropped == 0);
  CHECK(r.frames_captured == 20);

  // runtime-style example: five 0.2 s frames fit a 0.85 s capture window
  // and finish in about a second of wall time
  r = simulate_realtime(constant_scenario(30, 0.2, 0.85, DropPolicy::block));
  CHECK(r.poses_produced == 5);
  CHECK(r.frames_dropped == 0);
  // wall time is the capture-grid quantization of 5 x 0.2 s
  CHECK(r.pose_timestamps.back() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("simulate agrees exactly with the acceptance recurrence") {
  SplitMix64 rng(41);
  for (int i = 0; i < 200; ++i) {
    double fps = 5.0 + std::floor(rng.next_double() * 56.0);
    double service = 0.01 + rng.next_double() * 0.8;
    double duration = 1.0 + rng.next_double() * 6.0;
    SimReport r = simulate_realtime(
        constant_scenario(fps, service, duration, DropPolicy::drop_if_busy));
    CHECK(r.poses_produced == recurrence_count(fps, service, duration));
    CHECK(r.frames_captured == r.poses_produced + r.frames_dropped);
    // services never overlap, so they fit the wall plus one trailing service
    CHECK(static_cast<double>(r.poses_produced) * r.mean_service_s <=
          duration + service + 1e-9);
  }
}

TEST_CASE("lognormal service is seed-deterministic") {
  SimScenario s = constant_scenario(30, 0.3, 20, DropPolicy::drop_if_busy);
  s.service.kind = ServiceKind::lognormal;
  s.service.sigma = 0.5;
  s.service.seed = 9;
  SimReport a = simulate_realtime(s);
  SimReport b = simulate_realtime(s);
  CHECK(a.poses_produced == b.poses_produced);
  CHECK(a.pose_timestamps == b.pose_timestamps);
  s.service.seed = 10;
  SimReport c = simulate_realtime(s);
  CHECK(a.pose_timestamps != c.pose_timestamps);
  // mean parameterization sanity: sampled means near mean_s
  CHECK(a.mean_service_s == doctest::Approx(0.3).epsilon(0.25));
}

TEST_CASE("replay processes sequentially within the wall budget") {
  Trajectory route = line_route(3000, 0.3);
  ReplayReport slow = simulate_replay(3000, 1.0, 300, route);
  CHECK(slow.frames_processed == 300);
  CHECK(slow.covered_distance_m == doctest::Approx(89.7).epsilon(1e-9));

  ReplayReport fast = simulate_replay(3000, 0.25, 300, route);
  CHECK(fast.frames_processed == 1200);
  CHECK(fast.covered_distance_m == doctest::Approx(359.7).epsilon(1e-9));

  // degenerate: one frame costs at least the whole wall
  ReplayReport one = simulate_replay(3000, 400.0, 300, route);
  CHECK(one.frames_processed == 1);
  CHECK(one.covered_distance_m == 0.0);

  CHECK(thrown_code([&] { simulate_replay(5000, 1.0, 300, route); }) ==
        Errc::invalid_argument);
}

TEST_CASE("covered_distance sums consecutive translation distances") {
  Trajectory route = line_route(20, 0.5);
  CHECK(covered_distance(route, 1) == 0.0);
  CHECK(covered_distance(route, 11) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(thrown_code([&] { covered_distance(route, 0); }) == Errc::invalid_argument);
  CHECK(thrown_code([&] { covered_distance(route, 21); }) == Errc::invalid_argument);

  double prev = -1.0;
  for (size_t n = 1; n <= route.size(); ++n) {
    double d = covered_distance(route, n);
    CHECK(d >= prev);
    prev = d;
  }
}

TEST_CASE("covered_distance of a sampled circle matches the chord sum") {
  Trajectory circle;
  for (int i = 0; i < 360; ++i) {
    double a = 2.0 * kPi * i / 360.0;
    circle.samples.push_back(
        {static_cast<double>(i), {{std::cos(a), std::sin(a), 0}, {1, 0, 0, 0}}});
  }
  double expected = 359.0 * 2.0 * std::sin(kPi / 360.0);
  CHECK(covered_distance(circle, 360) == doctest::Approx(expected).epsilon(1e-12));
  // chordal sum underestimates the arc by well under 0.1%
  CHECK(std::abs(expected - 2.0 * kPi * (359.0 / 360.0)) / (2.0 * kPi) < 1e-3);
}

TEST_CASE("realtime simulation reports coverage through the last accepted frame") {
  SimScenario s = constant_scenario(30, 1.0, 10, DropPolicy::drop_if_busy);
  s.route = line_route(300, 0.1);
  SimReport r = simulate_realtime(s);
  REQUIRE(r.covered_distance_m.has_value());
  // last accepted arrival is frame 270 (t = 9.0); 270 segments of 0.1 m
  CHECK(*r.covered_distance_m == doctest::Approx(27.0).epsilon(1e-9));

  s.route = line_route(100, 0.1);  // shorter than the 300 captured frames
  CHECK(thrown_code([&] { simulate_realtime(s); }) == Errc::invalid_argument);
}

TEST_CASE("scenario json loads both modes and lists offending fields") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path();
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name);
    out << content;
    return (dir / name).string();
  };

  std::string rt = write("sr_rt.json", R"({
    "mode": "realtime", "fps": 30, "duration_s": 10, "policy": "drop",
    "service": {"kind": "constant", "mean_s": 1.0, "sigma": 0, "seed": 1}
  })");
  SimConfig cfg = load_sim_config_json(rt);
  CHECK(cfg.mode == SimConfig::Mode::realtime);
  CHECK(cfg.scenario.fps == 30.0);

  std::string rp = write("sr_rp.json", R"({
    "mode": "replay", "frame_count": 100, "wall_time_s": 60,
    "route_csv": "route.csv",
    "runs": [{"name": "local", "per_frame_s": 1.0}]
  })");
  cfg = load_sim_config_json(rp);
  CHECK(cfg.mode == SimConfig::Mode::replay);
  CHECK(cfg.frame_count == 100);
  // relative route paths resolve against the scenario file
  CHECK(cfg.route_csv == (dir / "route.csv").string());

  std::string bad = write("sr_bad.json", R"({"mode": "realtime"})");
  try {
    load_sim_config_json(bad);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation_error);
    CHECK(std::string(e.what()).find("fps") != std::string::npos);
    CHECK(std::string(e.what()).find("service") != std::string::npos);
  }
  std::string empty = write("sr_empty.json", "{}");
  CHECK(thrown_code([&] { load_sim_config_json(empty); }) == Errc::validation_error);
}
