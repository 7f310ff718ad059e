#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "splitreloc/pose.hpp"

using namespace splitreloc;
using test_helpers::random_unit_quat;
using test_helpers::thrown_code;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("quat_log on the identity is zero") {
  LogQuat v = quat_log(Quaternion{1, 0, 0, 0});
  CHECK(v.x == 0.0);
  CHECK(v.y == 0.0);
  CHECK(v.z == 0.0);
}

TEST_CASE("quat_log of a 90 degree yaw is pi/4 about z") {
  double s = std::sqrt(0.5);
  LogQuat v = quat_log(Quaternion{s, 0, 0, s});
  CHECK(v.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.z == doctest::Approx(0.78539816).epsilon(1e-8));

  // cross-check against the matrix route: parse the same rotation as a
  // homogeneous matrix and take the log of the recovered quaternion
  Pose p = parse_homogeneous_matrix("0 -1 0 0  1 0 0 0  0 0 1 0  0 0 0 1");
  LogQuat v2 = quat_log(p.q);
  CHECK(v2.z == doctest::Approx(v.z).epsilon(1e-12));
}

TEST_CASE("quat_log of a 180 degree yaw is pi/2 about z") {
  LogQuat v = quat_log(Quaternion{0, 0, 0, 1});
  CHECK(v.z == doctest::Approx(1.57079633).epsilon(1e-8));
  Quaternion back = quat_exp(v);
  CHECK(std::abs(dot(back, Quaternion{0, 0, 0, 1})) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quat_log hemisphere-normalizes and stays within pi/2") {
  SplitMix64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    Quaternion q = random_unit_quat(rng);
    LogQuat v = quat_log(q);
    CHECK(norm(v) <= kPi / 2 + 1e-12);
    LogQuat v_neg = quat_log(negated(q));
    CHECK(v.x == doctest::Approx(v_neg.x).epsilon(1e-12));
    CHECK(v.z == doctest::Approx(v_neg.z).epsilon(1e-12));
  }
}

TEST_CASE("quat_exp basics") {
  Quaternion q = quat_exp(LogQuat{0, 0, 0});
  CHECK(q.w == 1.0);
  q = quat_exp(LogQuat{0, 0, 0.78539816});
  CHECK(q.w == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK(q.z == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK(is_unit(quat_exp(LogQuat{2.5, -1.0, 7.0}), 1e-9));
}

TEST_CASE("exp/log roundtrip over seeded random unit quaternions") {
  SplitMix64 rng(7);
  for (int i = 0; i < 100000; ++i) {
    Quaternion q = random_unit_quat(rng);
    Quaternion back = quat_exp(quat_log(q));
    CHECK(std::abs(dot(back, q)) >= 1.0 - 1e-9);
  }
}

TEST_CASE("pose math rejects non-finite and non-unit input") {
  double inf = HUGE_VAL;
  CHECK(thrown_code([&] { quat_log(Quaternion{inf, 0, 0, 0}); }) ==
        Errc::invalid_argument);
  CHECK(thrown_code([&] { quat_exp(LogQuat{inf, 0, 0}); }) == Errc::invalid_argument);
  CHECK(thrown_code([&] { quat_log(Quaternion{0.5, 0, 0, 0}); }) ==
        Errc::invalid_argument);
  CHECK(thrown_code([&] {
          rotation_error_deg(Quaternion{2, 0, 0, 0}, Quaternion{1, 0, 0, 0});
        }) == Errc::invalid_argument);
  CHECK(thrown_code([&] {
          translation_error({inf, 0, 0}, {0, 0, 0});
        }) == Errc::invalid_argument);
}

TEST_CASE("translation_error examples") {
  CHECK(translation_error({0, 0, 0}, {0, 0, 0}) == 0.0);
  CHECK(translation_error({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(translation_error({1, 1, 1}, {2, 2, 2}) ==
        doctest::Approx(1.7320508).epsilon(1e-7));
  // symmetry
  CHECK(translation_error({1, 2, 3}, {-4, 0, 9}) ==
        translation_error({-4, 0, 9}, {1, 2, 3}));
}

TEST_CASE("rotation_error_deg examples and sign-flip invariance") {
  double s = std::sqrt(0.5);
  Quaternion yaw90{s, 0, 0, s};
  SplitMix64 rng(99);
  Quaternion q = random_unit_quat(rng);
  // acos amplifies the last-ulp normalization error to ~1e-6 degrees
  CHECK(rotation_error_deg(q, q) <= 1e-4);
  CHECK(rotation_error_deg(q, negated(q)) <= 1e-4);
  CHECK(rotation_error_deg(Quaternion{1, 0, 0, 0}, Quaternion{1, 0, 0, 0}) == 0.0);
  CHECK(rotation_error_deg(Quaternion{1, 0, 0, 0}, yaw90) ==
        doctest::Approx(90.0).epsilon(1e-9));
  for (int i = 0; i < 1000; ++i) {
    Quaternion a = random_unit_quat(rng);
    Quaternion b = random_unit_quat(rng);
    double e = rotation_error_deg(a, b);
    CHECK(e >= 0.0);
    CHECK(e <= 180.0);
    CHECK(rotation_error_deg(b, a) == doctest::Approx(e).epsilon(1e-12));
    CHECK(rotation_error_deg(negated(a), b) == doctest::Approx(e).epsilon(1e-12));
    CHECK(rotation_error_deg(a, negated(b)) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("fuse_pair averages translations and takes the slerp midpoint") {
  Pose a{{0, 0, 0}, {1, 0, 0, 0}};
  Pose b{{2, 0, 0}, {1, 0, 0, 0}};
  Pose f = fuse_pair(a, b);
  CHECK(f.t.x == 1.0);
  CHECK(f.q.w == 1.0);

  Pose c{{0, 0, 0}, {0, 0, 0, 1}};
  f = fuse_pair(a, c);
  CHECK(f.q.w == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK(f.q.z == doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("fuse_pair is idempotent") {
  Pose a{{1, 2, 3}, {1, 0, 0, 0}};
  Pose f = fuse_pair(a, a);
  CHECK(f.t.x == 1.0);
  CHECK(f.q.w == 1.0);
  SplitMix64 rng(5);
  for (int i = 0; i < 100; ++i) {
    Pose p{{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()},
           random_unit_quat(rng)};
    Pose g = fuse_pair(p, p);
    CHECK(g.t.x == doctest::Approx(p.t.x).epsilon(1e-15));
    CHECK(std::abs(dot(g.q, p.q)) >= 1.0 - 1e-15);
  }
}

TEST_CASE("fuse_pair commutes and sits equidistant from both inputs") {
  SplitMix64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    Pose a{{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()},
           random_unit_quat(rng)};
    Pose b{{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()},
           random_unit_quat(rng)};
    Pose ab = fuse_pair(a, b);
    Pose ba = fuse_pair(b, a);
    CHECK(translation_error(ab.t, ba.t) <= 1e-9);
    CHECK(std::abs(dot(ab.q, ba.q)) >= 1.0 - 1e-9);
    CHECK(rotation_error_deg(ab.q, a.q) ==
          doctest::Approx(rotation_error_deg(ab.q, b.q)).epsilon(1e-6));
  }
}

TEST_CASE("fuse_pair of antipodal representations returns the shared rotation") {
  SplitMix64 rng(17);
  Quaternion q = random_unit_quat(rng);
  Pose a{{0, 0, 0}, q};
  Pose b{{0, 0, 0}, negated(q)};
  Pose f = fuse_pair(a, b);
  CHECK(std::abs(dot(f.q, q)) >= 1.0 - 1e-12);
}

TEST_CASE("parse_homogeneous_matrix accepts a proper pose") {
  Pose p = parse_homogeneous_matrix(
      "1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1");
  CHECK(p.t.x == 0.0);
  CHECK(p.q.w == 1.0);

  p = parse_homogeneous_matrix("0 -1 0 1  1 0 0 2  0 0 1 3  0 0 0 1");
  CHECK(p.t.x == 1.0);
  CHECK(p.t.y == 2.0);
  CHECK(p.t.z == 3.0);
  CHECK(p.q.w == doctest::Approx(0.70710678).epsilon(1e-8));
  CHECK(p.q.z == doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("parse_homogeneous_matrix rejects malformed input") {
  CHECK(thrown_code([] { parse_homogeneous_matrix("1 2 3"); }) == Errc::parse_error);
  CHECK(thrown_code([] {
          parse_homogeneous_matrix("1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1 9");
        }) == Errc::parse_error);
  // rotation block scaled by 2: orthonormality violated
  CHECK(thrown_code([] {
          parse_homogeneous_matrix("2 0 0 0  0 2 0 0  0 0 2 0  0 0 0 1");
        }) == Errc::validation_error);
  // broken last row
  CHECK(thrown_code([] {
          parse_homogeneous_matrix("1 0 0 0  0 1 0 0  0 0 1 0  0 0 1 1");
        }) == Errc::validation_error);
  // reflection
  CHECK(thrown_code([] {
          parse_homogeneous_matrix("-1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1");
        }) == Errc::validation_error);
}
