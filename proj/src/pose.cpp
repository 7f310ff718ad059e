#include "splitreloc/pose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "splitreloc/errors.hpp"

namespace splitreloc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::parse_error: return "parse error";
    case Errc::validation_error: return "validation error";
    case Errc::degenerate_fusion: return "degenerate fusion";
    case Errc::insufficient_data: return "insufficient data";
    case Errc::degenerate_fit: return "degenerate fit";
    case Errc::alignment_error: return "alignment error";
    case Errc::protocol_error: return "protocol error";
    case Errc::integrity_error: return "integrity error";
    case Errc::incomplete_frame: return "incomplete frame";
    case Errc::shape_error: return "shape error";
    case Errc::numeric_error: return "numeric error";
    case Errc::connection_error: return "connection error";
    case Errc::remote_error: return "remote error";
    case Errc::io_error: return "io error";
  }
  return "error";
}

Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }

double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

double norm(const Quaternion& q) { return std::sqrt(dot(q, q)); }

bool is_finite(const Quaternion& q) {
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) &&
         std::isfinite(q.z);
}

bool is_unit(const Quaternion& q, double tol) {
  return is_finite(q) && std::abs(dot(q, q) - 1.0) <= tol;
}

Quaternion normalized(const Quaternion& q) {
  double n = norm(q);
  if (!(n > 0.0) || !std::isfinite(n)) {
    raise(Errc::invalid_argument, "cannot normalize zero or non-finite quaternion");
  }
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quaternion negated(const Quaternion& q) { return {-q.w, -q.x, -q.y, -q.z}; }

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion quat_from_yaw(double yaw_rad) {
  return {std::cos(0.5 * yaw_rad), 0.0, 0.0, std::sin(0.5 * yaw_rad)};
}

double norm(const LogQuat& v) {
  return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

bool is_finite(const LogQuat& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

LogQuat quat_log(const Quaternion& q_in) {
  if (!is_finite(q_in)) raise(Errc::invalid_argument, "quat_log: non-finite input");
  if (!is_unit(q_in)) raise(Errc::invalid_argument, "quat_log: input not unit to 1e-6");
  Quaternion q = q_in.w < 0.0 ? negated(q_in) : q_in;
  double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (vn < 1e-12) return {0.0, 0.0, 0.0};
  double half_angle = std::acos(std::clamp(q.w, -1.0, 1.0));
  double s = half_angle / vn;
  return {s * q.x, s * q.y, s * q.z};
}

Quaternion quat_exp(const LogQuat& v) {
  if (!is_finite(v)) raise(Errc::invalid_argument, "quat_exp: non-finite input");
  double n = norm(v);
  if (n < 1e-12) return {1.0, 0.0, 0.0, 0.0};
  double s = std::sin(n) / n;
  return {std::cos(n), s * v.x, s * v.y, s * v.z};
}

double translation_error(const Vec3& a, const Vec3& b) {
  if (!is_finite(a) || !is_finite(b)) {
    raise(Errc::invalid_argument, "translation_error: non-finite input");
  }
  return norm(a - b);
}

double rotation_error_deg(const Quaternion& p, const Quaternion& q) {
  if (!is_unit(p) || !is_unit(q)) {
    raise(Errc::invalid_argument, "rotation_error_deg: input not unit to 1e-6");
  }
  double d = std::min(1.0, std::abs(dot(p, q)));
  return 2.0 * std::acos(d) * 180.0 / kPi;
}

Pose fuse_pair(const Pose& a, const Pose& b) {
  if (!is_unit(a.q) || !is_unit(b.q)) {
    raise(Errc::invalid_argument, "fuse_pair: orientation not unit to 1e-6");
  }
  if (!is_finite(a.t) || !is_finite(b.t)) {
    raise(Errc::invalid_argument, "fuse_pair: non-finite translation");
  }
  Quaternion bq = dot(a.q, b.q) < 0.0 ? negated(b.q) : b.q;
  Quaternion sum{a.q.w + bq.w, a.q.x + bq.x, a.q.y + bq.y, a.q.z + bq.z};
  double n = norm(sum);
  if (n < 1e-9) {
    raise(Errc::degenerate_fusion, "fuse_pair: summed quaternion norm below 1e-9");
  }
  Pose fused;
  fused.t = 0.5 * (a.t + b.t);
  fused.q = {sum.w / n, sum.x / n, sum.y / n, sum.z / n};
  return fused;
}

namespace {

// Shepperd's method, branch on the largest of trace/diagonal. R is row-major.
Quaternion quat_from_rotation_matrix(const double r[9]) {
  double trace = r[0] + r[4] + r[8];
  Quaternion q;
  if (trace > 0.0) {
    double s = std::sqrt(trace + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (r[7] - r[5]) / s;
    q.y = (r[2] - r[6]) / s;
    q.z = (r[3] - r[1]) / s;
  } else if (r[0] > r[4] && r[0] > r[8]) {
    double s = std::sqrt(1.0 + r[0] - r[4] - r[8]) * 2.0;
    q.w = (r[7] - r[5]) / s;
    q.x = 0.25 * s;
    q.y = (r[1] + r[3]) / s;
    q.z = (r[2] + r[6]) / s;
  } else if (r[4] > r[8]) {
    double s = std::sqrt(1.0 + r[4] - r[0] - r[8]) * 2.0;
    q.w = (r[2] - r[6]) / s;
    q.x = (r[1] + r[3]) / s;
    q.y = 0.25 * s;
    q.z = (r[5] + r[7]) / s;
  } else {
    double s = std::sqrt(1.0 + r[8] - r[0] - r[4]) * 2.0;
    q.w = (r[3] - r[1]) / s;
    q.x = (r[2] + r[6]) / s;
    q.y = (r[5] + r[7]) / s;
    q.z = 0.25 * s;
  }
  q = normalized(q);
  return q.w < 0.0 ? negated(q) : q;
}

}  // namespace

Pose parse_homogeneous_matrix(std::string_view text) {
  std::istringstream in{std::string(text)};
  double m[16];
  for (int i = 0; i < 16; ++i) {
    if (!(in >> m[i])) {
      raise(Errc::parse_error,
            "homogeneous matrix: expected 16 reals, got " + std::to_string(i));
    }
  }
  std::string extra;
  if (in >> extra) {
    raise(Errc::parse_error, "homogeneous matrix: trailing token '" + extra + "'");
  }
  for (int i = 0; i < 16; ++i) {
    if (!std::isfinite(m[i])) {
      raise(Errc::parse_error, "homogeneous matrix: non-finite entry");
    }
  }
  const double last_row_ref[4] = {0.0, 0.0, 0.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    if (std::abs(m[12 + i] - last_row_ref[i]) > 1e-6) {
      raise(Errc::validation_error, "homogeneous matrix: last row is not (0,0,0,1)");
    }
  }
  double r[9] = {m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]};
  // max-norm of R^T R - I
  double max_dev = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double g = r[0 * 3 + i] * r[0 * 3 + j] + r[1 * 3 + i] * r[1 * 3 + j] +
                 r[2 * 3 + i] * r[2 * 3 + j];
      max_dev = std::max(max_dev, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  if (max_dev > 1e-4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", max_dev);
    raise(Errc::validation_error,
          std::string("homogeneous matrix: rotation block not orthonormal, |R^T R - I| = ") + buf);
  }
  double det = r[0] * (r[4] * r[8] - r[5] * r[7]) -
               r[1] * (r[3] * r[8] - r[5] * r[6]) +
               r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (det < 0.0) {
    raise(Errc::validation_error, "homogeneous matrix: rotation block is a reflection");
  }
  Pose p;
  p.t = {m[3], m[7], m[11]};
  p.q = quat_from_rotation_matrix(r);
  return p;
}

}  // namespace splitreloc
