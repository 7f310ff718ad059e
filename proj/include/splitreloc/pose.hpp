#pragma once

#include <string_view>

namespace splitreloc {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);
bool is_finite(const Vec3& v);

// Scalar-first unit quaternion. q and -q denote the same rotation.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double dot(const Quaternion& a, const Quaternion& b);
double norm(const Quaternion& q);
bool is_finite(const Quaternion& q);
// |w^2+x^2+y^2+z^2 - 1| <= tol
bool is_unit(const Quaternion& q, double tol = 1e-6);
Quaternion normalized(const Quaternion& q);
Quaternion negated(const Quaternion& q);
Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);
// Rotation by angle yaw about +z.
Quaternion quat_from_yaw(double yaw_rad);

// Half-angle logarithm of a unit quaternion: a 3-vector of norm theta/2.
struct LogQuat {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double norm(const LogQuat& v);
bool is_finite(const LogQuat& v);

struct Pose {
  Vec3 t;
  Quaternion q;
};

// log of a unit quaternion, half-angle convention. The input is
// hemisphere-normalized first (w < 0 flips sign), so the result norm is
// at most pi/2. Inputs must be finite and unit to 1e-6.
LogQuat quat_log(const Quaternion& q);

// Inverse of quat_log. Accepts any finite vector; norms below 1e-12 take
// the first-order limit (identity).
Quaternion quat_exp(const LogQuat& v);

// Euclidean distance in meters.
double translation_error(const Vec3& a, const Vec3& b);

// Angular distance in degrees, in [0, 180], invariant to sign flips of
// either argument. Both inputs must be unit to 1e-6.
double rotation_error_deg(const Quaternion& p, const Quaternion& q);

// Averages two poses: component-wise mean translation, normalized sum of
// hemisphere-aligned quaternions (the slerp midpoint for two elements).
Pose fuse_pair(const Pose& a, const Pose& b);

// Parses 16 whitespace-separated reals as a row-major 4x4 homogeneous
// matrix. The rotation block must be orthonormal to 1e-4 (max-norm of
// R^T R - I) and the last row (0,0,0,1) to 1e-6.
Pose parse_homogeneous_matrix(std::string_view text);

}  // namespace splitreloc
