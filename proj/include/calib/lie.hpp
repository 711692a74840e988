// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace calib {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Angle below which exp/log switch to their series expansions.
inline constexpr double kSmallAngle = 1e-8;
// Orthonormality / determinant tolerance for rotation matrices.
inline constexpr double kRotationTol = 1e-9;

/// se(3) increment: translation part `v` in meters, rotation part `omega`
/// as an axis-angle vector in radians (magnitude = angle).
struct Se3Params {
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();

  static Se3Params Zero() { return {}; }

  Vec6 vector() const {
    Vec6 x;
    x << v, omega;
    return x;
  }
  static Se3Params FromVector(const Vec6& x) {
    return {x.head<3>(), x.tail<3>()};
  }

  bool allFinite() const { return v.allFinite() && omega.allFinite(); }
};

/// Skew-symmetric matrix of w, i.e. hat(w) * x == w.cross(x).
inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  // clang-format off
  m <<     0, -w.z(),  w.y(),
       w.z(),      0, -w.x(),
      -w.y(),  w.x(),      0;
  // clang-format on
  return m;
}

inline Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

/// A member of SO(3). Construction through fromMatrix() validates
/// orthonormality and det = +1; the algebra below produces valid instances
/// by construction.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Mat3::Identity()) {}

  static RotationMatrix Identity() { return RotationMatrix(); }

  /// Validating factory. Throws std::invalid_argument if m is not a
  /// rotation within kRotationTol.
  static RotationMatrix fromMatrix(const Mat3& m) {
    if (!m.allFinite()) {
      throw std::invalid_argument("RotationMatrix: non-finite entries");
    }
    const double ortho_err = (m.transpose() * m - Mat3::Identity()).norm();
    if (ortho_err > kRotationTol) {
      throw std::invalid_argument("RotationMatrix: R^T R != I (error " +
                                  std::to_string(ortho_err) + ")");
    }
    const double det_err = std::abs(m.determinant() - 1.0);
    if (det_err > kRotationTol) {
      throw std::invalid_argument("RotationMatrix: det(R) != 1 (error " +
                                  std::to_string(det_err) + ")");
    }
    return RotationMatrix(m, Unchecked{});
  }

  /// Skips validation; for internal use where the result is a rotation by
  /// construction.
  static RotationMatrix fromMatrixUnchecked(const Mat3& m) {
    return RotationMatrix(m, Unchecked{});
  }

  const Mat3& matrix() const { return m_; }

  RotationMatrix transposed() const {
    return RotationMatrix(m_.transpose(), Unchecked{});
  }

  Vec3 operator*(const Vec3& p) const { return m_ * p; }
  RotationMatrix operator*(const RotationMatrix& o) const {
    return RotationMatrix(m_ * o.m_, Unchecked{});
  }

 private:
  struct Unchecked {};
  RotationMatrix(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// Rodrigues formula: exp of an axis-angle vector. Below kSmallAngle the
/// second-order series is used so the vanishing norm never divides.
inline RotationMatrix expSo3(const Vec3& omega) {
  if (!omega.allFinite()) {
    throw std::invalid_argument("expSo3: non-finite input");
  }
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 w = hat(omega);
  Mat3 r;
  if (theta < kSmallAngle) {
    r = Mat3::Identity() + w + 0.5 * w * w;
  } else {
    r = Mat3::Identity() + (std::sin(theta) / theta) * w +
        ((1.0 - std::cos(theta)) / theta2) * w * w;
  }
  return RotationMatrix::fromMatrixUnchecked(r);
}

/// Inverse of expSo3, canonical output with ||omega|| <= pi. Near the
/// half-turn the axis is recovered from the dominant diagonal of the
/// symmetric part; at exactly pi the axis sign is arbitrary.
inline Vec3 logSo3(const RotationMatrix& rot) {
  const Mat3& r = rot.matrix();
  const Vec3 axis_sin = vee(r - r.transpose()) * 0.5;  // sin(theta) * axis
  const double s = axis_sin.norm();
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  // atan2 stays well conditioned at both ends of [0, pi], unlike acos.
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    return axis_sin;  // omega + O(theta^3)
  }
  if (M_PI - theta > 1e-4) {
    // s is sin(theta) to machine precision, so theta/s * axis_sin has
    // norm exactly theta.
    return (theta / s) * axis_sin;
  }

  // Near pi the skew part vanishes; pull the axis out of
  // R + R^T = 2 I + 2 (1 - cos theta) (n n^T - I).
  const double one_minus_cos = 1.0 - c;
  const Mat3 sym = 0.5 * (r + r.transpose());
  const Mat3 nnt =
      Mat3::Identity() + (sym - Mat3::Identity()) / one_minus_cos;
  int j = 0;
  nnt.diagonal().maxCoeff(&j);
  Vec3 n = nnt.col(j) / std::sqrt(std::max(nnt(j, j), 1e-300));
  // Fix the sign so the result stays consistent with R's skew part when
  // theta < pi; at exactly pi both signs are equivalent.
  if (n.dot(axis_sin) < 0.0) {
    n = -n;
  }
  return theta * n;
}

/// Rigid-body transform: p_out = R * p + t.
struct RigidTransform {
  RotationMatrix rotation;
  Vec3 translation = Vec3::Zero();

  static RigidTransform Identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

/// Assembles a transform from an se(3) increment: R = exp(omega), t = v.
/// The translation is used directly; no V-matrix correction is applied.
inline RigidTransform toTransform(const Se3Params& xi) {
  if (!xi.allFinite()) {
    throw std::invalid_argument("toTransform: non-finite input");
  }
  return {expSo3(xi.omega), xi.v};
}

/// Composition: the result applies b first, then a.
inline RigidTransform compose(const RigidTransform& a,
                              const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline RigidTransform inverse(const RigidTransform& t) {
  const RotationMatrix rt = t.rotation.transposed();
  return {rt, -(rt * t.translation)};
}

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace calib
