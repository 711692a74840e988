// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics: geodesic rotation distance, translation error,
// per-axis decompositions, and batch aggregation.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "calib/lie.hpp"

namespace calib {

/// Geodesic distance on SO(3): Frobenius norm of log(Ri^T Rj) over sqrt(2),
/// which equals the relative rotation angle.
inline double geodesicDistance(const RotationMatrix& ri,
                               const RotationMatrix& rj) {
  const RotationMatrix rel = ri.transposed() * rj;
  return hat(logSo3(rel)).norm() / std::sqrt(2.0);
}

inline double translationError(const Vec3& xi, const Vec3& xj) {
  if (!xi.allFinite() || !xj.allFinite()) {
    throw std::invalid_argument("translationError: non-finite input");
  }
  return (xi - xj).norm();
}

struct EulerZyx {
  double yaw = 0;    // about z
  double pitch = 0;  // about y
  double roll = 0;   // about x
};

inline RotationMatrix eulerCompose(const EulerZyx& e) {
  return expSo3(Vec3(0, 0, e.yaw)) * expSo3(Vec3(0, e.pitch, 0)) *
         expSo3(Vec3(e.roll, 0, 0));
}

/// Z-Y-X intrinsic decomposition: R = Rz(yaw) Ry(pitch) Rx(roll).
/// Returns nullopt within 1e-6 rad of gimbal lock (|pitch| -> pi/2).
inline std::optional<EulerZyx> eulerDecompose(const RotationMatrix& rot) {
  const Mat3& r = rot.matrix();
  const double sin_pitch = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sin_pitch);
  if (std::abs(pitch) >= M_PI / 2 - 1e-6) return std::nullopt;
  return EulerZyx{std::atan2(r(1, 0), r(0, 0)), pitch,
                  std::atan2(r(2, 1), r(2, 2))};
}

/// Errors of one calibration estimate against ground truth. Per-axis
/// rotation components come from the Euler decomposition of the residual
/// rotation Rgt^T Rest, which stays clear of gimbal lock for any
/// sub-quarter-turn error; per-axis fields are signed, aggregation takes
/// magnitudes.
struct CalibrationError {
  double geodesic_rot = 0;     // radians, in [0, pi]
  double translation_err = 0;  // meters
  Vec3 per_axis_rot = Vec3::Zero();    // (yaw, pitch, roll) residual, radians
  Vec3 per_axis_trans = Vec3::Zero();  // estimate - truth, meters
};

inline CalibrationError computeError(const RigidTransform& estimate,
                                     const RigidTransform& truth) {
  CalibrationError e;
  e.geodesic_rot = geodesicDistance(truth.rotation, estimate.rotation);
  e.translation_err = translationError(estimate.translation, truth.translation);
  const RotationMatrix residual = truth.rotation.transposed() * estimate.rotation;
  if (const auto euler = eulerDecompose(residual)) {
    e.per_axis_rot = Vec3(euler->yaw, euler->pitch, euler->roll);
  } else {
    // Residual at gimbal lock (error >= ~90 deg): per-axis split undefined,
    // fall back to the axis-angle components.
    e.per_axis_rot = logSo3(residual);
  }
  e.per_axis_trans = estimate.translation - truth.translation;
  return e;
}

struct HistogramSpec {
  // Bucket edges, ascending; counts cover [0,e0), [e0,e1), ..., [last,inf).
  std::vector<double> rot_edges_deg = {0.1, 0.2, 0.5, 1, 2, 5, 10, 20};
  std::vector<double> trans_edges_m = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
};

struct AggregateSummary {
  long count = 0;
  Vec3 mae_rot = Vec3::Zero();    // per-axis mean |residual|, radians
  Vec3 mae_trans = Vec3::Zero();  // per-axis mean |residual|, meters
  double mean_geodesic = 0, median_geodesic = 0;      // radians
  double mean_translation = 0, median_translation = 0;  // meters
  HistogramSpec histogram_spec;
  std::vector<long> rot_histogram;
  std::vector<long> trans_histogram;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<long> histogram(const std::vector<double>& values,
                                   const std::vector<double>& edges) {
  std::vector<long> counts(edges.size() + 1, 0);
  for (double v : values) {
    const std::size_t b =
        std::upper_bound(edges.begin(), edges.end(), v) - edges.begin();
    ++counts[b];
  }
  return counts;
}

}  // namespace detail

inline AggregateSummary aggregate(const std::vector<CalibrationError>& errors,
                                  const HistogramSpec& spec = {}) {
  if (errors.empty()) {
    throw std::invalid_argument("aggregate: empty error list");
  }
  AggregateSummary s;
  s.count = long(errors.size());
  s.histogram_spec = spec;

  std::vector<double> geo, trans;
  geo.reserve(errors.size());
  trans.reserve(errors.size());
  for (const auto& e : errors) {
    s.mae_rot += e.per_axis_rot.cwiseAbs();
    s.mae_trans += e.per_axis_trans.cwiseAbs();
    s.mean_geodesic += e.geodesic_rot;
    s.mean_translation += e.translation_err;
    geo.push_back(e.geodesic_rot);
    trans.push_back(e.translation_err);
  }
  const double n = double(errors.size());
  s.mae_rot /= n;
  s.mae_trans /= n;
  s.mean_geodesic /= n;
  s.mean_translation /= n;
  s.median_geodesic = detail::median(geo);
  s.median_translation = detail::median(trans);

  std::vector<double> geo_deg(geo.size());
  std::transform(geo.begin(), geo.end(), geo_deg.begin(), rad2deg);
  s.rot_histogram = detail::histogram(geo_deg, spec.rot_edges_deg);
  s.trans_histogram = detail::histogram(trans, spec.trans_edges_m);
  return s;
}

}  // namespace calib
