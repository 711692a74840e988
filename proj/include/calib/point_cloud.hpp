// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "calib/lie.hpp"

namespace calib {

/// Unordered set of 3D points in meters, with optional per-point intensity
/// in [0, 1]. Intensity, when present, is index-aligned with points.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> intensity;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> p) : points(std::move(p)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool hasIntensity() const { return !intensity.empty(); }

  void checkValid() const {
    if (!intensity.empty() && intensity.size() != points.size()) {
      throw std::invalid_argument(
          "PointCloud: intensity length does not match point count");
    }
    for (const auto& p : points) {
      if (!p.allFinite()) {
        throw std::invalid_argument("PointCloud: non-finite coordinates");
      }
    }
  }

  Vec3 centroid() const {
    Vec3 sum = Vec3::Zero();
    for (const auto& p : points) sum += p;
    return points.empty() ? sum : Vec3(sum / double(points.size()));
  }
};

/// Copy of the cloud reordered along a 30-bit Morton curve over its
/// bounding box, so that contiguous index ranges are spatially compact
/// clusters. Deterministic; intensities follow their points.
inline PointCloud spatiallyOrdered(const PointCloud& c) {
  if (c.empty()) return c;
  Vec3 lo = c.points[0], hi = c.points[0];
  for (const auto& p : c.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 span = (hi - lo).cwiseMax(1e-9);

  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::uint32_t q[3];
    for (int a = 0; a < 3; ++a) {
      q[a] = std::uint32_t(
          std::min(1023.0, (c.points[i][a] - lo[a]) / span[a] * 1024.0));
    }
    std::uint64_t key = 0;
    for (int bit = 9; bit >= 0; --bit) {
      for (int a = 0; a < 3; ++a) key = (key << 1) | ((q[a] >> bit) & 1u);
    }
    keyed[i] = {key, std::uint32_t(i)};
  }
  std::stable_sort(keyed.begin(), keyed.end());

  PointCloud out;
  out.points.reserve(c.size());
  if (c.hasIntensity()) out.intensity.reserve(c.size());
  for (const auto& [key, i] : keyed) {
    out.points.push_back(c.points[i]);
    if (c.hasIntensity()) out.intensity.push_back(c.intensity[i]);
  }
  return out;
}

}  // namespace calib
