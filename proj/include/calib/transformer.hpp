// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// The 3D spatial transformer: lift a sparse depth map to a point cloud,
// move it rigidly, and rasterize it back into a sparse depth map.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "calib/camera.hpp"
#include "calib/depth_map.hpp"
#include "calib/lie.hpp"
#include "calib/point_cloud.hpp"

namespace calib {

/// Cantor pairing of (row, col): a collision-free scalar key per pixel,
/// used to deduplicate scatter targets.
inline std::uint64_t cantorPair(std::uint64_t a, std::uint64_t b) {
  return (a + b) * (a + b + 1) / 2 + b;
}

/// One rasterized point: which cloud index landed on which pixel, and
/// whether it had to compete for it.
struct ScatterRecord {
  int source_index = 0;  // index into the input cloud
  int target_row = 0;
  int target_col = 0;
  double depth = 0;
  bool collision = false;
};

/// Back-projects every valid pixel at its center, row-major order.
inline PointCloud lift(const SparseDepthMap& m, const CameraIntrinsics& k) {
  if (m.width() != k.width || m.height() != k.height) {
    throw std::invalid_argument("lift: map and intrinsics dimensions differ");
  }
  PointCloud cloud;
  cloud.points.reserve(std::size_t(m.validCount()));
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.validAt(r, c)) continue;
      cloud.points.push_back(
          backProject({c + 0.5, r + 0.5}, m.at(r, c), k));
    }
  }
  return cloud;
}

/// Pointwise R*p + t; order and intensity carry over.
inline PointCloud transformCloud(const PointCloud& c,
                                 const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(c.size());
  const Mat3& r = t.rotation.matrix();
  for (const auto& p : c.points) {
    out.points.emplace_back(r * p + t.translation);
  }
  out.intensity = c.intensity;
  return out;
}

/// Rasterizes a cloud into a depth map. Each in-view point claims the pixel
/// containing its projection (floor rule); when several points claim one
/// pixel the smallest depth wins, so the result is independent of input
/// order. Out-of-view points are dropped.
inline SparseDepthMap scatterWithRecords(const PointCloud& c,
                                         const CameraIntrinsics& k,
                                         std::vector<ScatterRecord>* records) {
  SparseDepthMap out(k.width, k.height);
  // Winner per pixel, keyed by the Cantor pairing of (row, col).
  std::unordered_map<std::uint64_t, ScatterRecord> winners;
  winners.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto proj = project(c.points[i], k);
    if (!proj) continue;
    const int col = int(std::floor(proj->pixel.x()));
    const int row = int(std::floor(proj->pixel.y()));
    const std::uint64_t key = cantorPair(std::uint64_t(row), std::uint64_t(col));
    auto [it, inserted] =
        winners.try_emplace(key, ScatterRecord{int(i), row, col, proj->depth});
    if (!inserted) {
      it->second.collision = true;
      if (proj->depth < it->second.depth ||
          (proj->depth == it->second.depth && int(i) < it->second.source_index)) {
        const bool collided = true;
        it->second = ScatterRecord{int(i), row, col, proj->depth, collided};
      }
    }
  }
  for (const auto& [key, rec] : winners) {
    out.set(rec.target_row, rec.target_col, rec.depth);
  }
  if (records) {
    records->clear();
    records->reserve(winners.size());
    for (const auto& [key, rec] : winners) records->push_back(rec);
    std::sort(records->begin(), records->end(),
              [](const ScatterRecord& a, const ScatterRecord& b) {
                return std::tie(a.target_row, a.target_col) <
                       std::tie(b.target_row, b.target_col);
              });
  }
  return out;
}

inline SparseDepthMap scatter(const PointCloud& c, const CameraIntrinsics& k) {
  return scatterWithRecords(c, k, nullptr);
}

/// lift -> rigid transform -> scatter. With the identity transform this
/// reproduces the input exactly: pixel centers are fixed points of
/// project(backProject(.)).
inline SparseDepthMap resampleDepthMap(const SparseDepthMap& m,
                                       const RigidTransform& t,
                                       const CameraIntrinsics& k) {
  return scatter(transformCloud(lift(m, k), t), k);
}

/// Bilinear sample over the valid subset of the four neighboring pixel
/// centers; weights renormalize over whichever neighbors hold data.
/// Returns nullopt when none do.
inline std::optional<double> sparseBilinearSample(const SparseDepthMap& m,
                                                  const Vec2& at) {
  if (at.x() < 0 || at.x() >= m.width() || at.y() < 0 ||
      at.y() >= m.height()) {
    throw std::invalid_argument("sparseBilinearSample: query outside grid");
  }
  // Shift by the half-pixel so integer lattice coordinates sit on centers.
  const double x = at.x() - 0.5;
  const double y = at.y() - 0.5;
  const int c0 = int(std::floor(x));
  const int r0 = int(std::floor(y));
  const double fx = x - c0;
  const double fy = y - r0;

  double weighted = 0.0;
  double total = 0.0;
  double valid_sum = 0.0;
  int valid_count = 0;
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int dr = 0; dr < 2; ++dr) {
    const int r = r0 + dr;
    if (r < 0 || r >= m.height()) continue;
    for (int dc = 0; dc < 2; ++dc) {
      const int c = c0 + dc;
      if (c < 0 || c >= m.width()) continue;
      if (!m.validAt(r, c)) continue;
      const double w = wy[dr] * wx[dc];
      weighted += w * m.at(r, c);
      total += w;
      valid_sum += m.at(r, c);
      ++valid_count;
    }
  }
  if (valid_count == 0) return std::nullopt;
  // Valid neighbors that all carry zero bilinear weight (query exactly on a
  // lattice line next to invalid cells): renormalization degenerates, fall
  // back to their plain mean.
  if (total <= 0.0) return valid_sum / valid_count;
  return weighted / total;
}

}  // namespace calib
