// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Alignment objectives between depth maps and point clouds: masked
// photometric depth error, chamfer distance, earth mover's distance,
// corresponded centroid residuals, and their weighted combination.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "calib/assignment.hpp"
#include "calib/camera.hpp"
#include "calib/depth_map.hpp"
#include "calib/kdtree.hpp"
#include "calib/lie.hpp"
#include "calib/point_cloud.hpp"
#include "calib/transformer.hpp"

namespace calib {

enum class DistanceKind { kChamfer, kEmd, kCentroidIcp };

/// Largest problem handed to the exact assignment solver; bigger clouds go
/// through centroid reduction and, failing that, the auction solver.
inline constexpr int kEmdExactCap = 512;

struct LossWeights {
  double alpha_ph = 1.0;
  double beta_dist = 0.15;
  DistanceKind distance_kind = DistanceKind::kChamfer;

  void checkValid() const {
    if (alpha_ph < 0 || beta_dist < 0) {
      throw std::invalid_argument("LossWeights: weights must be >= 0");
    }
    if (alpha_ph == 0 && beta_dist == 0) {
      throw std::invalid_argument("LossWeights: both weights are zero");
    }
  }
};

struct LossBreakdown {
  double photometric = 0;  // m^2
  double distance = 0;     // m^2 for chamfer/icp, m for emd
  double combined = 0;     // alpha_ph * photometric + beta_dist * distance
  long valid_pixel_overlap = 0;
};

struct PhotometricResult {
  double loss = 0;
  long overlap = 0;
};

/// Half the mean squared depth difference over pixels valid in both maps.
/// Zero overlap yields loss 0 with overlap 0; callers must treat that as
/// carrying no information.
inline PhotometricResult photometricLoss(const SparseDepthMap& pred,
                                         const SparseDepthMap& target) {
  if (pred.width() != target.width() || pred.height() != target.height()) {
    throw std::invalid_argument("photometricLoss: dimension mismatch");
  }
  double sum = 0;
  long overlap = 0;
  const auto& a = pred.data();
  const auto& b = target.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == SparseDepthMap::kNoData || b[i] == SparseDepthMap::kNoData) {
      continue;
    }
    const double d = b[i] - a[i];
    sum += d * d;
    ++overlap;
  }
  if (overlap == 0) return {0.0, 0};
  return {0.5 * sum / double(overlap), overlap};
}

/// Smooth photometric evaluation for derivative-based use: each cloud point
/// is projected into the target and compared against the sparsely
/// interpolated target depth there. Unlike the scatter path this varies
/// continuously with the pose.
inline PhotometricResult photometricLossSampled(const PointCloud& cloud,
                                                const SparseDepthMap& target,
                                                const CameraIntrinsics& k) {
  double sum = 0;
  long overlap = 0;
  for (const auto& p : cloud.points) {
    const auto proj = project(p, k);
    if (!proj) continue;
    const auto sample = sparseBilinearSample(target, proj->pixel);
    if (!sample) continue;
    const double d = *sample - proj->depth;
    sum += d * d;
    ++overlap;
  }
  if (overlap == 0) return {0.0, 0};
  return {0.5 * sum / double(overlap), overlap};
}

/// Symmetric sum of squared nearest-neighbor distances (both directions).
inline double chamferDistance(const PointCloud& s1, const PointCloud& s2) {
  if (s1.empty() || s2.empty()) {
    throw std::invalid_argument("chamferDistance: empty cloud");
  }
  const KdTree3 t1(s1.points);
  const KdTree3 t2(s2.points);
  double total = 0;
  for (const auto& p : s1.points) total += t2.nearest(p).dist_sq;
  for (const auto& p : s2.points) total += t1.nearest(p).dist_sq;
  return total;
}

/// One-directional chamfer sum against a prebuilt index; the solver's hot
/// path uses this to avoid rebuilding the static side every evaluation.
inline double chamferSumTo(const KdTree3& index, const PointCloud& from) {
  double total = 0;
  for (const auto& p : from.points) total += index.nearest(p).dist_sq;
  return total;
}

/// Splits the cloud (in its stored order) into k contiguous near-equal
/// chunks and returns their means. Deterministic by construction: no
/// seeding, no iteration-order dependence.
inline PointCloud clusterCentroids(const PointCloud& c, int k) {
  if (k < 1) throw std::invalid_argument("clusterCentroids: k must be >= 1");
  if (c.size() < std::size_t(k)) {
    throw std::invalid_argument("clusterCentroids: fewer points than clusters");
  }
  const std::size_t n = c.size();
  PointCloud out;
  out.points.reserve(k);
  for (int i = 0; i < k; ++i) {
    const std::size_t begin = n * std::size_t(i) / std::size_t(k);
    const std::size_t end = n * (std::size_t(i) + 1) / std::size_t(k);
    Vec3 sum = Vec3::Zero();
    for (std::size_t j = begin; j < end; ++j) sum += c.points[j];
    out.points.emplace_back(sum / double(end - begin));
  }
  return out;
}

struct EmdResult {
  double distance = 0;
  bool exact = true;
  double rel_gap_bound = 0;  // 0 when exact
};

/// Minimum total displacement over bijections between equal-size clouds.
/// Exact up to kEmdExactCap points; above that an auction solve with a
/// certified duality gap of at most 1% is used and flagged.
inline EmdResult emdDistance(const PointCloud& s1, const PointCloud& s2) {
  if (s1.empty() || s2.empty()) {
    throw std::invalid_argument("emdDistance: empty cloud");
  }
  if (s1.size() != s2.size()) {
    throw std::invalid_argument("emdDistance: clouds must have equal size");
  }
  const int n = int(s1.size());
  if (n <= kEmdExactCap) {
    Eigen::MatrixXd cost(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        cost(i, j) = (s1.points[i] - s2.points[j]).norm();
      }
    }
    return {solveAssignmentExact(cost), true, 0.0};
  }
  const auto row_cost = [&](int i, int j) {
    return (s1.points[i] - s2.points[j]).norm();
  };
  const AuctionResult r = solveAssignmentAuction(n, row_cost, 0.01);
  return {r.cost, false, r.rel_gap};
}

/// Half the summed squared residual between corresponded cluster centroids
/// under the candidate transform. Correspondence comes from identical
/// chunking of both clouds, which requires equal sizes.
inline double centroidIcpDistance(const PointCloud& s1, const PointCloud& s2,
                                  const RigidTransform& t, int cluster_count) {
  if (s1.size() != s2.size()) {
    throw std::invalid_argument(
        "centroidIcpDistance: clouds are not index-corresponded");
  }
  const PointCloud c1 = clusterCentroids(s1, cluster_count);
  const PointCloud c2 = clusterCentroids(s2, cluster_count);
  double sum = 0;
  for (int i = 0; i < cluster_count; ++i) {
    sum += (c2.points[i] - t.apply(c1.points[i])).squaredNorm();
  }
  return 0.5 * sum;
}

/// Weighted combination of the photometric and point-distance terms. The
/// EMD path first reduces both clouds to matching centroid counts whenever
/// they disagree in size or exceed the exact cap.
inline LossBreakdown combinedLoss(const SparseDepthMap& pred_map,
                                  const SparseDepthMap& target_map,
                                  const PointCloud& pred_cloud,
                                  const PointCloud& target_cloud,
                                  const LossWeights& w) {
  w.checkValid();
  LossBreakdown out;
  const PhotometricResult ph = photometricLoss(pred_map, target_map);
  out.photometric = ph.loss;
  out.valid_pixel_overlap = ph.overlap;

  switch (w.distance_kind) {
    case DistanceKind::kChamfer:
      out.distance = chamferDistance(pred_cloud, target_cloud);
      break;
    case DistanceKind::kEmd: {
      const int k = int(std::min({pred_cloud.size(), target_cloud.size(),
                                  std::size_t(kEmdExactCap)}));
      const PointCloud a = int(pred_cloud.size()) == k
                               ? pred_cloud
                               : clusterCentroids(pred_cloud, k);
      const PointCloud b = int(target_cloud.size()) == k
                               ? target_cloud
                               : clusterCentroids(target_cloud, k);
      out.distance = emdDistance(a, b).distance;
      break;
    }
    case DistanceKind::kCentroidIcp:
      // Clouds already carry the candidate pose; residual at identity.
      out.distance = centroidIcpDistance(
          pred_cloud, target_cloud, RigidTransform::Identity(),
          int(std::min(pred_cloud.size(), std::size_t(kEmdExactCap))));
      break;
  }
  out.combined = w.alpha_ph * out.photometric + w.beta_dist * out.distance;
  return out;
}

}  // namespace calib
