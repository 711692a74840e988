// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic decalibration pipeline: seeded random pose perturbations,
// structured desk-scale scenes, and mis-calibrated / target depth-map pairs
// with known ground truth.

#pragma once

#include <cstdint>
#include <stdexcept>

#include "calib/camera.hpp"
#include "calib/depth_map.hpp"
#include "calib/lie.hpp"
#include "calib/point_cloud.hpp"
#include "calib/rng.hpp"
#include "calib/transformer.hpp"

namespace calib {

/// Default synthetic camera. Half-integral principal point so the central
/// pixel's center sits exactly on the optical axis.
inline CameraIntrinsics syntheticIntrinsics() {
  return CameraIntrinsics::make(350.0, 350.0, 255.5, 127.5, 512, 256);
}

struct DecalibrationSpec {
  double rot_range = deg2rad(10.0);  // half-width per axis, radians
  double trans_range = 0.2;          // half-width per axis, meters
  std::uint64_t seed = 0;
  int count = 1;

  void checkValid() const {
    if (rot_range < 0 || trans_range < 0) {
      throw std::invalid_argument("DecalibrationSpec: ranges must be >= 0");
    }
    if (count < 1) {
      throw std::invalid_argument("DecalibrationSpec: count must be >= 1");
    }
  }
};

/// Draws the six components independently and uniformly, translation first.
/// Deterministic in (seed, index); adjacent indices use unrelated streams.
inline Se3Params sampleDecalibration(const DecalibrationSpec& spec,
                                     int index) {
  spec.checkValid();
  SplitMix64 rng = makeStream(spec.seed, std::uint64_t(index));
  Se3Params xi;
  for (int i = 0; i < 3; ++i) {
    xi.v[i] = rng.uniform(-spec.trans_range, spec.trans_range);
  }
  for (int i = 0; i < 3; ++i) {
    xi.omega[i] = rng.uniform(-spec.rot_range, spec.rot_range);
  }
  return xi;
}

enum class SceneKind { kGroundPlaneBoxes, kCorridor, kRandomClutter };

namespace detail {

// Conservative viewing frustum for scene construction, slightly inside
// syntheticIntrinsics() so scenes start fully visible.
inline constexpr double kTanX = 0.6;
inline constexpr double kTanY = 0.3;
inline constexpr double kGroundY = 1.6;  // camera height; +y points down

struct Box {
  Vec3 center;
  Vec3 half;  // half extents
};

inline Vec3 sampleBoxSurface(const Box& b, SplitMix64& rng) {
  // Face picked proportionally to its area.
  const double ax = b.half.y() * b.half.z();
  const double ay = b.half.x() * b.half.z();
  const double az = b.half.x() * b.half.y();
  const double pick = rng.uniform(0, ax + ay + az);
  const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  Vec3 p;
  if (pick < ax) {
    p = {sign * b.half.x(), rng.uniform(-b.half.y(), b.half.y()),
         rng.uniform(-b.half.z(), b.half.z())};
  } else if (pick < ax + ay) {
    p = {rng.uniform(-b.half.x(), b.half.x()), sign * b.half.y(),
         rng.uniform(-b.half.z(), b.half.z())};
  } else {
    p = {rng.uniform(-b.half.x(), b.half.x()),
         rng.uniform(-b.half.y(), b.half.y()), sign * b.half.z()};
  }
  return b.center + p;
}

}  // namespace detail

/// Deterministic structured scene in the camera-forward frame (+z ahead,
/// +y down), spanning depths of roughly 3-40 m with enough 3D structure to
/// constrain all six pose parameters.
inline PointCloud synthScene(SceneKind kind, int density, std::uint64_t seed) {
  using namespace detail;
  if (density < 100) {
    throw std::invalid_argument("synthScene: density must be >= 100");
  }
  SplitMix64 rng = makeStream(seed, 0);
  PointCloud cloud;
  cloud.points.reserve(density);

  switch (kind) {
    case SceneKind::kGroundPlaneBoxes: {
      std::vector<Box> boxes;
      SplitMix64 box_rng = makeStream(seed, 1);
      for (int i = 0; i < 10; ++i) {
        Box b;
        b.half = {box_rng.uniform(0.3, 1.2), box_rng.uniform(0.4, 1.4),
                  box_rng.uniform(0.3, 1.2)};
        const double z = box_rng.uniform(6.0, 32.0);
        const double x_max = 0.8 * z * kTanX - b.half.x();
        b.center = {box_rng.uniform(-x_max, x_max), kGroundY - b.half.y(), z};
        boxes.push_back(b);
      }
      for (int i = 0; i < density; ++i) {
        if (rng.uniform01() < 0.55) {
          const double z = rng.uniform(6.0, 40.0);
          cloud.points.emplace_back(
              rng.uniform(-0.85 * z * kTanX, 0.85 * z * kTanX), kGroundY, z);
        } else {
          cloud.points.push_back(
              sampleBoxSurface(boxes[rng.below(boxes.size())], rng));
        }
      }
      break;
    }
    case SceneKind::kCorridor: {
      for (int i = 0; i < density; ++i) {
        const double pick = rng.uniform01();
        if (pick < 0.6) {
          // Side walls.
          const double z = rng.uniform(6.5, 40.0);
          const double x = pick < 0.3 ? -3.25 : 3.25;
          const double y_top = std::max(-0.85 * z * kTanY, kGroundY - 2.5);
          cloud.points.emplace_back(x, rng.uniform(y_top, kGroundY), z);
        } else if (pick < 0.9) {
          const double z = rng.uniform(6.0, 40.0);
          cloud.points.emplace_back(rng.uniform(-3.25, 3.25), kGroundY, z);
        } else {
          // End wall.
          cloud.points.emplace_back(rng.uniform(-3.25, 3.25),
                                    rng.uniform(-0.85 * 40 * kTanY, kGroundY),
                                    40.0);
        }
      }
      break;
    }
    case SceneKind::kRandomClutter: {
      for (int i = 0; i < density; ++i) {
        const double z = rng.uniform(3.0, 40.0);
        cloud.points.emplace_back(rng.uniform(-0.85 * z * kTanX, 0.85 * z * kTanX),
                                  rng.uniform(-0.85 * z * kTanY, 0.85 * z * kTanY),
                                  z);
      }
      break;
    }
  }
  return cloud;
}

/// One synthetic calibration problem. The observed cloud is lifted from the
/// rasterized mis-calibrated map so its support matches what a rig with the
/// wrong extrinsics would actually see; the target map is that same map
/// re-calibrated by the inverse perturbation, which keeps both maps'
/// fields of view consistent under large decalibrations.
struct CalibrationSample {
  PointCloud source_cloud;
  SparseDepthMap miscalib_map;
  SparseDepthMap target_map;
  RigidTransform ground_truth;  // correction to apply to source_cloud
  CameraIntrinsics intrinsics;
  int id = 0;

  CalibrationSample(int w, int h) : miscalib_map(w, h), target_map(w, h) {}
};

inline CalibrationSample makeSample(const PointCloud& cloud,
                                    const CameraIntrinsics& k,
                                    const Se3Params& xi) {
  const RigidTransform decalib = toTransform(xi);
  CalibrationSample s(k.width, k.height);
  s.intrinsics = k;
  s.ground_truth = inverse(decalib);
  s.miscalib_map = scatter(transformCloud(cloud, decalib), k);
  if (s.miscalib_map.validCount() == 0) {
    throw std::invalid_argument("makeSample: no points project in view");
  }
  s.target_map = resampleDepthMap(s.miscalib_map, s.ground_truth, k);
  if (s.target_map.validCount() == 0) {
    throw std::invalid_argument(
        "makeSample: no points remain in view after re-calibration");
  }
  s.source_cloud = lift(s.miscalib_map, k);
  return s;
}

}  // namespace calib
