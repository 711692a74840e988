// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>

#include "calib/lie.hpp"

namespace calib {

using Vec2 = Eigen::Vector2d;

/// Points closer than this to the image plane are treated as out of view.
inline constexpr double kMinDepth = 1e-3;

/// Pinhole parameters. Pixel coordinates are continuous; pixel (row, col)
/// covers [col, col+1) x [row, row+1) and its center is (col+0.5, row+0.5).
struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  static CameraIntrinsics make(double fx, double fy, double cx, double cy,
                               int width, int height) {
    if (!(fx > 0) || !(fy > 0)) {
      throw std::invalid_argument("CameraIntrinsics: focal lengths must be > 0");
    }
    if (width < 1 || height < 1) {
      throw std::invalid_argument("CameraIntrinsics: image size must be >= 1");
    }
    if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height)) {
      throw std::invalid_argument(
          "CameraIntrinsics: principal point must lie inside the image");
    }
    return {fx, fy, cx, cy, width, height};
  }
};

struct PixelDepth {
  Vec2 pixel;    // continuous (u, v)
  double depth;  // meters, camera-frame Z
};

/// Perspective projection. Returns nullopt when the point is behind the
/// camera (Z <= kMinDepth) or projects outside [0,width) x [0,height).
inline std::optional<PixelDepth> project(const Vec3& p,
                                         const CameraIntrinsics& k) {
  if (p.z() <= kMinDepth) return std::nullopt;
  const double u = k.fx * p.x() / p.z() + k.cx;
  const double v = k.fy * p.y() / p.z() + k.cy;
  if (u < 0 || u >= k.width || v < 0 || v >= k.height) return std::nullopt;
  return PixelDepth{{u, v}, p.z()};
}

/// Pinhole inverse: pixel plus depth back to a camera-frame point.
inline Vec3 backProject(const Vec2& pixel, double depth,
                        const CameraIntrinsics& k) {
  if (!(depth > 0)) {
    throw std::invalid_argument("backProject: depth must be > 0");
  }
  return {(pixel.x() - k.cx) * depth / k.fx,
          (pixel.y() - k.cy) * depth / k.fy, depth};
}

/// Rescales intrinsics for a resized image. Dimensions round to nearest.
inline CameraIntrinsics scaleIntrinsics(const CameraIntrinsics& k, double sx,
                                        double sy) {
  if (!(sx > 0) || !(sy > 0)) {
    throw std::invalid_argument("scaleIntrinsics: scales must be > 0");
  }
  return CameraIntrinsics::make(
      k.fx * sx, k.fy * sy, k.cx * sx, k.cy * sy,
      int(std::lround(k.width * sx)), int(std::lround(k.height * sy)));
}

}  // namespace calib
