// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Overlay rendering: project a cloud through a candidate transform and
// paint the hits over an RGB image (or a flat background), colored by
// depth. For eyeballing alignment quality; never part of the objective.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "calib/camera.hpp"
#include "calib/image_io.hpp"
#include "calib/point_cloud.hpp"
#include "calib/transformer.hpp"

namespace calib {

/// Blue (near) through green to red (far) ramp.
inline void depthColor(double t, std::uint8_t rgb[3]) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
  const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
  const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
  rgb[0] = std::uint8_t(255 * r);
  rgb[1] = std::uint8_t(255 * g);
  rgb[2] = std::uint8_t(255 * b);
}

struct RenderOptions {
  double near_depth = 2.0;   // meters mapped to the cold end
  double far_depth = 40.0;   // meters mapped to the hot end
  std::uint8_t background = 32;  // gray level when no image is given
};

inline RgbImage renderOverlay(const PointCloud& cloud,
                              const RigidTransform& transform,
                              const CameraIntrinsics& k,
                              const std::optional<RgbImage>& image = {},
                              const RenderOptions& opt = {}) {
  RgbImage out;
  if (image) {
    if (image->width != k.width || image->height != k.height) {
      throw std::invalid_argument(
          "renderOverlay: image size does not match intrinsics");
    }
    out = *image;
  } else {
    out.width = k.width;
    out.height = k.height;
    out.pixels.assign(std::size_t(k.width) * k.height * 3, opt.background);
  }

  // Depth-buffered splat so near points paint over far ones.
  const SparseDepthMap zbuf = scatter(transformCloud(cloud, transform), k);
  const double span = std::max(opt.far_depth - opt.near_depth, 1e-6);
  for (int r = 0; r < zbuf.height(); ++r) {
    for (int c = 0; c < zbuf.width(); ++c) {
      if (!zbuf.validAt(r, c)) continue;
      depthColor((zbuf.at(r, c) - opt.near_depth) / span, out.at(r, c));
    }
  }
  return out;
}

}  // namespace calib
