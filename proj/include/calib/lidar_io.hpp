// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// KITTI-style raw scan I/O: 16-byte little-endian records of
// (x, y, z, reflectance) float32.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "calib/point_cloud.hpp"

namespace calib {

struct LidarFrame {
  PointCloud points;            // sensor frame; reflectance as intensity
  std::filesystem::path source;
  std::size_t record_count = 0;    // records in the file
  std::size_t rejected_count = 0;  // non-finite records dropped
};

inline LidarFrame readLidarBin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw std::runtime_error(path.string() + ": cannot open");
  }
  const std::streamoff size = in.tellg();
  if (size % 16 != 0) {
    throw std::runtime_error(path.string() +
                             ": size is not a multiple of the 16-byte record");
  }
  in.seekg(0);

  LidarFrame frame;
  frame.source = path;
  frame.record_count = std::size_t(size) / 16;
  frame.points.points.reserve(frame.record_count);
  frame.points.intensity.reserve(frame.record_count);

  float rec[4];
  for (std::size_t i = 0; i < frame.record_count; ++i) {
    in.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (!in) {
      throw std::runtime_error(path.string() + ": short read");
    }
    if (!std::isfinite(rec[0]) || !std::isfinite(rec[1]) ||
        !std::isfinite(rec[2]) || !std::isfinite(rec[3])) {
      ++frame.rejected_count;
      continue;
    }
    frame.points.points.emplace_back(rec[0], rec[1], rec[2]);
    frame.points.intensity.push_back(std::clamp(double(rec[3]), 0.0, 1.0));
  }
  return frame;
}

/// Counterpart writer used by the dataset generator. Intensity defaults to
/// zero when the cloud carries none; coordinates narrow to float32.
inline void writeLidarBin(const PointCloud& cloud,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error(path.string() + ": cannot open for writing");
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float rec[4] = {
        float(cloud.points[i].x()), float(cloud.points[i].y()),
        float(cloud.points[i].z()),
        cloud.hasIntensity() ? float(cloud.intensity[i]) : 0.0f};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  if (!out) {
    throw std::runtime_error(path.string() + ": write failed");
  }
}

}  // namespace calib
