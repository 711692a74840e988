// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace calib {

/// Image-sized grid of depth values in meters. A cell holding kNoData (0.0)
/// carries no measurement; real returns always have positive depth, so the
/// representation is unambiguous.
class SparseDepthMap {
 public:
  static constexpr double kNoData = 0.0;

  SparseDepthMap(int width, int height)
      : width_(width), height_(height),
        values_(std::size_t(width) * std::size_t(height), kNoData) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("SparseDepthMap: size must be >= 1");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  double at(int row, int col) const { return values_[index(row, col)]; }
  bool validAt(int row, int col) const { return at(row, col) != kNoData; }

  void set(int row, int col, double depth) {
    if (!(depth > 0) || !std::isfinite(depth)) {
      throw std::invalid_argument("SparseDepthMap: depth must be finite and > 0");
    }
    values_[index(row, col)] = depth;
  }

  void clear(int row, int col) { values_[index(row, col)] = kNoData; }

  const std::vector<double>& data() const { return values_; }

  int validCount() const {
    return int(std::count_if(values_.begin(), values_.end(),
                             [](double v) { return v != kNoData; }));
  }

  bool operator==(const SparseDepthMap& o) const {
    return width_ == o.width_ && height_ == o.height_ && values_ == o.values_;
  }

 private:
  std::size_t index(int row, int col) const {
    if (row < 0 || row >= height_ || col < 0 || col >= width_) {
      throw std::out_of_range("SparseDepthMap: index out of range");
    }
    return std::size_t(row) * std::size_t(width_) + std::size_t(col);
  }

  int width_, height_;
  std::vector<double> values_;
};

/// Max depth over each window, with SAME padding: output cell (r, c) looks
/// at input rows [r*stride - pad, r*stride - pad + window) and likewise for
/// columns. Cells whose window holds no valid pixel stay kNoData.
inline SparseDepthMap maxPool(const SparseDepthMap& m, int window,
                              int stride) {
  if (window < 1 || stride < 1) {
    throw std::invalid_argument("maxPool: window and stride must be >= 1");
  }
  const int out_w = (m.width() + stride - 1) / stride;
  const int out_h = (m.height() + stride - 1) / stride;
  const int pad_w = std::max((out_w - 1) * stride + window - m.width(), 0) / 2;
  const int pad_h = std::max((out_h - 1) * stride + window - m.height(), 0) / 2;

  SparseDepthMap out(out_w, out_h);
  for (int r = 0; r < out_h; ++r) {
    const int r0 = std::max(r * stride - pad_h, 0);
    const int r1 = std::min(r * stride - pad_h + window, m.height());
    for (int c = 0; c < out_w; ++c) {
      const int c0 = std::max(c * stride - pad_w, 0);
      const int c1 = std::min(c * stride - pad_w + window, m.width());
      double best = SparseDepthMap::kNoData;
      for (int i = r0; i < r1; ++i) {
        for (int j = c0; j < c1; ++j) {
          best = std::max(best, m.at(i, j));
        }
      }
      if (best != SparseDepthMap::kNoData) out.set(r, c, best);
    }
  }
  return out;
}

/// Depth map affinely mapped to [-1, 1] with the range recorded so the
/// mapping stays invertible. Valid cells are tracked explicitly because 0
/// is a legitimate normalized value.
struct NormalizedDepthMap {
  int width = 0, height = 0;
  std::vector<double> values;       // in [-1, 1] where valid, 0 elsewhere
  std::vector<std::uint8_t> valid;  // row-major mask
  double d_min = 0, d_max = 0;
};

inline NormalizedDepthMap normalize(const SparseDepthMap& m) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : m.data()) {
    if (v != SparseDepthMap::kNoData) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    throw std::invalid_argument("normalize: map has no valid pixels");
  }

  NormalizedDepthMap out;
  out.width = m.width();
  out.height = m.height();
  out.d_min = lo;
  out.d_max = hi;
  out.values.resize(m.data().size(), 0.0);
  out.valid.resize(m.data().size(), 0);
  const double span = hi - lo;
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    const double v = m.data()[i];
    if (v == SparseDepthMap::kNoData) continue;
    out.valid[i] = 1;
    // Degenerate range maps everything to the middle of [-1, 1].
    out.values[i] = span > 0 ? (v - lo) / span * 2.0 - 1.0 : 0.0;
  }
  return out;
}

inline SparseDepthMap denormalize(const NormalizedDepthMap& n) {
  SparseDepthMap out(n.width, n.height);
  const double span = n.d_max - n.d_min;
  for (int r = 0; r < n.height; ++r) {
    for (int c = 0; c < n.width; ++c) {
      const std::size_t i = std::size_t(r) * n.width + c;
      if (!n.valid[i]) continue;
      out.set(r, c, n.d_min + (n.values[i] + 1.0) * 0.5 * span);
    }
  }
  return out;
}

/// Row-major occupancy mask: true exactly where the map holds data.
inline std::vector<std::uint8_t> densifyMask(const SparseDepthMap& m) {
  std::vector<std::uint8_t> mask(m.data().size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = m.data()[i] != SparseDepthMap::kNoData;
  }
  return mask;
}

}  // namespace calib
