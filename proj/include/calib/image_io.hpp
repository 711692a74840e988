// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Netpbm readers/writers: 16-bit PGM for depth maps (millimeters, 0 means
// no data) and 8-bit PPM for color images.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calib/depth_map.hpp"

namespace calib {

struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples

  std::uint8_t* at(int row, int col) {
    return &pixels[(std::size_t(row) * width + col) * 3];
  }
  const std::uint8_t* at(int row, int col) const {
    return &pixels[(std::size_t(row) * width + col) * 3];
  }
};

namespace detail {

inline std::runtime_error ioError(const std::filesystem::path& path,
                                  const std::string& msg) {
  return std::runtime_error(path.string() + ": " + msg);
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
inline std::string pnmToken(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(char(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) {
        tok.push_back(char(in.get()));
      }
      return tok;
    }
  }
  return tok;
}

inline int pnmInt(std::istream& in, const std::filesystem::path& path,
                  const char* what) {
  const std::string tok = pnmToken(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ioError(path, std::string("malformed ") + what + " field");
  }
}

}  // namespace detail

/// Writes depth in millimeters as big-endian 16-bit PGM. Depths above
/// 65.535 m saturate; the representable range round-trips bit-exactly.
inline void writeDepthPgm(const SparseDepthMap& m,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw detail::ioError(path, "cannot open for writing");
  out << "P5\n" << m.width() << " " << m.height() << "\n65535\n";
  std::vector<std::uint8_t> row(std::size_t(m.width()) * 2);
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      std::uint16_t mm = 0;
      if (m.validAt(r, c)) {
        const double v = std::round(m.at(r, c) * 1000.0);
        mm = std::uint16_t(std::clamp(v, 1.0, 65535.0));
      }
      row[2 * c] = std::uint8_t(mm >> 8);
      row[2 * c + 1] = std::uint8_t(mm & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size()));
  }
  if (!out) throw detail::ioError(path, "write failed");
}

inline SparseDepthMap readDepthPgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw detail::ioError(path, "cannot open");
  if (detail::pnmToken(in) != "P5") {
    throw detail::ioError(path, "not a binary PGM (expected P5)");
  }
  const int width = detail::pnmInt(in, path, "width");
  const int height = detail::pnmInt(in, path, "height");
  const int maxval = detail::pnmInt(in, path, "maxval");
  if (maxval != 65535) {
    throw detail::ioError(path, "expected 16-bit data (maxval 65535)");
  }
  in.get();  // single whitespace after maxval

  SparseDepthMap m(width, height);
  std::vector<std::uint8_t> row(std::size_t(width) * 2);
  for (int r = 0; r < height; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
    if (!in) throw detail::ioError(path, "truncated pixel data");
    for (int c = 0; c < width; ++c) {
      const std::uint16_t mm =
          std::uint16_t(row[2 * c] << 8) | std::uint16_t(row[2 * c + 1]);
      if (mm != 0) m.set(r, c, mm / 1000.0);
    }
  }
  return m;
}

inline void writePpm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw detail::ioError(path, "cannot open for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            std::streamsize(img.pixels.size()));
  if (!out) throw detail::ioError(path, "write failed");
}

inline RgbImage readPpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw detail::ioError(path, "cannot open");
  if (detail::pnmToken(in) != "P6") {
    throw detail::ioError(path, "not a binary PPM (expected P6)");
  }
  RgbImage img;
  img.width = detail::pnmInt(in, path, "width");
  img.height = detail::pnmInt(in, path, "height");
  if (img.width < 1 || img.height < 1) {
    throw detail::ioError(path, "empty image");
  }
  if (detail::pnmInt(in, path, "maxval") != 255) {
    throw detail::ioError(path, "expected 8-bit data (maxval 255)");
  }
  in.get();
  img.pixels.resize(std::size_t(img.width) * img.height * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          std::streamsize(img.pixels.size()));
  if (!in) throw detail::ioError(path, "truncated pixel data");
  return img;
}

}  // namespace calib
