// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Structured-text configuration files. Both formats are line-oriented
// "key: value" documents with '#' comments and explicit schema tags; see
// the README for the exact key lists.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calib/camera.hpp"
#include "calib/lie.hpp"
#include "calib/log.hpp"

namespace calib {

inline constexpr const char* kRigSchema = "rig-config/1";
inline constexpr const char* kTransformSchema = "transform/1";
inline constexpr const char* kTransformConvention =
    "p_camera = R * p_lidar + t";

/// Camera intrinsics plus the optional reference LiDAR->camera extrinsic.
struct RigConfig {
  CameraIntrinsics intrinsics;
  std::optional<RigidTransform> extrinsic;
  std::vector<std::string> warnings;  // unknown keys, by line
};

namespace detail {

struct KeyValueLine {
  int line = 0;
  std::string key;
  std::string value;
};

inline std::runtime_error parseError(const std::filesystem::path& path,
                                     int line, const std::string& msg) {
  return std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                            msg);
}

inline std::vector<KeyValueLine> readKeyValueFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(path.string() + ": cannot open");
  }
  std::vector<KeyValueLine> out;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw parseError(path, line_no, "expected 'key: value'");
    }
    KeyValueLine kv;
    kv.line = line_no;
    kv.key = line.substr(0, colon);
    const auto kend = kv.key.find_last_not_of(" \t");
    kv.key = kv.key.substr(0, kend == std::string::npos ? 0 : kend + 1);
    const auto vstart = line.find_first_not_of(" \t", colon + 1);
    kv.value = vstart == std::string::npos ? "" : line.substr(vstart);
    out.push_back(std::move(kv));
  }
  return out;
}

inline double parseDouble(const std::filesystem::path& path,
                          const KeyValueLine& kv, const std::string& token) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw parseError(path, kv.line,
                     "'" + kv.key + "' has a malformed number: " + token);
  }
}

inline std::vector<double> parseDoubles(const std::filesystem::path& path,
                                        const KeyValueLine& kv,
                                        std::size_t expect) {
  std::istringstream ss(kv.value);
  std::vector<double> out;
  std::string token;
  while (ss >> token) out.push_back(parseDouble(path, kv, token));
  if (out.size() != expect) {
    throw parseError(path, kv.line,
                     "'" + kv.key + "' expects " + std::to_string(expect) +
                         " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

inline std::string formatDouble(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline RigidTransform parseMatrix3x4(const std::filesystem::path& path,
                                     const KeyValueLine& kv,
                                     double ortho_tol) {
  const std::vector<double> nums = parseDoubles(path, kv, 12);
  Mat3 r;
  Vec3 t;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r(row, col) = nums[row * 4 + col];
    t[row] = nums[row * 4 + 3];
  }
  const double ortho_err = (r.transpose() * r - Mat3::Identity()).norm();
  if (ortho_err > ortho_tol || std::abs(r.determinant() - 1.0) > ortho_tol) {
    throw parseError(path, kv.line,
                     "'" + kv.key +
                         "' rotation fails the orthonormality check "
                         "(||R^T R - I|| = " +
                         std::to_string(ortho_err) + ")");
  }
  // Snap to the tolerance-checked rotation through the validating factory
  // when exact, otherwise re-orthonormalize via the polar projection.
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 ortho = svd.matrixU() * svd.matrixV().transpose();
  if (ortho.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    ortho = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return {RotationMatrix::fromMatrix(ortho), t};
}

}  // namespace detail

inline RigConfig readRigConfig(const std::filesystem::path& path) {
  const auto lines = detail::readKeyValueFile(path);

  std::map<std::string, detail::KeyValueLine> seen;
  RigConfig rig;
  for (const auto& kv : lines) {
    static const std::vector<std::string> known = {
        "schema", "fx", "fy", "cx", "cy", "width", "height", "extrinsic"};
    if (std::find(known.begin(), known.end(), kv.key) == known.end()) {
      const std::string w = path.string() + ":" + std::to_string(kv.line) +
                            ": unknown key '" + kv.key + "' ignored";
      rig.warnings.push_back(w);
      logInfo(w);
      continue;
    }
    if (!seen.emplace(kv.key, kv).second) {
      throw detail::parseError(path, kv.line, "duplicate key '" + kv.key + "'");
    }
  }

  if (const auto it = seen.find("schema");
      it != seen.end() && it->second.value != kRigSchema) {
    throw detail::parseError(path, it->second.line,
                             "unsupported schema '" + it->second.value + "'");
  }

  std::vector<std::string> missing;
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"}) {
    if (!seen.count(key)) missing.push_back(key);
  }
  if (!missing.empty()) {
    std::string msg = "missing required key(s):";
    for (const auto& k : missing) msg += " " + k;
    throw std::runtime_error(path.string() + ": " + msg);
  }

  const auto number = [&](const char* key) {
    const auto& kv = seen.at(key);
    return std::pair<double, int>(detail::parseDouble(path, kv, kv.value),
                                  kv.line);
  };
  const auto [fx, fx_line] = number("fx");
  const auto [fy, fy_line] = number("fy");
  const auto [cx, cx_line] = number("cx");
  const auto [cy, cy_line] = number("cy");
  const auto [w, w_line] = number("width");
  const auto [h, h_line] = number("height");
  if (!(fx > 0)) throw detail::parseError(path, fx_line, "fx must be > 0");
  if (!(fy > 0)) throw detail::parseError(path, fy_line, "fy must be > 0");
  if (w < 1 || w != std::floor(w)) {
    throw detail::parseError(path, w_line, "width must be a positive integer");
  }
  if (h < 1 || h != std::floor(h)) {
    throw detail::parseError(path, h_line, "height must be a positive integer");
  }
  try {
    rig.intrinsics = CameraIntrinsics::make(fx, fy, cx, cy, int(w), int(h));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }

  if (const auto it = seen.find("extrinsic"); it != seen.end()) {
    rig.extrinsic = detail::parseMatrix3x4(path, it->second, 1e-3);
  }
  return rig;
}

inline void writeRigConfig(const RigConfig& rig,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "schema: " << kRigSchema << "\n";
  out << "fx: " << detail::formatDouble(rig.intrinsics.fx) << "\n";
  out << "fy: " << detail::formatDouble(rig.intrinsics.fy) << "\n";
  out << "cx: " << detail::formatDouble(rig.intrinsics.cx) << "\n";
  out << "cy: " << detail::formatDouble(rig.intrinsics.cy) << "\n";
  out << "width: " << rig.intrinsics.width << "\n";
  out << "height: " << rig.intrinsics.height << "\n";
  if (rig.extrinsic) {
    out << "extrinsic:";
    const Mat3& r = rig.extrinsic->rotation.matrix();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        out << " " << detail::formatDouble(r(row, col));
      }
      out << " " << detail::formatDouble(rig.extrinsic->translation[row]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

/// Calibration estimate written by the solver CLI. The convention line
/// documents how the matrix maps points.
struct TransformFile {
  RigidTransform transform;
  bool converged = true;
};

inline void writeTransformFile(const TransformFile& tf,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "schema: " << kTransformSchema << "\n";
  out << "convention: " << kTransformConvention << "\n";
  out << "matrix_3x4:";
  const Mat3& r = tf.transform.rotation.matrix();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      out << " " << detail::formatDouble(r(row, col));
    }
    out << " " << detail::formatDouble(tf.transform.translation[row]);
  }
  out << "\n";
  const Vec3 axis_angle = logSo3(tf.transform.rotation);
  out << "rotation_deg: " << detail::formatDouble(rad2deg(axis_angle.x()))
      << " " << detail::formatDouble(rad2deg(axis_angle.y())) << " "
      << detail::formatDouble(rad2deg(axis_angle.z())) << "\n";
  out << "translation_m: " << detail::formatDouble(tf.transform.translation.x())
      << " " << detail::formatDouble(tf.transform.translation.y()) << " "
      << detail::formatDouble(tf.transform.translation.z()) << "\n";
  out << "converged: " << (tf.converged ? "true" : "false") << "\n";
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

inline TransformFile readTransformFile(const std::filesystem::path& path) {
  const auto lines = detail::readKeyValueFile(path);
  TransformFile tf;
  bool have_matrix = false;
  for (const auto& kv : lines) {
    if (kv.key == "schema") {
      if (kv.value != kTransformSchema) {
        throw detail::parseError(path, kv.line,
                                 "unsupported schema '" + kv.value + "'");
      }
    } else if (kv.key == "matrix_3x4") {
      tf.transform = detail::parseMatrix3x4(path, kv, 1e-9);
      have_matrix = true;
    } else if (kv.key == "converged") {
      if (kv.value != "true" && kv.value != "false") {
        throw detail::parseError(path, kv.line, "converged must be true|false");
      }
      tf.converged = kv.value == "true";
    } else if (kv.key == "convention" || kv.key == "rotation_deg" ||
               kv.key == "translation_m") {
      // Informational lines; the matrix is authoritative.
    } else {
      logInfo(path.string() + ":" + std::to_string(kv.line) +
              ": unknown key '" + kv.key + "' ignored");
    }
  }
  if (!have_matrix) {
    throw std::runtime_error(path.string() + ": missing required key matrix_3x4");
  }
  return tf;
}

}  // namespace calib
