// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk datasets: one JSON record per line in manifest.jsonl, plus the
// cloud (.bin), depth map (.pgm), and rig (.cfg) files it references.
// Angles are stored in degrees and translations in meters; everything
// internal stays in radians.

#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "calib/datagen.hpp"
#include "calib/image_io.hpp"
#include "calib/lidar_io.hpp"
#include "calib/rig_io.hpp"

namespace calib {

inline constexpr const char* kManifestSchema = "dataset/1";

struct ManifestRecord {
  int id = 0;
  std::uint64_t seed = 0;
  std::string scene;
  Se3Params decalibration;  // the perturbation that was applied
  std::string cloud_file;
  std::string miscalib_file;
  std::string target_file;
  std::string rig_file;

  RigidTransform groundTruthCorrection() const {
    return inverse(toTransform(decalibration));
  }
};

inline std::string sceneName(SceneKind kind) {
  switch (kind) {
    case SceneKind::kGroundPlaneBoxes: return "ground_plane_boxes";
    case SceneKind::kCorridor: return "corridor";
    case SceneKind::kRandomClutter: return "random_clutter";
  }
  return "unknown";
}

inline SceneKind sceneFromName(const std::string& name) {
  if (name == "ground_plane_boxes") return SceneKind::kGroundPlaneBoxes;
  if (name == "corridor") return SceneKind::kCorridor;
  if (name == "random_clutter") return SceneKind::kRandomClutter;
  throw std::invalid_argument("unknown scene kind: " + name);
}

inline void writeManifest(const std::vector<ManifestRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["schema"] = kManifestSchema;
    j["id"] = rec.id;
    j["seed"] = rec.seed;
    j["scene"] = rec.scene;
    j["rot_deg"] = {rad2deg(rec.decalibration.omega.x()),
                    rad2deg(rec.decalibration.omega.y()),
                    rad2deg(rec.decalibration.omega.z())};
    j["trans_m"] = {rec.decalibration.v.x(), rec.decalibration.v.y(),
                    rec.decalibration.v.z()};
    j["cloud"] = rec.cloud_file;
    j["miscalib_depth"] = rec.miscalib_file;
    j["target_depth"] = rec.target_file;
    j["rig"] = rec.rig_file;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

inline std::vector<ManifestRecord> readManifest(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::vector<ManifestRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
    try {
      if (j.at("schema").get<std::string>() != kManifestSchema) {
        throw std::runtime_error("unsupported schema");
      }
      ManifestRecord rec;
      rec.id = j.at("id").get<int>();
      rec.seed = j.at("seed").get<std::uint64_t>();
      rec.scene = j.value("scene", std::string());
      const auto rot = j.at("rot_deg");
      const auto tr = j.at("trans_m");
      rec.decalibration.omega = Vec3(deg2rad(rot.at(0).get<double>()),
                                     deg2rad(rot.at(1).get<double>()),
                                     deg2rad(rot.at(2).get<double>()));
      rec.decalibration.v = Vec3(tr.at(0).get<double>(),
                                 tr.at(1).get<double>(),
                                 tr.at(2).get<double>());
      rec.cloud_file = j.at("cloud").get<std::string>();
      rec.miscalib_file = j.value("miscalib_depth", std::string());
      rec.target_file = j.at("target_depth").get<std::string>();
      rec.rig_file = j.at("rig").get<std::string>();
      records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return records;
}

struct DatasetOptions {
  SceneKind scene = SceneKind::kGroundPlaneBoxes;
  int density = 5000;
  DecalibrationSpec decalibration;
};

/// Generates `decalibration.count` samples into `dir` and returns the
/// manifest records (also written to dir/manifest.jsonl). Deterministic in
/// the spec's seed.
inline std::vector<ManifestRecord> writeDataset(
    const std::filesystem::path& dir, const DatasetOptions& opt) {
  opt.decalibration.checkValid();
  std::filesystem::create_directories(dir);
  const CameraIntrinsics k = syntheticIntrinsics();
  const PointCloud scene =
      synthScene(opt.scene, opt.density, opt.decalibration.seed);

  RigConfig rig;
  rig.intrinsics = k;
  writeRigConfig(rig, dir / "rig.cfg");

  std::vector<ManifestRecord> records;
  for (int i = 0; i < opt.decalibration.count; ++i) {
    const Se3Params xi = sampleDecalibration(opt.decalibration, i);
    const CalibrationSample sample = makeSample(scene, k, xi);

    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%04d", i);
    ManifestRecord rec;
    rec.id = i;
    rec.seed = opt.decalibration.seed;
    rec.scene = sceneName(opt.scene);
    rec.decalibration = xi;
    rec.cloud_file = std::string(stem) + ".bin";
    rec.miscalib_file = std::string(stem) + "_miscalib.pgm";
    rec.target_file = std::string(stem) + "_target.pgm";
    rec.rig_file = "rig.cfg";

    writeLidarBin(sample.source_cloud, dir / rec.cloud_file);
    writeDepthPgm(sample.miscalib_map, dir / rec.miscalib_file);
    writeDepthPgm(sample.target_map, dir / rec.target_file);
    records.push_back(std::move(rec));
  }
  writeManifest(records, dir / "manifest.jsonl");
  return records;
}

}  // namespace calib
