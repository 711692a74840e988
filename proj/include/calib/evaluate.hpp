// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch evaluation: run the solver over every manifest entry, compare with
// the recorded ground truth, and aggregate. Entries are independent solves
// and may run in parallel; outputs are ordered by entry and contain no
// wall-clock data, so repeated runs are byte-identical.

#pragma once

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "calib/dataset.hpp"
#include "calib/metrics.hpp"
#include "calib/solver.hpp"

namespace calib {

inline constexpr const char* kMetricsSchema = "metrics/1";

struct SampleEvaluation {
  int id = 0;
  CalibrationError error;
  bool converged = false;
  int outer_steps = 0;
  Vec6 start_gradient = Vec6::Zero();
  double initial_geodesic = 0;     // decalibration magnitude, radians
  double initial_translation = 0;  // meters
};

struct EvaluationRun {
  std::vector<SampleEvaluation> samples;
  AggregateSummary summary;
};

inline SampleEvaluation evaluateRecord(const std::filesystem::path& base_dir,
                                       const ManifestRecord& rec,
                                       const SolverConfig& cfg) {
  const RigConfig rig = readRigConfig(base_dir / rec.rig_file);
  const LidarFrame frame = readLidarBin(base_dir / rec.cloud_file);
  const SparseDepthMap target = readDepthPgm(base_dir / rec.target_file);

  const RigidTransform initial =
      rig.extrinsic ? *rig.extrinsic : RigidTransform::Identity();
  const SolverReport report =
      calibrate(frame.points, target, rig.intrinsics, initial, cfg);

  SampleEvaluation out;
  out.id = rec.id;
  const RigidTransform truth = rec.groundTruthCorrection();
  out.error = computeError(report.final_transform, truth);
  out.converged = report.converged;
  out.outer_steps = int(report.per_outer_step.size());
  if (!report.per_outer_step.empty()) {
    out.start_gradient = report.per_outer_step.front().gradient_norms;
  }
  out.initial_geodesic = logSo3(truth.rotation).norm();
  out.initial_translation = truth.translation.norm();
  return out;
}

inline EvaluationRun evaluateManifest(const std::filesystem::path& manifest_path,
                                      const SolverConfig& cfg, int jobs = 0) {
  const auto records = readManifest(manifest_path);
  if (records.empty()) {
    throw std::runtime_error(manifest_path.string() + ": empty manifest");
  }
  const auto base_dir = manifest_path.parent_path();

  EvaluationRun run;
  run.samples.resize(records.size());
  if (jobs <= 0) {
    jobs = int(std::thread::hardware_concurrency());
  }
  jobs = std::max(1, std::min<int>(jobs, int(records.size())));

  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= records.size()) return;
        run.samples[i] = evaluateRecord(base_dir, records[i], cfg);
      }
    }));
  }
  for (auto& f : workers) f.get();

  std::vector<CalibrationError> errors;
  errors.reserve(run.samples.size());
  for (const auto& s : run.samples) errors.push_back(s.error);
  run.summary = aggregate(errors);
  return run;
}

inline nlohmann::ordered_json metricsJson(const EvaluationRun& run) {
  nlohmann::ordered_json j;
  j["schema"] = kMetricsSchema;
  j["count"] = run.summary.count;
  j["rotation"] = {
      {"mae_deg",
       {rad2deg(run.summary.mae_rot.x()), rad2deg(run.summary.mae_rot.y()),
        rad2deg(run.summary.mae_rot.z())}},
      {"mean_geodesic_deg", rad2deg(run.summary.mean_geodesic)},
      {"median_geodesic_deg", rad2deg(run.summary.median_geodesic)},
      {"histogram_edges_deg", run.summary.histogram_spec.rot_edges_deg},
      {"histogram_counts", run.summary.rot_histogram},
  };
  j["translation"] = {
      {"mae_m",
       {run.summary.mae_trans.x(), run.summary.mae_trans.y(),
        run.summary.mae_trans.z()}},
      {"mean_m", run.summary.mean_translation},
      {"median_m", run.summary.median_translation},
      {"histogram_edges_m", run.summary.histogram_spec.trans_edges_m},
      {"histogram_counts", run.summary.trans_histogram},
  };
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (const auto& s : run.samples) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["geodesic_deg"] = rad2deg(s.error.geodesic_rot);
    e["translation_m"] = s.error.translation_err;
    e["rot_residual_deg"] = {rad2deg(s.error.per_axis_rot.x()),
                             rad2deg(s.error.per_axis_rot.y()),
                             rad2deg(s.error.per_axis_rot.z())};
    e["trans_residual_m"] = {s.error.per_axis_trans.x(),
                             s.error.per_axis_trans.y(),
                             s.error.per_axis_trans.z()};
    e["converged"] = s.converged;
    e["outer_steps"] = s.outer_steps;
    e["initial_geodesic_deg"] = rad2deg(s.initial_geodesic);
    e["initial_translation_m"] = s.initial_translation;
    samples.push_back(std::move(e));
  }
  j["samples"] = std::move(samples);
  return j;
}

inline void writeMetricsJson(const EvaluationRun& run,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << metricsJson(run).dump(2) << "\n";
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

inline std::string metricsText(const EvaluationRun& run) {
  std::ostringstream os;
  const auto& s = run.summary;
  os << "samples: " << s.count << "\n";
  os << "rotation  MAE (yaw/pitch/roll deg): " << rad2deg(s.mae_rot.x()) << " "
     << rad2deg(s.mae_rot.y()) << " " << rad2deg(s.mae_rot.z()) << "\n";
  os << "rotation  geodesic deg: mean " << rad2deg(s.mean_geodesic)
     << ", median " << rad2deg(s.median_geodesic) << "\n";
  os << "translation MAE (x/y/z m): " << s.mae_trans.x() << " "
     << s.mae_trans.y() << " " << s.mae_trans.z() << "\n";
  os << "translation m: mean " << s.mean_translation << ", median "
     << s.median_translation << "\n";
  os << "geodesic histogram (deg edges";
  for (double e : s.histogram_spec.rot_edges_deg) os << " " << e;
  os << "):";
  for (long c : s.rot_histogram) os << " " << c;
  os << "\n";
  os << "translation histogram (m edges";
  for (double e : s.histogram_spec.trans_edges_m) os << " " << e;
  os << "):";
  for (long c : s.trans_histogram) os << " " << c;
  os << "\n";
  return os.str();
}

}  // namespace calib
