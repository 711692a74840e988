// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line interface: calibrate | generate | evaluate | render.
// Angles cross this boundary in degrees and are radians everywhere inside.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "calib/dataset.hpp"
#include "calib/evaluate.hpp"
#include "calib/image_io.hpp"
#include "calib/lidar_io.hpp"
#include "calib/log.hpp"
#include "calib/render.hpp"
#include "calib/rig_io.hpp"
#include "calib/solver.hpp"

namespace {

using namespace calib;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct SolverFlags {
  int outer_iters = 5;
  int inner_iters = 60;
  std::string distance = "chamfer";
  double alpha_ph = 1.0;
  double beta_dist = 0.15;
  std::uint64_t seed = 0;
  double fd_step_rot = 1e-4;
  double fd_step_trans = 1e-4;
  int chamfer_cloud_size = 4096;
  int emd_cloud_size = 256;

  void attach(CLI::App* cmd) {
    cmd->add_option("--outer-iters", outer_iters,
                    "Re-alignment steps (default 5)");
    cmd->add_option("--inner-iters", inner_iters,
                    "Descent steps per stage (default 60)");
    cmd->add_option("--distance", distance,
                    "Translation-stage cloud metric: chamfer|emd|icp")
        ->check(CLI::IsMember({"chamfer", "emd", "icp"}));
    cmd->add_option("--alpha-ph", alpha_ph,
                    "Depth-consistency weight (default 1.0)");
    cmd->add_option("--beta-dist", beta_dist,
                    "Cloud-distance weight (default 0.15)");
    cmd->add_option("--seed", seed, "Solver seed recorded in outputs");
    cmd->add_option("--fd-step-rot", fd_step_rot,
                    "Rotation probe step, radians");
    cmd->add_option("--fd-step-trans", fd_step_trans,
                    "Translation probe step, meters");
    cmd->add_option("--chamfer-cloud-size", chamfer_cloud_size,
                    "Point budget for chamfer terms");
    cmd->add_option("--emd-cloud-size", emd_cloud_size,
                    "Point budget for EMD terms");
  }

  SolverConfig config() const {
    SolverConfig cfg;
    cfg.max_outer_iterations = outer_iters;
    cfg.max_inner_iterations = inner_iters;
    cfg.seed = seed;
    cfg.fd_step_rot = fd_step_rot;
    cfg.fd_step_trans = fd_step_trans;
    cfg.chamfer_cloud_size = chamfer_cloud_size;
    cfg.emd_cloud_size = emd_cloud_size;

    DistanceKind kind = DistanceKind::kChamfer;
    if (distance == "emd") kind = DistanceKind::kEmd;
    if (distance == "icp") kind = DistanceKind::kCentroidIcp;
    cfg.stage_schedule = {
        {true, false, LossWeights{alpha_ph, beta_dist, DistanceKind::kChamfer}},
        {false, true, LossWeights{0.0, 1.0, kind}},
        {true, true, LossWeights{alpha_ph, beta_dist, DistanceKind::kChamfer}},
    };
    cfg.checkValid();
    return cfg;
  }
};

nlohmann::ordered_json reportJson(const SolverReport& report) {
  nlohmann::ordered_json j;
  j["converged"] = report.converged;
  j["outer_steps"] = report.per_outer_step.size();
  j["initial_loss"] = {{"photometric", report.initial_loss.photometric},
                       {"distance", report.initial_loss.distance},
                       {"combined", report.initial_loss.combined},
                       {"overlap", report.initial_loss.valid_pixel_overlap}};
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : report.per_outer_step) {
    nlohmann::ordered_json e;
    const Vec3 w = logSo3(s.accumulated.rotation);
    e["rotation_deg"] = {rad2deg(w.x()), rad2deg(w.y()), rad2deg(w.z())};
    e["translation_m"] = {s.accumulated.translation.x(),
                          s.accumulated.translation.y(),
                          s.accumulated.translation.z()};
    e["residual_norm"] = s.residual.vector().norm();
    e["loss"] = {{"photometric", s.loss.photometric},
                 {"distance", s.loss.distance},
                 {"combined", s.loss.combined},
                 {"overlap", s.loss.valid_pixel_overlap}};
    e["inner_iterations"] = s.inner_iterations;
    e["gradient_norms"] = {s.gradient_norms[0], s.gradient_norms[1],
                           s.gradient_norms[2], s.gradient_norms[3],
                           s.gradient_norms[4], s.gradient_norms[5]};
    steps.push_back(std::move(e));
  }
  j["per_outer_step"] = std::move(steps);
  // Wall time is the one non-reproducible field; keep it clearly marked
  // and last so diffs of everything else stay meaningful.
  j["wall_time_seconds_nondeterministic"] = report.wall_time_seconds;
  return j;
}

int runCalibrate(const std::string& config_path, const std::string& cloud_path,
                 const std::string& target_path,
                 const std::string& initial_path, const std::string& out_path,
                 const std::string& journal_path, const std::string& image_path,
                 const std::string& render_before,
                 const std::string& render_after, const SolverFlags& flags) {
  const RigConfig rig = readRigConfig(config_path);
  const LidarFrame frame = readLidarBin(cloud_path);
  if (frame.rejected_count > 0) {
    logInfo(std::to_string(frame.rejected_count) +
            " non-finite record(s) dropped from " + cloud_path);
  }
  const SparseDepthMap target = readDepthPgm(target_path);

  RigidTransform initial = RigidTransform::Identity();
  if (!initial_path.empty()) {
    initial = readTransformFile(initial_path).transform;
  } else if (rig.extrinsic) {
    initial = *rig.extrinsic;
  }

  std::optional<RgbImage> image;
  if (!image_path.empty()) image = readPpm(image_path);
  if (!render_before.empty()) {
    writePpm(renderOverlay(frame.points, initial, rig.intrinsics, image),
             render_before);
  }

  const SolverReport report =
      calibrate(frame.points, target, rig.intrinsics, initial, flags.config());

  if (!out_path.empty()) {
    writeTransformFile({report.final_transform, report.converged}, out_path);
  }
  if (!journal_path.empty()) {
    std::ofstream out(journal_path);
    if (!out) {
      throw std::runtime_error(journal_path + ": cannot open for writing");
    }
    out << reportJson(report).dump(2) << "\n";
  }
  if (!render_after.empty()) {
    writePpm(renderOverlay(frame.points, report.final_transform,
                           rig.intrinsics, image),
             render_after);
  }

  const Vec3 w = logSo3(report.final_transform.rotation);
  std::cout << "rotation_deg: " << rad2deg(w.x()) << " " << rad2deg(w.y())
            << " " << rad2deg(w.z()) << "\n";
  std::cout << "translation_m: " << report.final_transform.translation.x()
            << " " << report.final_transform.translation.y() << " "
            << report.final_transform.translation.z() << "\n";
  std::cout << "converged: " << (report.converged ? "true" : "false") << "\n";
  return report.converged ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Self-supervised LiDAR-camera extrinsic calibration: estimates the "
      "rigid transform\nthat aligns a point cloud with a target depth map by "
      "directly minimizing\ndepth-consistency and point-distance objectives."};
  app.require_subcommand(1);

  auto* cal = app.add_subcommand("calibrate",
                                 "Recover the extrinsic transform for one "
                                 "cloud / depth-map pair");
  std::string cal_config, cal_cloud, cal_target, cal_initial, cal_out,
      cal_journal, cal_image, cal_render_before, cal_render_after;
  SolverFlags cal_flags;
  cal->add_option("--config", cal_config, "Rig config file")->required();
  cal->add_option("--cloud", cal_cloud, "LiDAR cloud (.bin)")->required();
  cal->add_option("--target-depth", cal_target, "Target depth map (.pgm)")
      ->required();
  cal->add_option("--initial", cal_initial,
                  "Initial transform file (default: rig extrinsic or identity)");
  cal->add_option("--out", cal_out, "Output transform file");
  cal->add_option("--journal", cal_journal, "Solver journal (JSON)");
  cal->add_option("--image", cal_image, "RGB image (.ppm) for overlays");
  cal->add_option("--render-before", cal_render_before,
                  "Overlay at the initial transform (.ppm)");
  cal->add_option("--render-after", cal_render_after,
                  "Overlay at the recovered transform (.ppm)");
  cal_flags.attach(cal);

  auto* gen = app.add_subcommand(
      "generate", "Write a synthetic decalibration dataset + manifest");
  std::string gen_dir, gen_scene = "ground_plane_boxes";
  int gen_density = 5000, gen_count = 10;
  std::uint64_t gen_seed = 0;
  double gen_rot_range = 10.0, gen_trans_range = 0.2;
  gen->add_option("--out-dir", gen_dir, "Output directory")->required();
  gen->add_option("--scene", gen_scene,
                  "Scene kind: ground_plane_boxes|corridor|random_clutter")
      ->check(CLI::IsMember({"ground_plane_boxes", "corridor", "random_clutter"}));
  gen->add_option("--density", gen_density, "Points per scene (default 5000)");
  gen->add_option("--count", gen_count, "Number of samples (default 10)");
  gen->add_option("--seed", gen_seed, "Dataset seed");
  gen->add_option("--rot-range-deg", gen_rot_range,
                  "Decalibration half-range per axis, degrees (default 10)");
  gen->add_option("--trans-range-m", gen_trans_range,
                  "Decalibration half-range per axis, meters (default 0.2)");

  auto* eva = app.add_subcommand(
      "evaluate", "Run the solver over a manifest and aggregate the errors");
  std::string eva_manifest, eva_out, eva_report;
  int eva_jobs = 0;
  SolverFlags eva_flags;
  eva->add_option("--manifest", eva_manifest, "Dataset manifest (.jsonl)")
      ->required();
  eva->add_option("--out", eva_out, "Metrics output (JSON)");
  eva->add_option("--report", eva_report, "Text report path ('-' for stdout)");
  eva->add_option("--jobs", eva_jobs, "Parallel solves (default: cores)");
  eva_flags.attach(eva);

  auto* ren = app.add_subcommand(
      "render", "Project a cloud through a transform onto an overlay image");
  std::string ren_config, ren_cloud, ren_transform, ren_image, ren_out;
  double ren_near = 2.0, ren_far = 40.0;
  ren->add_option("--config", ren_config, "Rig config file")->required();
  ren->add_option("--cloud", ren_cloud, "LiDAR cloud (.bin)")->required();
  ren->add_option("--transform", ren_transform,
                  "Transform file (default identity)");
  ren->add_option("--image", ren_image, "Background RGB image (.ppm)");
  ren->add_option("--out", ren_out, "Output overlay (.ppm)")->required();
  ren->add_option("--near", ren_near, "Depth mapped to the cold color, m");
  ren->add_option("--far", ren_far, "Depth mapped to the hot color, m");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cal) {
      return runCalibrate(cal_config, cal_cloud, cal_target, cal_initial,
                          cal_out, cal_journal, cal_image, cal_render_before,
                          cal_render_after, cal_flags);
    }
    if (*gen) {
      DatasetOptions opt;
      opt.scene = sceneFromName(gen_scene);
      opt.density = gen_density;
      opt.decalibration.count = gen_count;
      opt.decalibration.seed = gen_seed;
      opt.decalibration.rot_range = deg2rad(gen_rot_range);
      opt.decalibration.trans_range = gen_trans_range;
      const auto records = writeDataset(gen_dir, opt);
      std::cout << "wrote " << records.size() << " samples to " << gen_dir
                << "\n";
      return kExitOk;
    }
    if (*eva) {
      const EvaluationRun run =
          evaluateManifest(eva_manifest, eva_flags.config(), eva_jobs);
      if (!eva_out.empty()) writeMetricsJson(run, eva_out);
      if (eva_report == "-") {
        std::cout << metricsText(run);
      } else if (!eva_report.empty()) {
        std::ofstream out(eva_report);
        if (!out) {
          throw std::runtime_error(eva_report + ": cannot open for writing");
        }
        out << metricsText(run);
      }
      if (eva_out.empty() && eva_report.empty()) std::cout << metricsText(run);
      return kExitOk;
    }
    if (*ren) {
      const RigConfig rig = readRigConfig(ren_config);
      const LidarFrame frame = readLidarBin(ren_cloud);
      RigidTransform t = RigidTransform::Identity();
      if (!ren_transform.empty()) {
        t = readTransformFile(ren_transform).transform;
      } else if (rig.extrinsic) {
        t = *rig.extrinsic;
      }
      std::optional<RgbImage> image;
      if (!ren_image.empty()) image = readPpm(ren_image);
      RenderOptions opt;
      opt.near_depth = ren_near;
      opt.far_depth = ren_far;
      writePpm(renderOverlay(frame.points, t, rig.intrinsics, image, opt),
               ren_out);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
