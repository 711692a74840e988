// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one test per release criterion, each printing a single
// PASS/FAIL line with its key numbers. Run via ctest or directly:
//   ./acceptance_test --gtest_color=yes

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <vector>

#include "calib/datagen.hpp"
#include "calib/dataset.hpp"
#include "calib/evaluate.hpp"
#include "calib/lidar_io.hpp"
#include "calib/losses.hpp"
#include "calib/metrics.hpp"
#include "calib/rig_io.hpp"
#include "calib/solver.hpp"
#include "oracles.hpp"

namespace calib {
namespace {

namespace fs = std::filesystem;

void printOutcome(int criterion, const char* name, bool pass,
                  const std::string& detail) {
  std::printf("[ACCEPTANCE] %d %-28s %s  %s\n", criterion, name,
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Vec3 randomAxisAngle(SplitMix64& rng, double lo, double hi) {
  Vec3 axis;
  do {
    axis = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  } while (axis.norm() < 1e-3 || axis.norm() > 1.0);
  axis.normalize();
  return axis * rng.uniform(lo, hi);
}

TEST(Acceptance, Criterion1LieGroupSuite) {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(10001);
  double max_roundtrip = 0, max_taylor = 0, max_compose = 0, max_inverse = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = randomAxisAngle(rng, 1e-12, M_PI - 0.01);
    const RotationMatrix r = expSo3(w);
    max_roundtrip = std::max(max_roundtrip, (logSo3(r) - w).norm());
    // 30 series terms: a 20-term truncation has a remainder of ~5e-10 of
    // its own near the top of the angle range, above the tolerance here.
    max_taylor =
        std::max(max_taylor, (r.matrix() - oracles::taylorExpm(w, 30)).norm());

    const RigidTransform a{r, Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                   rng.uniform(-2, 2))};
    const RigidTransform b{expSo3(randomAxisAngle(rng, 0, 2.0)),
                           Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                rng.uniform(-2, 2))};
    const Mat4 compose_oracle =
        oracles::homogeneous(a.rotation.matrix(), a.translation) *
        oracles::homogeneous(b.rotation.matrix(), b.translation);
    max_compose =
        std::max(max_compose, (compose(a, b).matrix() - compose_oracle).norm());
    max_inverse = std::max(
        max_inverse,
        (inverse(a).matrix() - oracles::denseInverse(a.matrix())).norm());
  }
  const double dt = seconds_since(t0);
  const bool pass = max_roundtrip < 1e-9 && max_taylor < 1e-12 &&
                    max_compose < 1e-12 && max_inverse < 1e-12 && dt < 1.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "(roundtrip %.1e, taylor %.1e, compose %.1e, inverse %.1e, "
                "%.2fs)",
                max_roundtrip, max_taylor, max_compose, max_inverse, dt);
  printOutcome(1, "lie-group-suite", pass, buf);
  EXPECT_LT(max_roundtrip, 1e-9);
  EXPECT_LT(max_taylor, 1e-12);
  EXPECT_LT(max_compose, 1e-12);
  EXPECT_LT(max_inverse, 1e-12);
  EXPECT_LT(dt, 1.0);
}

TEST(Acceptance, Criterion2ProjectionSuite) {
  const auto t0 = std::chrono::steady_clock::now();
  const CameraIntrinsics k = syntheticIntrinsics();
  const CameraIntrinsics scaled = scaleIntrinsics(k, 1.5, 1.5);
  SplitMix64 rng(10002);
  double max_pixel = 0, max_cov = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec2 px(rng.uniform(0, k.width), rng.uniform(0, k.height));
    const double d = rng.uniform(0.2, 90.0);
    const Vec3 p = backProject(px, d, k);
    const auto back = project(p, k);
    ASSERT_TRUE(back.has_value());
    max_pixel = std::max(max_pixel, (back->pixel - px).norm());

    if (const auto sc = project(p, scaled)) {
      max_cov = std::max(max_cov, (sc->pixel - 1.5 * back->pixel).norm());
    }
  }
  const double dt = seconds_since(t0);
  const bool pass = max_pixel < 1e-9 && max_cov < 1e-9 && dt < 1.0;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "(roundtrip %.1e px, covariance %.1e, %.2fs)",
                max_pixel, max_cov, dt);
  printOutcome(2, "projection-suite", pass, buf);
  EXPECT_LT(max_pixel, 1e-9);
  EXPECT_LT(max_cov, 1e-9);
  EXPECT_LT(dt, 1.0);
}

TEST(Acceptance, Criterion3DistanceMetricOracles) {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(10003);

  const auto random_cloud = [&](int n) {
    PointCloud c;
    for (int i = 0; i < n; ++i) {
      c.points.emplace_back(rng.uniform(-8, 8), rng.uniform(-8, 8),
                            rng.uniform(-8, 8));
    }
    return c;
  };

  double max_chamfer_dev = 0, max_emd_dev = 0, max_symmetry_dev = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const PointCloud a = random_cloud(50 + int(rng.below(451)));
    const PointCloud b = random_cloud(50 + int(rng.below(451)));
    const double got = chamferDistance(a, b);
    max_chamfer_dev =
        std::max(max_chamfer_dev,
                 std::abs(got - oracles::bruteChamfer(a.points, b.points)));
    max_symmetry_dev =
        std::max(max_symmetry_dev, std::abs(got - chamferDistance(b, a)));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud a = random_cloud(6);
    const PointCloud b = random_cloud(6);
    const double got = emdDistance(a, b).distance;
    max_emd_dev = std::max(
        max_emd_dev, std::abs(got - oracles::permutationEmd(a.points, b.points)));
    max_symmetry_dev =
        std::max(max_symmetry_dev, std::abs(got - emdDistance(b, a).distance));
  }

  // Zero at exact alignment for all three.
  const PointCloud c = random_cloud(80);
  const RigidTransform t =
      toTransform({Vec3(0.3, -0.2, 0.5), Vec3(0.2, 0.1, -0.3)});
  const PointCloud moved = transformCloud(c, t);
  const double zero_chamfer = chamferDistance(c, c);
  const double zero_emd = emdDistance(c, c).distance;
  const double zero_icp = centroidIcpDistance(c, moved, t, 16);

  const double dt = seconds_since(t0);
  const bool pass = max_chamfer_dev < 1e-9 && max_emd_dev < 1e-9 &&
                    max_symmetry_dev < 1e-9 && zero_chamfer == 0 &&
                    zero_emd == 0 && zero_icp < 1e-18 && dt < 30.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "(chamfer dev %.1e, emd dev %.1e, symmetry %.1e, zeros "
                "%.0e/%.0e/%.0e, %.1fs)",
                max_chamfer_dev, max_emd_dev, max_symmetry_dev, zero_chamfer,
                zero_emd, zero_icp, dt);
  printOutcome(3, "distance-metric-oracles", pass, buf);
  EXPECT_LT(max_chamfer_dev, 1e-9);
  EXPECT_LT(max_emd_dev, 1e-9);
  EXPECT_LT(max_symmetry_dev, 1e-9);
  EXPECT_EQ(zero_chamfer, 0.0);
  EXPECT_EQ(zero_emd, 0.0);
  EXPECT_LT(zero_icp, 1e-18);
  EXPECT_LT(dt, 30.0);
}

TEST(Acceptance, Criterion4GradientChecks) {
  const PointCloud scene = synthScene(SceneKind::kGroundPlaneBoxes, 5000, 40);
  const RigidTransform t_pair =
      toTransform({Vec3(0.08, -0.05, 0.1), Vec3(0.05, -0.08, 0.06)});
  const PointCloud target = transformCloud(scene, t_pair);

  const PointCloud scene_emd = clusterCentroids(spatiallyOrdered(scene), 128);
  const PointCloud target_emd =
      clusterCentroids(spatiallyOrdered(target), 128);

  // Full clouds for the chamfer term: nearest-neighbor switches inside the
  // probe window are the dominant error source and their jumps shrink with
  // point density.
  const auto chamfer_term = [&](const Se3Params& xi) {
    return chamferDistance(transformCloud(scene, toTransform(xi)), target);
  };
  const auto emd_term = [&](const Se3Params& xi) {
    return emdDistance(transformCloud(scene_emd, toTransform(xi)), target_emd)
        .distance;
  };
  const auto icp_term = [&](const Se3Params& xi) {
    return centroidIcpDistance(scene, target, toTransform(xi), 256);
  };

  const auto fd_gradient = [](const auto& f, const Se3Params& xi, double h) {
    Vec6 g;
    for (int i = 0; i < 6; ++i) {
      Vec6 p = xi.vector(), m = xi.vector();
      p[i] += h;
      m[i] -= h;
      g[i] = (f(Se3Params::FromVector(p)) - f(Se3Params::FromVector(m))) /
             (2 * h);
    }
    return g;
  };

  DecalibrationSpec spec;
  spec.seed = 10004;
  double worst[3] = {0, 0, 0};
  for (int i = 0; i < 50; ++i) {
    const Se3Params xi = sampleDecalibration(spec, i);
    int term = 0;
    for (const auto& f : {std::function<double(const Se3Params&)>(chamfer_term),
                          std::function<double(const Se3Params&)>(emd_term),
                          std::function<double(const Se3Params&)>(icp_term)}) {
      const Vec6 coarse = fd_gradient(f, xi, 1e-4);
      const Vec6 fine = fd_gradient(f, xi, 1e-5);
      const double rel = (coarse - fine).norm() /
                         std::max({coarse.norm(), fine.norm(), 1e-12});
      worst[term] = std::max(worst[term], rel);
      ++term;
    }
  }

  // Analytic single-point chamfer case. The target point sits exactly on a
  // pixel-center ray so rasterization reproduces it.
  const CameraIntrinsics k = syntheticIntrinsics();
  PointCloud single_target;
  single_target.points.push_back(backProject({325.5, 127.5}, 5.0, k));
  PointCloud single_working;
  single_working.points.emplace_back(0, 0, 5);
  SolverConfig cfg;
  const CalibrationProblem problem(single_working,
                                   scatter(single_target, k), k, cfg);
  const Vec6 g = lossGradient(problem, LossWeights{0.0, 1.0, DistanceKind::kChamfer},
                              Se3Params::Zero(), cfg);
  const Vec3 closed_form =
      4.0 * (single_working.points[0] - single_target.points[0]);
  const double analytic_dev = (g.head<3>() - closed_form).norm();

  const bool pass = worst[0] < 1e-3 && worst[1] < 1e-3 && worst[2] < 1e-3 &&
                    analytic_dev < 1e-6;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "(chamfer %.1e, emd %.1e, icp %.1e, analytic %.1e)", worst[0],
                worst[1], worst[2], analytic_dev);
  printOutcome(4, "gradient-checks", pass, buf);
  EXPECT_LT(worst[0], 1e-3);
  EXPECT_LT(worst[1], 1e-3);
  EXPECT_LT(worst[2], 1e-3);
  EXPECT_LT(analytic_dev, 1e-6);
}

TEST(Acceptance, Criterion5SpatialTransformer) {
  const CameraIntrinsics k = syntheticIntrinsics();

  // Identity reproduction must be exact on an arbitrary sparse map.
  SplitMix64 rng(10005);
  SparseDepthMap random_map(k.width, k.height);
  for (int r = 0; r < k.height; ++r) {
    for (int c = 0; c < k.width; ++c) {
      if (rng.uniform01() < 0.12) random_map.set(r, c, rng.uniform(2, 60));
    }
  }
  const bool identity_exact =
      resampleDepthMap(random_map, RigidTransform::Identity(), k) == random_map;

  // Forward-then-inverse depth recovery on the plane scene.
  SparseDepthMap plane(k.width, k.height);
  for (int r = 20; r < k.height - 20; ++r) {
    for (int c = 20; c < k.width - 20; ++c) plane.set(r, c, 8.0);
  }
  const RigidTransform t = toTransform(
      {Vec3(0.03, -0.04, 0.05), Vec3(deg2rad(1.0), deg2rad(-1.2), deg2rad(0.8))});
  const SparseDepthMap back =
      resampleDepthMap(resampleDepthMap(plane, t, k), inverse(t), k);
  int recovered = 0, total = 0;
  for (int r = 0; r < k.height; ++r) {
    for (int c = 0; c < k.width; ++c) {
      if (!plane.validAt(r, c)) continue;
      ++total;
      if (back.validAt(r, c) && std::abs(back.at(r, c) - plane.at(r, c)) < 1e-3) {
        ++recovered;
      }
    }
  }
  const double rate = double(recovered) / double(total);

  const bool pass = identity_exact && rate >= 0.90;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "(identity %s, recovery %.1f%%)",
                identity_exact ? "exact" : "BROKEN", 100 * rate);
  printOutcome(5, "spatial-transformer", pass, buf);
  EXPECT_TRUE(identity_exact);
  EXPECT_GE(rate, 0.90);
}

struct TrialResult {
  double geodesic_deg = 0;
  double translation_m = 0;
  double wall_seconds = 0;
  bool converged = false;
  Vec6 start_gradient = Vec6::Zero();
  double geodesic_deg_single_step = 0;  // with max_outer_iterations = 1
};

// Shared by criteria 6 and 7.
const std::vector<TrialResult>& recoveryTrials() {
  static const std::vector<TrialResult> results = [] {
    const PointCloud scene = synthScene(SceneKind::kGroundPlaneBoxes, 5000, 77);
    const CameraIntrinsics k = syntheticIntrinsics();
    DecalibrationSpec spec;
    spec.seed = 10006;

    std::vector<TrialResult> out(50);
    std::atomic<int> next{0};
    const int jobs = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        while (true) {
          const int i = next.fetch_add(1);
          if (i >= 50) return;
          const Se3Params xi = sampleDecalibration(spec, i);
          const CalibrationSample s = makeSample(scene, k, xi);

          SolverConfig cfg;  // default schedule, <= 5 outer steps
          const auto t0 = std::chrono::steady_clock::now();
          const SolverReport rep = calibrate(s.source_cloud, s.target_map, k,
                                             RigidTransform::Identity(), cfg);
          out[i].wall_seconds = seconds_since(t0);
          const CalibrationError e =
              computeError(rep.final_transform, s.ground_truth);
          out[i].geodesic_deg = rad2deg(e.geodesic_rot);
          out[i].translation_m = e.translation_err;
          out[i].converged = rep.converged;
          if (!rep.per_outer_step.empty()) {
            out[i].start_gradient = rep.per_outer_step.front().gradient_norms;
          }

          SolverConfig single = cfg;
          single.max_outer_iterations = 1;
          const SolverReport rep1 = calibrate(
              s.source_cloud, s.target_map, k, RigidTransform::Identity(), single);
          out[i].geodesic_deg_single_step = rad2deg(
              computeError(rep1.final_transform, s.ground_truth).geodesic_rot);
        }
      }));
    }
    for (auto& f : workers) f.get();
    return out;
  }();
  return results;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2]
                      : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

TEST(Acceptance, Criterion6EndToEndRecovery) {
  const auto& trials = recoveryTrials();
  int ok = 0;
  int unexplained_failures = 0;
  double max_wall = 0;
  std::vector<double> geos, trans;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    geos.push_back(t.geodesic_deg);
    trans.push_back(t.translation_m);
    max_wall = std::max(max_wall, t.wall_seconds);
    const bool pass = t.geodesic_deg < 0.5 && t.translation_m < 0.02;
    if (pass) {
      ++ok;
      continue;
    }
    // A failed trial must be explainable by weak observability: some axis
    // with a start gradient far below the strongest one.
    const double lo = t.start_gradient.minCoeff();
    const double hi = t.start_gradient.maxCoeff();
    const bool low_gradient = hi <= 0 || lo / hi < 0.02;
    if (!low_gradient) ++unexplained_failures;
    std::printf(
        "[ACCEPTANCE]   trial %zu failed: geo=%.3f deg trans=%.3f cm "
        "grad lo/hi=%.3g (%s)\n",
        i, t.geodesic_deg, 100 * t.translation_m, hi > 0 ? lo / hi : 0.0,
        low_gradient ? "low-gradient axis" : "UNEXPLAINED");
  }
  const double med_geo = median_of(geos);
  const double med_trans = median_of(trans);
  const double rate = double(ok) / double(trials.size());

  const bool pass = rate >= 0.80 && med_geo < 0.2 && med_trans < 0.01 &&
                    unexplained_failures == 0 && max_wall < 30.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "(success %.0f%%, median %.3f deg / %.2f cm, max %.1f s/trial, "
                "unexplained failures %d)",
                100 * rate, med_geo, 100 * med_trans, max_wall,
                unexplained_failures);
  printOutcome(6, "end-to-end-recovery", pass, buf);
  EXPECT_GE(rate, 0.80);
  EXPECT_LT(med_geo, 0.2);
  EXPECT_LT(med_trans, 0.01);
  EXPECT_EQ(unexplained_failures, 0);
  EXPECT_LT(max_wall, 30.0);
}

TEST(Acceptance, Criterion7RealignmentAblation) {
  const auto& trials = recoveryTrials();
  std::vector<double> multi, single;
  for (const auto& t : trials) {
    multi.push_back(t.geodesic_deg);
    single.push_back(t.geodesic_deg_single_step);
  }
  const double med_multi = median_of(multi);
  const double med_single = median_of(single);
  const bool pass = med_multi <= med_single;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "(median 5-step %.4f deg <= 1-step %.4f deg)",
                med_multi, med_single);
  printOutcome(7, "realignment-ablation", pass, buf);
  EXPECT_LE(med_multi, med_single);
}

TEST(Acceptance, Criterion8KittiSmoke) {
  const char* dir = std::getenv("CALIB_KITTI_DIR");
  if (!dir || !fs::exists(fs::path(dir) / "rig.cfg") ||
      !fs::exists(fs::path(dir) / "cloud.bin")) {
    printOutcome(8, "kitti-smoke", true,
                 "SKIPPED (set CALIB_KITTI_DIR to a directory with rig.cfg + "
                 "cloud.bin)");
    GTEST_SKIP() << "no KITTI data";
  }
  const RigConfig rig = readRigConfig(fs::path(dir) / "rig.cfg");
  ASSERT_TRUE(rig.extrinsic.has_value())
      << "rig.cfg must carry the reference extrinsic";
  const LidarFrame frame = readLidarBin(fs::path(dir) / "cloud.bin");

  // Reference-calibrated target map, seeded decalibration of the start.
  const SparseDepthMap target =
      scatter(transformCloud(frame.points, *rig.extrinsic), rig.intrinsics);
  DecalibrationSpec spec;
  spec.rot_range = deg2rad(5.0);
  spec.trans_range = 0.1;
  spec.seed = 10008;
  const RigidTransform initial =
      compose(toTransform(sampleDecalibration(spec, 0)), *rig.extrinsic);

  const double initial_err =
      geodesicDistance(initial.rotation, rig.extrinsic->rotation);
  const SolverReport rep = calibrate(frame.points, target, rig.intrinsics,
                                     initial, SolverConfig{});
  const double final_err =
      geodesicDistance(rep.final_transform.rotation, rig.extrinsic->rotation);
  const double reduction = 1.0 - final_err / initial_err;
  const bool pass = reduction >= 0.9;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "(geodesic %.3f -> %.3f deg, reduced %.0f%%)",
                rad2deg(initial_err), rad2deg(final_err), 100 * reduction);
  printOutcome(8, "kitti-smoke", pass, buf);
  EXPECT_GE(reduction, 0.9);
}

TEST(Acceptance, Criterion9Determinism) {
  const fs::path dir =
      fs::temp_directory_path() /
      ("calib_acceptance_det_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  DatasetOptions opt;
  opt.density = 1500;
  opt.decalibration.count = 20;
  opt.decalibration.seed = 10009;
  writeDataset(dir / "ds", opt);

  SolverConfig cfg;
  cfg.max_outer_iterations = 2;
  const EvaluationRun run1 =
      evaluateManifest(dir / "ds" / "manifest.jsonl", cfg, 2);
  writeMetricsJson(run1, dir / "m1.json");
  const EvaluationRun run2 =
      evaluateManifest(dir / "ds" / "manifest.jsonl", cfg, 2);
  writeMetricsJson(run2, dir / "m2.json");

  std::ifstream f1(dir / "m1.json", std::ios::binary);
  std::ifstream f2(dir / "m2.json", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  const bool pass = !b1.empty() && b1 == b2;
  char buf[80];
  std::snprintf(buf, sizeof(buf), "(20 samples, %zu bytes, byte-identical %s)",
                b1.size(), pass ? "yes" : "NO");
  printOutcome(9, "determinism", pass, buf);
  EXPECT_FALSE(b1.empty());
  EXPECT_EQ(b1, b2);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace calib
