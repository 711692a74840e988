// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Direct extrinsic calibration: minimize the combined depth-consistency and
// point-distance objective over se(3), one stage per parameter group, with
// outer re-alignment steps whose residual transforms accumulate into the
// final estimate.

#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "calib/camera.hpp"
#include "calib/depth_map.hpp"
#include "calib/kdtree.hpp"
#include "calib/lie.hpp"
#include "calib/losses.hpp"
#include "calib/point_cloud.hpp"
#include "calib/transformer.hpp"

namespace calib {

enum class GradientMode { kFiniteDifference, kProvided };

/// One optimization stage: which parameter group moves and under which
/// objective weights.
struct StageSpec {
  bool rotation_active = true;
  bool translation_active = false;
  LossWeights weights;
};

/// Rotation first against the depth-consistency + chamfer objective, then
/// translation on the chamfer term, then a joint photometric-led polish.
///
/// Two measured deviations from the plain rotation/translation split:
/// chamfer rather than EMD drives the translation stage (on re-rasterized
/// cloud pairs the EMD bijection absorbs the support mismatch between the
/// samplings and biases its minimizer by several centimeters), and the
/// final joint stage follows the coupled pitch/height valley that the
/// single-group stages cannot descend, taking the residual from a few
/// centimeters to millimeters.
inline std::vector<StageSpec> defaultStageSchedule() {
  return {
      {true, false, LossWeights{1.0, 0.15, DistanceKind::kChamfer}},
      {false, true, LossWeights{0.0, 1.0, DistanceKind::kChamfer}},
      {true, true, LossWeights{1.0, 0.15, DistanceKind::kChamfer}},
  };
}

/// The plain rotation-then-translation schedule with the earth mover's
/// distance driving the translation stage.
inline std::vector<StageSpec> emdStageSchedule() {
  return {
      {true, false, LossWeights{1.0, 0.15, DistanceKind::kChamfer}},
      {false, true, LossWeights{0.0, 1.0, DistanceKind::kEmd}},
  };
}

struct SolverConfig {
  int max_outer_iterations = 5;   // re-alignment steps
  int max_inner_iterations = 60;  // descent steps per stage
  GradientMode gradient_mode = GradientMode::kFiniteDifference;
  double fd_step_rot = 1e-4;    // radians
  double fd_step_trans = 1e-4;  // meters
  double convergence_tol_loss = 1e-7;  // relative loss decrease
  double convergence_tol_step = 1e-7;  // norm of the xi update
  double outer_step_tol = 1e-4;  // residual of this size counts as identity
  std::vector<StageSpec> stage_schedule = defaultStageSchedule();
  std::uint64_t seed = 0;

  // Point budgets for the distance terms; larger is slower and slightly
  // more accurate. Clouds above a budget are reduced to centroids of
  // spatially compact clusters.
  int chamfer_cloud_size = 4096;
  int emd_cloud_size = 256;

  // The distance weight of depth-consistency stages is interpolated from
  // its configured value to this across outer steps. Negative disables.
  double beta_dist_final = 1.75;

  void checkValid() const {
    if (max_outer_iterations < 1 || max_inner_iterations < 1) {
      throw std::invalid_argument("SolverConfig: iteration budgets must be >= 1");
    }
    if (!(fd_step_rot > 0) || !(fd_step_trans > 0)) {
      throw std::invalid_argument("SolverConfig: finite-difference steps must be > 0");
    }
    if (!(convergence_tol_loss > 0) || !(convergence_tol_step > 0) ||
        !(outer_step_tol > 0)) {
      throw std::invalid_argument("SolverConfig: tolerances must be > 0");
    }
    if (stage_schedule.empty()) {
      throw std::invalid_argument("SolverConfig: empty stage schedule");
    }
    if (chamfer_cloud_size < 8 || emd_cloud_size < 8) {
      throw std::invalid_argument("SolverConfig: cloud budgets must be >= 8");
    }
    for (const auto& s : stage_schedule) {
      s.weights.checkValid();
      if (!s.rotation_active && !s.translation_active) {
        throw std::invalid_argument("SolverConfig: stage with no active parameters");
      }
    }
  }
};

/// Everything one stage needs to evaluate the objective at a candidate xi.
/// Holds the working cloud at the current outer step plus reduced clouds
/// and a prebuilt index for the static target side.
class CalibrationProblem {
 public:
  CalibrationProblem(const PointCloud& working_cloud,
                     const SparseDepthMap& target_map,
                     const CameraIntrinsics& k, const SolverConfig& cfg)
      : working_(working_cloud),
        target_map_(target_map),
        k_(k),
        target_cloud_(lift(target_map, k)) {
    if (working_.empty()) {
      throw std::invalid_argument("CalibrationProblem: empty working cloud");
    }
    if (target_cloud_.empty()) {
      throw std::invalid_argument("CalibrationProblem: empty target map");
    }
    // Reductions chunk a spatially ordered copy so every centroid
    // summarizes one compact region; chunks of the raster order would
    // straddle depth discontinuities and average into free space.
    const PointCloud working_sorted = spatiallyOrdered(working_);
    const PointCloud target_sorted = spatiallyOrdered(target_cloud_);
    working_chamfer_ = reduce(working_sorted, cfg.chamfer_cloud_size);
    target_chamfer_ = reduce(target_sorted, cfg.chamfer_cloud_size);
    target_chamfer_tree_ = std::make_unique<KdTree3>(target_chamfer_.points);
    working_chamfer_tree_ = std::make_unique<KdTree3>(working_chamfer_.points);

    const int k_emd = int(std::min({std::size_t(cfg.emd_cloud_size),
                                    working_.size(), target_cloud_.size()}));
    working_emd_ = reduce(working_sorted, k_emd);
    target_emd_ = reduce(target_sorted, k_emd);
  }

  LossBreakdown evaluate(const Se3Params& xi, const LossWeights& w) const {
    const RigidTransform t = toTransform(xi);
    const Mat3& r = t.rotation.matrix();
    const Vec3& tr = t.translation;
    LossBreakdown out;
    if (w.alpha_ph > 0) {
      double sum = 0;
      long overlap = 0;
      for (const auto& p : working_.points) {
        const auto proj = project(r * p + tr, k_);
        if (!proj) continue;
        const auto sample = sparseBilinearSample(target_map_, proj->pixel);
        if (!sample) continue;
        const double d = *sample - proj->depth;
        sum += d * d;
        ++overlap;
      }
      out.photometric = overlap ? 0.5 * sum / double(overlap) : 0.0;
      out.valid_pixel_overlap = overlap;
    }
    if (w.beta_dist > 0) {
      switch (w.distance_kind) {
        case DistanceKind::kChamfer: {
          // Reverse direction through the static working-cloud index:
          // rigid maps preserve distances, so the nearest moved working
          // point to q is the moved nearest working point to T^-1 q.
          const Mat3 r_inv = r.transpose();
          double d = 0;
          for (const auto& p : working_chamfer_.points) {
            d += target_chamfer_tree_->nearest(r * p + tr).dist_sq;
          }
          for (const auto& q : target_chamfer_.points) {
            d += working_chamfer_tree_->nearest(r_inv * (q - tr)).dist_sq;
          }
          out.distance = d;
          break;
        }
        case DistanceKind::kEmd:
          out.distance =
              emdDistance(transformCloud(working_emd_, t), target_emd_).distance;
          break;
        case DistanceKind::kCentroidIcp:
          // Needs index correspondence, which only equal-size clouds can
          // even claim; centroidIcpDistance re-checks.
          out.distance = centroidIcpDistance(
              working_, target_cloud_, t,
              int(std::min(working_.size(), std::size_t(512))));
          break;
      }
    }
    out.combined = w.alpha_ph * out.photometric + w.beta_dist * out.distance;
    if (!std::isfinite(out.combined)) {
      throw std::runtime_error("CalibrationProblem: non-finite loss");
    }
    return out;
  }

  double objective(const Se3Params& xi, const LossWeights& w) const {
    return evaluate(xi, w).combined;
  }

  const PointCloud& workingCloud() const { return working_; }
  const PointCloud& targetCloud() const { return target_cloud_; }
  long photometricOverlapAtIdentity() const {
    return photometricLossSampled(working_, target_map_, k_).overlap;
  }

  /// Lever arm of a radian of rotation, i.e. the mean point distance from
  /// the origin. Used to measure rotation steps in meters of displacement
  /// so the two parameter groups descend at commensurate rates.
  double rotationLeverArm() const {
    double sum = 0;
    for (const auto& p : working_chamfer_.points) sum += p.norm();
    return std::max(1.0, sum / double(working_chamfer_.size()));
  }

  /// Caller-supplied gradient for GradientMode::kProvided.
  std::function<Vec6(const Se3Params&, const LossWeights&)> provided_gradient;

 private:
  static PointCloud reduce(const PointCloud& c, int budget) {
    return c.size() > std::size_t(budget) ? clusterCentroids(c, budget) : c;
  }

  PointCloud working_;
  SparseDepthMap target_map_;
  CameraIntrinsics k_;
  PointCloud target_cloud_;
  PointCloud working_chamfer_, target_chamfer_;
  PointCloud working_emd_, target_emd_;
  std::unique_ptr<KdTree3> target_chamfer_tree_;
  std::unique_ptr<KdTree3> working_chamfer_tree_;
};

using ActiveMask = std::array<bool, 6>;  // (vx, vy, vz, wx, wy, wz)

inline ActiveMask activeMask(const StageSpec& stage) {
  ActiveMask m{};
  m[0] = m[1] = m[2] = stage.translation_active;
  m[3] = m[4] = m[5] = stage.rotation_active;
  return m;
}

/// Central-difference gradient of the objective at xi, restricted to the
/// active coordinates (others report 0). Rotation and translation
/// coordinates use their own probe steps.
inline Vec6 lossGradient(const CalibrationProblem& problem,
                         const LossWeights& weights, const Se3Params& xi,
                         const SolverConfig& cfg,
                         const ActiveMask& active = {true, true, true, true,
                                                     true, true}) {
  if (cfg.gradient_mode == GradientMode::kProvided) {
    if (!problem.provided_gradient) {
      throw std::invalid_argument("lossGradient: no provided gradient");
    }
    Vec6 g = problem.provided_gradient(xi, weights);
    for (int i = 0; i < 6; ++i) {
      if (!active[i]) g[i] = 0;
    }
    return g;
  }
  Vec6 g = Vec6::Zero();
  const Vec6 base = xi.vector();
  for (int i = 0; i < 6; ++i) {
    if (!active[i]) continue;
    const double h = i < 3 ? cfg.fd_step_trans : cfg.fd_step_rot;
    Vec6 probe = base;
    probe[i] = base[i] + h;
    const double plus = problem.objective(Se3Params::FromVector(probe), weights);
    probe[i] = base[i] - h;
    const double minus = problem.objective(Se3Params::FromVector(probe), weights);
    g[i] = (plus - minus) / (2.0 * h);
  }
  return g;
}

struct StageTrace {
  int inner_iterations = 0;
  double loss_start = 0;
  double loss_end = 0;
  Vec6 gradient_start = Vec6::Zero();
  Vec6 gradient_end = Vec6::Zero();
};

/// Gradient descent over the stage's active coordinates: Barzilai-Borwein
/// step sizes with Armijo backtracking, monotone by construction. Inactive
/// coordinates pass through untouched.
///
/// The descent runs in a scaled metric u = (v, L * omega) with L the
/// rotation lever arm, so a unit of either parameter group displaces the
/// cloud by about a meter. In the raw metric the rotation gradient is
/// L times steeper and steepest descent zig-zags across the coupled
/// rotation/translation valleys instead of walking along them.
inline Se3Params solveStage(const CalibrationProblem& problem,
                            const Se3Params& initial, const StageSpec& stage,
                            const SolverConfig& cfg,
                            StageTrace* trace = nullptr) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 20;
  constexpr double kFirstStepNorm = 0.02;  // first trial displacement, m
  constexpr double kMaxStepNorm = 0.5;     // BB displacement cap, m

  stage.weights.checkValid();
  const ActiveMask active = activeMask(stage);
  const double lever = problem.rotationLeverArm();
  Vec6 scale = Vec6::Ones();      // u = scale .* xi
  scale.tail<3>().setConstant(lever);

  const auto to_xi = [&](const Vec6& u) {
    return Se3Params::FromVector(u.cwiseQuotient(scale));
  };

  Vec6 u = initial.vector().cwiseProduct(scale);
  double f = problem.objective(initial, stage.weights);

  // Chain rule: d f / d u = (d f / d xi) / scale.
  const auto gradient_u = [&](const Vec6& at_u) {
    return Vec6(lossGradient(problem, stage.weights, to_xi(at_u), cfg, active)
                    .cwiseQuotient(scale));
  };
  Vec6 g = gradient_u(u);

  StageTrace local;
  local.loss_start = f;
  local.gradient_start = g.cwiseProduct(scale);  // report in xi units

  double step = 0;  // chosen fresh on the first iteration
  Vec6 prev_s = Vec6::Zero(), prev_y = Vec6::Zero();
  bool have_history = false;

  for (int iter = 0; iter < cfg.max_inner_iterations; ++iter) {
    const double g_norm = g.norm();
    if (g_norm == 0) break;

    if (have_history) {
      const double sy = prev_s.dot(prev_y);
      step = sy > 0 ? prev_s.squaredNorm() / sy : step * 2.0;
    } else {
      step = kFirstStepNorm / g_norm;
    }
    step = std::min(step, kMaxStepNorm / g_norm);

    // Backtracking line search along -g.
    bool accepted = false;
    Vec6 u_next = Vec6::Zero();
    double f_next = 0;
    for (int halvings = 0; halvings <= kMaxHalvings; ++halvings) {
      u_next = u - step * g;
      f_next = problem.objective(to_xi(u_next), stage.weights);
      if (f_next <= f - kArmijo * step * g_norm * g_norm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vec6 s = u_next - u;
    u = u_next;
    ++local.inner_iterations;

    const Vec6 g_new = gradient_u(u);
    prev_s = s;
    prev_y = g_new - g;
    g = g_new;
    have_history = true;

    const double decrease = f - f_next;
    f = f_next;
    if (s.cwiseQuotient(scale).norm() < cfg.convergence_tol_step) break;
    if (decrease < cfg.convergence_tol_loss * std::max(std::abs(f), 1e-12)) {
      break;
    }
  }

  local.loss_end = f;
  local.gradient_end = g.cwiseProduct(scale);
  if (trace) *trace = local;
  return to_xi(u);
}

struct OuterStepRecord {
  RigidTransform accumulated;  // estimate after this step
  Se3Params residual;          // this step's correction
  LossBreakdown loss;          // reference objective after the step
  int inner_iterations = 0;
  Vec6 gradient_norms = Vec6::Zero();  // |d loss / d xi_i| at step start
};

struct SolverReport {
  RigidTransform final_transform;
  std::vector<OuterStepRecord> per_outer_step;
  bool converged = false;
  double wall_time_seconds = 0;  // informational only, not used in decisions
  LossBreakdown initial_loss;
};

/// Full calibration: repeatedly run the stage schedule against the current
/// working cloud, fold each residual into the estimate (new transform on
/// the left, so points map through the accumulated product), re-transform
/// the cloud, and stop once a residual is effectively the identity.
inline SolverReport calibrate(const PointCloud& source_cloud,
                              const SparseDepthMap& target_map,
                              const CameraIntrinsics& k,
                              const RigidTransform& initial,
                              const SolverConfig& cfg) {
  cfg.checkValid();
  if (source_cloud.empty()) {
    throw std::invalid_argument("calibrate: empty source cloud");
  }
  if (target_map.validCount() == 0) {
    throw std::invalid_argument("calibrate: empty target map");
  }
  const auto t0 = std::chrono::steady_clock::now();

  const LossWeights reference = cfg.stage_schedule.front().weights;

  SolverReport report;
  PointCloud working = transformCloud(source_cloud, initial);
  RigidTransform accumulated = initial;

  for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
    const CalibrationProblem problem(working, target_map, k, cfg);

    if (outer == 0) {
      bool any_distance = false;
      for (const auto& s : cfg.stage_schedule) {
        any_distance |= s.weights.beta_dist > 0;
      }
      if (!any_distance && problem.photometricOverlapAtIdentity() == 0) {
        throw std::invalid_argument(
            "calibrate: no photometric overlap and no point-distance term; "
            "objective is undefined");
      }
      report.initial_loss = problem.evaluate(Se3Params::Zero(), reference);
    }

    const double ref_before =
        problem.objective(Se3Params::Zero(), reference);
    const Vec6 start_gradient =
        lossGradient(problem, reference, Se3Params::Zero(), cfg).cwiseAbs();

    // Interpolate the distance weight of depth-consistency stages across
    // the outer schedule.
    const double ramp_t = cfg.max_outer_iterations > 1
                              ? double(outer) / (cfg.max_outer_iterations - 1)
                              : 0.0;

    Se3Params xi = Se3Params::Zero();
    int inner_total = 0;
    for (std::size_t si = 0; si < cfg.stage_schedule.size(); ++si) {
      StageSpec staged = cfg.stage_schedule[si];
      if (si == 0 && cfg.beta_dist_final >= 0 && staged.weights.alpha_ph > 0) {
        staged.weights.beta_dist +=
            ramp_t * (cfg.beta_dist_final - staged.weights.beta_dist);
      }
      StageTrace trace;
      xi = solveStage(problem, xi, staged, cfg, &trace);
      inner_total += trace.inner_iterations;
    }

    const LossBreakdown after = problem.evaluate(xi, reference);
    if (after.combined > ref_before) {
      // The schedule failed to improve the reference objective from here;
      // treat the previous estimate as final.
      report.converged = !report.per_outer_step.empty() || ref_before == 0;
      break;
    }

    const RigidTransform step_transform = toTransform(xi);
    working = transformCloud(working, step_transform);
    accumulated = compose(step_transform, accumulated);

    OuterStepRecord rec;
    rec.accumulated = accumulated;
    rec.residual = xi;
    rec.loss = after;
    rec.inner_iterations = inner_total;
    rec.gradient_norms = start_gradient;
    report.per_outer_step.push_back(rec);

    if (xi.vector().norm() < cfg.outer_step_tol) {
      report.converged = true;
      break;
    }
  }

  report.final_transform = accumulated;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace calib
