// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "gpd/netcore.hpp"
#include "gpd/report.hpp"
#include "gpd/schedule.hpp"
#include "gpd/solver.hpp"

namespace gpd {

struct NoiseBatch {
  Eigen::MatrixXd noise;
  std::vector<int> labels;
};

/// Starting noise and condition labels for distillation. Holds no dataset:
/// distillation never sees clean samples.
class NoiseSource {
 public:
  NoiseSource(Dims dims, int num_classes, int batch, std::uint64_t seed);

  /// Column b is gaussian_noise(dims, key(seed, stream, iteration, b)).
  /// Labels are uniform over 1..num_classes.
  NoiseBatch draw(std::uint64_t stream, std::uint64_t iteration) const;

  const Dims& dims() const { return dims_; }
  int num_classes() const { return num_classes_; }
  int batch() const { return batch_; }

 private:
  Dims dims_;
  int num_classes_;
  int batch_;
  std::uint64_t seed_;
};

/// A training segment covering grid indices i > j.
struct Segment {
  int i;
  int j;
};

/// i = N, N-k, ... while i >= k; with TrailingSegment::train a last shorter
/// segment (i -> 0) covers the remainder.
std::vector<Segment> stage_segments(int steps, int k, TrailingSegment trailing);

/// Everything one progressive stage operates on. Teacher and prior student
/// are frozen; only the student is updated.
struct StageContext {
  int k;
  const VelocityModel& teacher;
  const VelocityModel& prior_student;
  VelocityModel& student;
  const TimeSchedule& schedule;
  const DistillPlan& plan;
  double cfg_scale;

  void validate() const;
};

struct RefinedTarget {
  Eigen::MatrixXd z_input;
  /// Latent at t_{j+1} after the prior student's rollout.
  Eigen::MatrixXd intermediate;
  /// Latent at t_j after the teacher's final step.
  Eigen::MatrixXd z_star;
  /// (z_star - z_input) / (t_j - t_i).
  Eigen::MatrixXd v_target;
  int i = 0;
  int j = 0;
  int k = 0;
};

/// Online target: the frozen prior student integrates t_i -> t_{j+1}
/// (guided), the teacher takes the last step t_{j+1} -> t_j (guided), and
/// the average velocity over the whole segment becomes the target.
RefinedTarget refine_target(const StageContext& ctx, const Eigen::MatrixXd& z_ti, int i,
                            std::span<const int> labels);

/// Constant target: the teacher's own unit-step rollout t_i -> t_j.
RefinedTarget offline_target(const VelocityModel& teacher, const TimeSchedule& schedule,
                             const Eigen::MatrixXd& z_ti, int i, int j, std::span<const int> labels,
                             double cfg_scale);

struct LossWithGrad {
  double value = 0.0;
  ParamSet grads;
};

/// Mean over entries of (student(z, t_i, c) - v_target)^2, with parameter gradients.
LossWithGrad velocity_loss(const VelocityModel& student, const Eigen::MatrixXd& z_ti, double t_i,
                           std::span<const int> labels, const Eigen::MatrixXd& v_target);

/// hf loss between the student's single unguided step t_i -> t_j and z_star
/// (held constant), with gradients through the student evaluation.
LossWithGrad hf_branch(const StageContext& ctx, const Eigen::MatrixXd& z_ti, int i,
                       std::span<const int> labels, const Eigen::MatrixXd& z_star);

struct TotalLoss {
  double loss_v = 0.0;
  double loss_hf = 0.0;
  double lambda = 0.0;
  double total = 0.0;
  bool hf_evaluated = false;
  ParamSet grads;
  RefinedTarget target;
};

/// L_v + lambda * L_hf for one segment. The student is evaluated once and
/// the evaluation feeds both terms; L_hf is skipped when lambda is 0.
TotalLoss total_loss(const StageContext& ctx, const Eigen::MatrixXd& z_ti, int i,
                     std::span<const int> labels);

struct DistillCounters {
  std::uint64_t segments = 0;
  std::uint64_t hf_calls = 0;
  std::uint64_t updates = 0;
};

/// Velocity evaluations per trajectory and iteration, by model.
struct EvalCount {
  std::uint64_t prior = 0;
  std::uint64_t teacher = 0;
  std::uint64_t student = 0;
  std::uint64_t total() const { return prior + teacher + student; }
};

EvalCount expected_gpd_evaluations(int steps, int k, const DistillPlan& plan, double cfg_scale);
EvalCount expected_offline_evaluations(int steps, int k, const DistillPlan& plan, double cfg_scale);

/// Trains ctx.student for `iterations` full trajectory walks, one AdamW
/// update per segment, carrying z_star forward as the next segment input.
RunReport gpd_stage(const StageContext& ctx, const NoiseSource& source, int iterations,
                    OptimState& opt, DistillCounters* counters = nullptr);
RunReport gpd_stage(const StageContext& ctx, const NoiseSource& source, int iterations,
                    OptimState& opt, std::uint64_t stream, DistillCounters* counters = nullptr);

struct StageOutcome {
  VelocityModel student;
  RunReport report;
};

/// One stage from scratch: prior = frozen copy of `previous`, student
/// initialized from `previous`, fresh optimizer, stage-scheduled CFG.
StageOutcome run_stage(const VelocityModel& teacher, const VelocityModel& previous, int k,
                       const DistillPlan& plan, const NoiseSource& source,
                       DistillCounters* counters = nullptr);

struct ProgressiveResult {
  /// Final student v_{theta_K}.
  VelocityModel student;
  /// Students after stages 2..K, in order.
  std::vector<VelocityModel> stage_students;
  RunReport report;
  DistillCounters counters;
};

/// Stages k = 2..K starting from theta_1 = teacher.
ProgressiveResult run_progressive(const VelocityModel& teacher, const DistillPlan& plan,
                                  const NoiseSource& source);

/// Teacher unit-step trajectories (grid index 0..N) for every iteration of
/// a stage, keyed like NoiseSource::draw.
class TrajectoryCache {
 public:
  static TrajectoryCache build(const VelocityModel& teacher, const TimeSchedule& schedule,
                               const NoiseSource& source, std::uint64_t stream, int iterations,
                               double cfg_scale);

  const Eigen::MatrixXd& at(int iteration, int index) const;
  int iterations() const { return static_cast<int>(trajectories_.size()); }

 private:
  std::vector<std::vector<Eigen::MatrixXd>> trajectories_;
};

/// Offline baseline: velocity-only training on the teacher's k-step
/// rollouts, carrying the latent along the teacher trajectory.
RunReport offline_stage(const VelocityModel& teacher, VelocityModel& student, int k,
                        const DistillPlan& plan, double cfg_scale, const NoiseSource& source,
                        int iterations, OptimState& opt, std::uint64_t stream,
                        const TrajectoryCache* cache = nullptr, DistillCounters* counters = nullptr);

struct OfflineResult {
  VelocityModel student;
  RunReport report;
};

/// Student initialized from the teacher and trained at step size k with
/// cfg_scale_for_stage(k).
OfflineResult offline_distill(const VelocityModel& teacher, int k, const DistillPlan& plan,
                              const NoiseSource& source, int iterations,
                              const TrajectoryCache* cache = nullptr);

}  // namespace gpd
