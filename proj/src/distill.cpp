// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/distill.hpp"

#include <chrono>
#include <cmath>

#include "gpd/datagen.hpp"
#include "gpd/random.hpp"
#include "gpd/tensorfreq.hpp"

namespace gpd {

namespace {

std::string segment_context(int k, int i, int j) {
  return "stage " + std::to_string(k) + " segment " + std::to_string(i) + "->" + std::to_string(j);
}

void check_batch(const Eigen::MatrixXd& z, std::span<const int> labels, const Arch& arch) {
  if (z.rows() != arch.latent_size()) throw InvalidShape("latent batch does not match the model dims");
  if (static_cast<Index>(labels.size()) != z.cols()) throw InvalidShape("one label per latent column");
}

int prior_evaluations(int span, PriorRollout mode) {
  if (span <= 1) return 0;
  return mode == PriorRollout::single_step ? 1 : span - 1;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

NoiseSource::NoiseSource(Dims dims, int num_classes, int batch, std::uint64_t seed)
    : dims_(dims), num_classes_(num_classes), batch_(batch), seed_(seed) {
  dims_.validate();
  if (num_classes_ < 1) throw InvalidArgument("noise source needs at least one class");
  if (batch_ < 1) throw InvalidArgument("noise source batch must be >= 1");
}

NoiseBatch NoiseSource::draw(std::uint64_t stream, std::uint64_t iteration) const {
  const std::uint64_t key = mix_seed(mix_seed(seed_, stream), iteration);
  NoiseBatch out;
  out.noise.resize(dims_.size(), batch_);
  CounterRng label_rng(mix_seed(key, 0x1ABE1));
  for (int b = 0; b < batch_; ++b) {
    out.noise.col(b) = gaussian_noise(dims_, mix_seed(key, static_cast<std::uint64_t>(b))).data();
    out.labels.push_back(1 + static_cast<int>(label_rng.below(static_cast<std::uint64_t>(num_classes_))));
  }
  return out;
}

std::vector<Segment> stage_segments(int steps, int k, TrailingSegment trailing) {
  if (k < 1 || steps < 1) throw InvalidArgument("stage_segments: steps and k must be positive");
  std::vector<Segment> segs;
  int i = steps;
  for (; i >= k; i -= k) segs.push_back({i, i - k});
  if (i > 0 && trailing == TrailingSegment::train) segs.push_back({i, 0});
  return segs;
}

void StageContext::validate() const {
  if (k < 2) throw InvalidArgument("stages start at k = 2");
  if (k > plan.K) throw InvalidArgument("stage k exceeds the final step size K");
  if (k > schedule.steps()) throw InvalidArgument("stage k exceeds the schedule length");
  if (!teacher.frozen() || !prior_student.frozen()) {
    throw InvalidArgument("teacher and prior student must be frozen");
  }
  if (student.frozen()) throw InvalidArgument("the live student must not be frozen");
  if (!(teacher.arch() == student.arch()) || !(prior_student.arch() == student.arch())) {
    throw InvalidShape("teacher, prior student and student architectures differ");
  }
  if (k == 2 && prior_student.param_hash() != teacher.param_hash()) {
    throw InvalidArgument("at stage 2 the prior student must equal the teacher");
  }
  if (!(cfg_scale >= 1.0)) throw InvalidArgument("cfg scale must be >= 1");
}

RefinedTarget refine_target(const StageContext& ctx, const Eigen::MatrixXd& z_ti, int i,
                            std::span<const int> labels) {
  if (ctx.k < 2) throw InvalidArgument("refine_target: stages start at k = 2");
  const TimeSchedule& s = ctx.schedule;
  if (i < 1 || i > s.steps()) throw InvalidArgument("refine_target: segment start off the grid");
  check_batch(z_ti, labels, ctx.student.arch());

  RefinedTarget r;
  r.k = ctx.k;
  r.i = i;
  r.j = std::max(i - ctx.k, 0);
  const int mid = r.j + 1;
  r.z_input = z_ti;
  r.intermediate = z_ti;
  if (i > mid) {
    const GuidedField prior(ctx.prior_student, labels, ctx.cfg_scale);
    const int substeps = prior_evaluations(i - r.j, ctx.plan.prior_rollout);
    r.intermediate = solve_segment_indices(prior, z_ti, s, i, mid, substeps);
  }
  if (!r.intermediate.allFinite()) {
    throw NumericFailure("non-finite intermediate latent at " + segment_context(ctx.k, r.i, r.j));
  }
  const GuidedField teacher(ctx.teacher, labels, ctx.cfg_scale);
  r.z_star = euler_step(teacher, r.intermediate, s[mid], s[r.j]);
  r.v_target = (r.z_star - z_ti) / (s[r.j] - s[i]);
  if (!r.v_target.allFinite()) {
    throw NumericFailure("non-finite refined target at " + segment_context(ctx.k, r.i, r.j));
  }
  return r;
}

RefinedTarget offline_target(const VelocityModel& teacher, const TimeSchedule& schedule,
                             const Eigen::MatrixXd& z_ti, int i, int j, std::span<const int> labels,
                             double cfg_scale) {
  if (!(i > j && j >= 0 && i <= schedule.steps())) throw InvalidArgument("offline_target: bad segment");
  check_batch(z_ti, labels, teacher.arch());
  RefinedTarget r;
  r.i = i;
  r.j = j;
  r.k = i - j;
  r.z_input = z_ti;
  const GuidedField field(teacher, labels, cfg_scale);
  r.z_star = solve_segment_indices(field, z_ti, schedule, i, j, i - j);
  r.intermediate = r.z_star;
  r.v_target = (r.z_star - z_ti) / (schedule[j] - schedule[i]);
  if (!r.v_target.allFinite()) throw NumericFailure("non-finite offline target at segment " + std::to_string(i));
  return r;
}

LossWithGrad velocity_loss(const VelocityModel& student, const Eigen::MatrixXd& z_ti, double t_i,
                           std::span<const int> labels, const Eigen::MatrixXd& v_target) {
  check_batch(z_ti, labels, student.arch());
  if (v_target.rows() != z_ti.rows() || v_target.cols() != z_ti.cols()) {
    throw InvalidShape("velocity_loss: target shape does not match the latent batch");
  }
  ForwardCache cache;
  const Eigen::MatrixXd diff = student.forward(z_ti, t_i, labels, &cache) - v_target;
  const double n = static_cast<double>(diff.size());
  return {diff.squaredNorm() / n, student.backward((2.0 / n) * diff, cache)};
}

LossWithGrad hf_branch(const StageContext& ctx, const Eigen::MatrixXd& z_ti, int i,
                       std::span<const int> labels, const Eigen::MatrixXd& z_star) {
  check_batch(z_ti, labels, ctx.student.arch());
  const int j = std::max(i - ctx.k, 0);
  const double dt = ctx.schedule[j] - ctx.schedule[i];
  ForwardCache cache;
  const Eigen::MatrixXd v = ctx.student.forward(z_ti, ctx.schedule[i], labels, &cache);
  const Eigen::MatrixXd z_pred = z_ti + dt * v;
  const HighPassFilter filter(ctx.student.arch().dims, ctx.plan.filter);
  return {filter.loss(z_pred, z_star), ctx.student.backward(dt * filter.loss_gradient(z_pred, z_star), cache)};
}

TotalLoss total_loss(const StageContext& ctx, const Eigen::MatrixXd& z_ti, int i,
                     std::span<const int> labels) {
  TotalLoss out;
  out.target = refine_target(ctx, z_ti, i, labels);
  const TimeSchedule& s = ctx.schedule;
  const int j = out.target.j;

  ForwardCache cache;
  const Eigen::MatrixXd v = ctx.student.forward(z_ti, s[i], labels, &cache);
  const Eigen::MatrixXd diff = v - out.target.v_target;
  const double n = static_cast<double>(diff.size());
  out.loss_v = diff.squaredNorm() / n;
  Eigen::MatrixXd grad = (2.0 / n) * diff;

  out.lambda = hf_weight(ctx.plan.hf_mode, ctx.k, i, s.steps(), ctx.plan.K, ctx.plan.lambda0);
  if (out.lambda > 0.0) {
    const double dt = s[j] - s[i];
    const Eigen::MatrixXd z_pred = z_ti + dt * v;
    const HighPassFilter filter(ctx.student.arch().dims, ctx.plan.filter);
    out.loss_hf = filter.loss(z_pred, out.target.z_star);
    grad += (out.lambda * dt) * filter.loss_gradient(z_pred, out.target.z_star);
    out.hf_evaluated = true;
  }
  out.total = out.loss_v + out.lambda * out.loss_hf;
  out.grads = ctx.student.backward(grad, cache);
  return out;
}

EvalCount expected_gpd_evaluations(int steps, int k, const DistillPlan& plan, double cfg_scale) {
  const std::uint64_t g = cfg_scale == 1.0 ? 1 : 2;
  EvalCount c;
  for (const Segment& seg : stage_segments(steps, k, plan.trailing)) {
    c.prior += g * static_cast<std::uint64_t>(prior_evaluations(seg.i - seg.j, plan.prior_rollout));
    c.teacher += g;
    c.student += 1;
  }
  return c;
}

EvalCount expected_offline_evaluations(int steps, int k, const DistillPlan& plan, double cfg_scale) {
  const std::uint64_t g = cfg_scale == 1.0 ? 1 : 2;
  EvalCount c;
  for (const Segment& seg : stage_segments(steps, k, plan.trailing)) {
    c.teacher += g * static_cast<std::uint64_t>(seg.i - seg.j);
    c.student += 1;
  }
  return c;
}

RunReport gpd_stage(const StageContext& ctx, const NoiseSource& source, int iterations,
                    OptimState& opt, DistillCounters* counters) {
  return gpd_stage(ctx, source, iterations, opt, static_cast<std::uint64_t>(ctx.k), counters);
}

RunReport gpd_stage(const StageContext& ctx, const NoiseSource& source, int iterations,
                    OptimState& opt, std::uint64_t stream, DistillCounters* counters) {
  ctx.validate();
  if (iterations < 1) throw InvalidArgument("gpd_stage: iterations must be >= 1");
  if (!(source.dims() == ctx.student.arch().dims)) throw InvalidShape("noise source dims differ from the model");
  const auto segments = stage_segments(ctx.schedule.steps(), ctx.k, ctx.plan.trailing);

  RunReport report;
  for (int it = 0; it < iterations; ++it) {
    NoiseBatch batch = source.draw(stream, static_cast<std::uint64_t>(it));
    Eigen::MatrixXd z = std::move(batch.noise);
    for (const Segment& seg : segments) {
      const auto start = std::chrono::steady_clock::now();
      TotalLoss loss = total_loss(ctx, z, seg.i, batch.labels);
      if (!std::isfinite(loss.total) || !loss.grads.all_finite()) {
        throw TrainingFailure("non-finite loss at " + segment_context(ctx.k, seg.i, seg.j) +
                              ", iteration " + std::to_string(it));
      }
      adamw_step(ctx.student, loss.grads, opt);
      if (counters) {
        counters->segments += 1;
        counters->updates += 1;
        counters->hf_calls += loss.hf_evaluated ? 1 : 0;
      }
      report.stages.push_back({ctx.k, it, seg.i, loss.loss_v, loss.loss_hf, loss.lambda, ctx.cfg_scale,
                               ctx.plan.record_wall_time ? elapsed_ms(start) : 0.0});
      z = std::move(loss.target.z_star);
    }
  }
  return report;
}

StageOutcome run_stage(const VelocityModel& teacher, const VelocityModel& previous, int k,
                       const DistillPlan& plan, const NoiseSource& source, DistillCounters* counters) {
  plan.validate();
  const TimeSchedule schedule = uniform_schedule(plan.steps);
  const VelocityModel frozen_teacher = clone_frozen(teacher);
  const VelocityModel prior = clone_frozen(previous);
  StageOutcome out{clone_trainable(previous), {}};
  const StageContext ctx{k, frozen_teacher, prior, out.student, schedule, plan, cfg_scale_for_stage(k, plan)};
  OptimState opt = make_optimizer(out.student, plan.optim);
  out.report = gpd_stage(ctx, source, plan.iters_per_stage, opt, counters);
  out.student.reset_evaluations();
  return out;
}

ProgressiveResult run_progressive(const VelocityModel& teacher, const DistillPlan& plan,
                                  const NoiseSource& source) {
  plan.validate();
  ProgressiveResult result{clone_trainable(teacher), {}, {}, {}};
  for (int k = 2; k <= plan.K; ++k) {
    StageOutcome stage = run_stage(teacher, result.student, k, plan, source, &result.counters);
    result.report.append(stage.report);
    result.student = std::move(stage.student);
    result.stage_students.push_back(result.student);
  }
  return result;
}

TrajectoryCache TrajectoryCache::build(const VelocityModel& teacher, const TimeSchedule& schedule,
                                       const NoiseSource& source, std::uint64_t stream, int iterations,
                                       double cfg_scale) {
  TrajectoryCache cache;
  for (int it = 0; it < iterations; ++it) {
    NoiseBatch batch = source.draw(stream, static_cast<std::uint64_t>(it));
    const GuidedField field(teacher, batch.labels, cfg_scale);
    std::vector<Eigen::MatrixXd> traj(static_cast<size_t>(schedule.steps()) + 1);
    traj[schedule.steps()] = batch.noise;
    for (int i = schedule.steps(); i > 0; --i) traj[i - 1] = euler_step(field, traj[i], schedule[i], schedule[i - 1]);
    cache.trajectories_.push_back(std::move(traj));
  }
  return cache;
}

const Eigen::MatrixXd& TrajectoryCache::at(int iteration, int index) const {
  return trajectories_.at(static_cast<size_t>(iteration)).at(static_cast<size_t>(index));
}

RunReport offline_stage(const VelocityModel& teacher, VelocityModel& student, int k,
                        const DistillPlan& plan, double cfg_scale, const NoiseSource& source,
                        int iterations, OptimState& opt, std::uint64_t stream,
                        const TrajectoryCache* cache, DistillCounters* counters) {
  plan.validate();
  if (k < 2) throw InvalidArgument("offline_stage: k must be >= 2");
  if (cache && cache->iterations() < iterations) throw InvalidArgument("trajectory cache too short");
  const TimeSchedule schedule = uniform_schedule(plan.steps);
  if (k > schedule.steps()) throw InvalidArgument("offline_stage: k exceeds the schedule length");
  const auto segments = stage_segments(schedule.steps(), k, plan.trailing);

  RunReport report;
  for (int it = 0; it < iterations; ++it) {
    NoiseBatch batch = source.draw(stream, static_cast<std::uint64_t>(it));
    Eigen::MatrixXd z = std::move(batch.noise);
    for (const Segment& seg : segments) {
      const auto start = std::chrono::steady_clock::now();
      Eigen::MatrixXd v_target;
      Eigen::MatrixXd next;
      if (cache) {
        next = cache->at(it, seg.j);
        v_target = (next - z) / (schedule[seg.j] - schedule[seg.i]);
      } else {
        RefinedTarget target = offline_target(teacher, schedule, z, seg.i, seg.j, batch.labels, cfg_scale);
        v_target = std::move(target.v_target);
        next = std::move(target.z_star);
      }
      LossWithGrad loss = velocity_loss(student, z, schedule[seg.i], batch.labels, v_target);
      if (!std::isfinite(loss.value) || !loss.grads.all_finite()) {
        throw TrainingFailure("non-finite offline loss at " + segment_context(k, seg.i, seg.j) +
                              ", iteration " + std::to_string(it));
      }
      adamw_step(student, loss.grads, opt);
      if (counters) {
        counters->segments += 1;
        counters->updates += 1;
      }
      report.stages.push_back({k, it, seg.i, loss.value, 0.0, 0.0, cfg_scale,
                               plan.record_wall_time ? elapsed_ms(start) : 0.0});
      z = std::move(next);
    }
  }
  return report;
}

OfflineResult offline_distill(const VelocityModel& teacher, int k, const DistillPlan& plan,
                              const NoiseSource& source, int iterations, const TrajectoryCache* cache) {
  plan.validate();
  const double cfg = cfg_scale_for_stage(k, plan);
  const VelocityModel frozen_teacher = clone_frozen(teacher);
  OfflineResult out{clone_trainable(teacher), {}};
  OptimState opt = make_optimizer(out.student, plan.optim);
  out.report = offline_stage(frozen_teacher, out.student, k, plan, cfg, source, iterations, opt,
                             static_cast<std::uint64_t>(k), cache);
  out.student.reset_evaluations();
  return out;
}

}  // namespace gpd
