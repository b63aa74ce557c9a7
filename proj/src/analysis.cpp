// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/analysis.hpp"

#include "gpd/datagen.hpp"
#include "gpd/random.hpp"

namespace gpd {

AlignmentReport alignment_analysis(const VelocityModel& teacher, const VelocityModel& prior,
                                   const VelocityModel& student, const DistillPlan& plan,
                                   const NoiseBatch& batch, bool with_offline) {
  plan.validate();
  const TimeSchedule schedule = uniform_schedule(plan.steps);
  const VelocityModel frozen_teacher = clone_frozen(teacher);
  const VelocityModel frozen_prior = clone_frozen(prior);
  VelocityModel live = clone_trainable(student);
  const double cfg = cfg_scale_for_stage(plan.K, plan);
  const StageContext ctx{plan.K, frozen_teacher, frozen_prior, live, schedule, plan, cfg};

  AlignmentReport report;
  Eigen::MatrixXd z = batch.noise;
  const std::vector<int> idx = stride_indices(schedule.steps(), plan.K);
  double sum_gpd = 0.0, sum_off = 0.0;
  for (size_t s = 0; s + 1 < idx.size(); ++s) {
    const int i = idx[s], j = idx[s + 1];
    const Eigen::MatrixXd v = live.forward(z, schedule[i], batch.labels);
    const RefinedTarget gpd = refine_target(ctx, z, i, batch.labels);
    Eigen::MatrixXd offline;
    if (with_offline) {
      offline = offline_target(frozen_teacher, schedule, z, i, j, batch.labels, cfg).v_target;
    }

    AlignmentRow row{i, schedule[i], 0.0, 0.0};
    for (Index b = 0; b < z.cols(); ++b) {
      const std::vector<Eigen::VectorXd> flow{v.col(b)};
      row.cos_gpd += cosine_alignment({gpd.v_target.col(b)}, flow).cosines[0];
      if (with_offline) row.cos_offline += cosine_alignment({offline.col(b)}, flow).cosines[0];
    }
    row.cos_gpd /= static_cast<double>(z.cols());
    row.cos_offline /= static_cast<double>(z.cols());
    sum_gpd += row.cos_gpd;
    sum_off += row.cos_offline;
    report.rows.push_back(row);
    z += (schedule[j] - schedule[i]) * v;
  }
  report.mean_gpd = sum_gpd / static_cast<double>(report.rows.size());
  report.mean_offline = sum_off / static_cast<double>(report.rows.size());
  return report;
}

std::string alignment_csv(const AlignmentReport& report, bool with_offline) {
  std::string out = with_offline ? "segment_i,t,cos_gpd,cos_offline\n" : "segment_i,t,cos_gpd\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.segment_i) + "," + format_double(r.t) + "," + format_double(r.cos_gpd);
    if (with_offline) out += "," + format_double(r.cos_offline);
    out += "\n";
  }
  return out;
}

NoiseBatch eval_batch(const Dims& dims, int num_classes, int samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("eval needs at least one sample");
  if (num_classes < 1) throw InvalidArgument("eval needs at least one class");
  NoiseBatch batch;
  batch.noise.resize(dims.size(), samples);
  for (int b = 0; b < samples; ++b) {
    batch.noise.col(b) = gaussian_noise(dims, mix_seed(seed, static_cast<std::uint64_t>(b))).data();
    batch.labels.push_back(1 + b % num_classes);
  }
  return batch;
}

std::vector<EvalRow> evaluate_student(const VelocityModel& student, const VelocityModel& teacher,
                                      const DistillPlan& plan, int num_classes, const EvalPlan& eval) {
  plan.validate();
  if (!(student.arch().dims == teacher.arch().dims)) {
    throw InvalidShape("student and teacher latent shapes differ");
  }
  const Dims& dims = student.arch().dims;
  const TimeSchedule schedule = uniform_schedule(plan.steps);
  const NoiseBatch batch = eval_batch(dims, num_classes, eval.samples, eval.seed);
  const Eigen::MatrixXd reference = sample(teacher, batch.noise, schedule, 1, batch.labels, plan.cfg_end);

  std::vector<EvalRow> rows;
  for (int stride : eval.strides) {
    SolveRecord record;
    const Eigen::MatrixXd out = sample(student, batch.noise, schedule, stride, batch.labels, 1.0, &record);
    rows.push_back({"sample_mse", stride, sample_mse(out, reference), eval.seed});
    rows.push_back({"hf_energy_ratio", stride, hf_energy_ratio(out, reference, dims, plan.filter), eval.seed});
    if (record.latents.size() >= 3) rows.push_back({"straightness", stride, straightness(record), eval.seed});
    rows.push_back({"energy_distance", stride, energy_distance(out, reference), eval.seed});
  }
  return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::string out = "metric,stride,value,seed\n";
  for (const auto& r : rows) {
    out += r.metric + "," + std::to_string(r.stride) + "," + format_double(r.value) + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

}  // namespace gpd
