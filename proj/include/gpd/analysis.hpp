// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gpd/distill.hpp"
#include "gpd/evalkit.hpp"

namespace gpd {

/// Target alignment along the student's own stride-K inference path. At
/// every visited grid index the student's predicted velocity is compared
/// with the online refined target and with the teacher's constant k-step
/// target computed from the same latent.
struct AlignmentRow {
  int segment_i = 0;
  double t = 0.0;
  double cos_gpd = 0.0;
  double cos_offline = 0.0;
};

struct AlignmentReport {
  std::vector<AlignmentRow> rows;
  double mean_gpd = 0.0;
  double mean_offline = 0.0;
};

/// Cosines are taken per trajectory (column) and averaged over the batch.
/// `prior` plays the frozen previous-stage student.
AlignmentReport alignment_analysis(const VelocityModel& teacher, const VelocityModel& prior,
                                   const VelocityModel& student, const DistillPlan& plan,
                                   const NoiseBatch& batch, bool with_offline = true);

std::string alignment_csv(const AlignmentReport& report, bool with_offline);

struct EvalPlan {
  std::vector<int> strides{1, 2, 4};
  int samples = 64;
  std::uint64_t seed = 1234;
};

struct EvalRow {
  std::string metric;
  int stride;
  double value;
  std::uint64_t seed;
};

/// Student sampled without guidance at every stride against the teacher's
/// stride-1 reference at cfg_end, on paired noise. Emits sample_mse,
/// hf_energy_ratio, straightness (when the path has >= 3 points) and
/// energy_distance.
std::vector<EvalRow> evaluate_student(const VelocityModel& student, const VelocityModel& teacher,
                                      const DistillPlan& plan, int num_classes, const EvalPlan& eval);

/// Paired noise batch with labels cycling over 1..num_classes.
NoiseBatch eval_batch(const Dims& dims, int num_classes, int samples, std::uint64_t seed);

/// "metric,stride,value,seed"
std::string eval_csv(const std::vector<EvalRow>& rows);

}  // namespace gpd
