// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "gpd/datagen.hpp"
#include "gpd/netcore.hpp"
#include "gpd/report.hpp"

namespace gpd {

/// z_t = (1 - t) x + t noise.
LatentTensor interpolate(const LatentTensor& x_clean, const LatentTensor& noise, double t);

/// Velocity of the linear path, noise - x. Integrating it from t = 1 down to
/// t = 0 returns x.
LatentTensor fm_target(const LatentTensor& x_clean, const LatentTensor& noise);

struct TeacherPlan {
  int iterations = 3000;
  int batch_size = 64;
  AdamWConfig optim{.lr = 2e-3, .weight_decay = 1e-4};
  /// Probability of replacing a label with the null class, so the same
  /// network also learns the unconditional field used by guidance.
  double cond_dropout = 0.1;
  /// Cosine decay of the learning rate to `final_lr_fraction * lr`.
  double final_lr_fraction = 0.05;
  /// Record the loss every this many iterations.
  int log_every = 10;

  void validate() const;
};

struct TeacherResult {
  VelocityModel model;
  RunReport report;
};

/// Minimizes E|v(z_t, t, c) - (noise - x)|^2 with t ~ U[0, 1]. `seed` drives
/// the initialization and (through a derived stream) the data order, noise,
/// times and label dropout. Throws TrainingFailure on a non-finite loss.
TeacherResult train_teacher(const DatasetSpec& data, const Arch& arch, const TeacherPlan& plan,
                            std::uint64_t seed);

/// Teacher quality check: energy distance of teacher samples to held-out
/// data must be at most a tenth of the distance of pure noise to that data.
struct GateResult {
  double teacher_distance = 0.0;
  double noise_distance = 0.0;
  bool passed = false;
};

struct GatePlan {
  int steps = 32;
  int samples = 256;
  double cfg_scale = 1.0;
  std::uint64_t seed = 99;
  double required_ratio = 10.0;
};

GateResult quality_gate(const VelocityModel& teacher, const DatasetSpec& data, const GatePlan& plan);

}  // namespace gpd
