// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

// Hand-built models and small trained teachers shared by the test suites.

#pragma once

#include "gpd/datagen.hpp"
#include "gpd/flowtrain.hpp"
#include "gpd/netcore.hpp"
#include "gpd/schedule.hpp"

namespace gpd::testing {

inline Arch fixture_arch(const Dims& dims, Index num_classes = 3) {
  Arch a;
  a.dims = dims;
  a.hidden = 6;
  a.depth = 2;
  a.num_classes = num_classes;
  a.time_embed = 2;
  a.class_embed = 2;
  return a;
}

/// v(z, t, c) = u for every input.
inline VelocityModel constant_model(const Arch& arch, const Eigen::VectorXd& u) {
  VelocityModel m = init_model(arch, 1);
  ParamSet& p = m.mutable_params();
  p *= 0.0;
  p.biases.back() = u;
  return m;
}

inline VelocityModel constant_model(const Arch& arch, double u) {
  return constant_model(arch, Eigen::VectorXd::Constant(arch.latent_size(), u));
}

/// v(z, t, c) = a * z for every input.
inline VelocityModel linear_model(const Arch& arch, double a) {
  VelocityModel m = init_model(arch, 1);
  ParamSet& p = m.mutable_params();
  p *= 0.0;
  p.skip_bias.setConstant(a);
  return m;
}

/// Conditional output 1 for every non-null class, 0 for the null class.
inline VelocityModel indicator_model(const Arch& arch) {
  VelocityModel m = init_model(arch, 1);
  ParamSet& p = m.mutable_params();
  p *= 0.0;
  const Index offset = arch.latent_size() + arch.time_embed;
  for (Index c = 1; c < arch.num_classes; ++c) p.class_embed(0, c) = 2.0;
  p.weights[0](0, offset) = 1.0;
  const double silu2 = 2.0 / (1.0 + std::exp(-2.0));
  p.weights.back().col(0).setConstant(1.0 / silu2);
  return m;
}

inline DatasetSpec small_gmm() {
  DatasetSpec s = DatasetSpec::gmm2d_default();
  s.size = 2048;
  return s;
}

inline Arch gmm_arch() {
  Arch a;
  a.dims = small_gmm().dims;
  a.hidden = 64;
  a.num_classes = small_gmm().num_classes + 1;
  return a;
}

/// GMM teacher trained once per process.
inline const VelocityModel& gmm_teacher() {
  static const VelocityModel teacher = [] {
    TeacherPlan plan;
    plan.iterations = 2000;
    plan.batch_size = 128;
    return clone_frozen(train_teacher(small_gmm(), gmm_arch(), plan, 3).model);
  }();
  return teacher;
}

/// Distillation plan for the GMM teacher: N = 16, K = 4, unguided.
inline DistillPlan gmm_plan() {
  DistillPlan p;
  p.batch_size = 32;
  p.cfg_start = 1.0;
  p.cfg_end = 1.0;
  return p;
}

}  // namespace gpd::testing
