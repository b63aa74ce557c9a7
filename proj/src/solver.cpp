// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/solver.hpp"

namespace gpd {

Eigen::MatrixXd cfg_velocity(const VelocityModel& m, const Eigen::MatrixXd& z, double t,
                             std::span<const int> labels, double scale) {
  if (!(scale >= 1.0)) throw InvalidArgument("cfg scale must be >= 1");
  if (scale == 1.0) return m.forward(z, t, labels);
  for (int c : labels) {
    if (c == kNullClass) throw InvalidArgument("guidance requested for the null class");
  }
  const std::vector<int> null_labels(labels.size(), kNullClass);
  const Eigen::MatrixXd v_c = m.forward(z, t, labels);
  const Eigen::MatrixXd v_u = m.forward(z, t, null_labels);
  return v_u + scale * (v_c - v_u);
}

LatentTensor cfg_velocity(const VelocityModel& m, const LatentTensor& z, double t,
                          ConditionLabel c, double scale) {
  require_same_dims(z.dims(), m.arch().dims, "cfg_velocity");
  const Eigen::MatrixXd v = cfg_velocity(m, Eigen::MatrixXd(z.data()), t, std::span<const int>(&c.id, 1), scale);
  return LatentTensor(z.dims(), v.col(0));
}

std::vector<int> stride_indices(int steps, int stride) {
  if (stride < 1 || stride > steps) {
    throw InvalidArgument("stride " + std::to_string(stride) + " outside [1, " +
                          std::to_string(steps) + "]");
  }
  std::vector<int> idx;
  for (int i = steps; i > 0; i -= stride) idx.push_back(i);
  idx.push_back(0);
  return idx;
}

Eigen::MatrixXd sample(const VelocityModel& m, const Eigen::MatrixXd& z_noise,
                       const TimeSchedule& schedule, int stride, std::span<const int> labels,
                       double cfg_scale, SolveRecord* record) {
  const std::vector<int> idx = stride_indices(schedule.steps(), stride);
  const GuidedField guided(m, labels, cfg_scale);
  double last_norm = 0.0;
  auto field = [&](const Eigen::MatrixXd& z, double t) {
    Eigen::MatrixXd v = guided(z, t);
    last_norm = v.norm();
    return v;
  };

  Eigen::MatrixXd z = z_noise;
  if (record) {
    *record = {};
    record->times.push_back(schedule[idx.front()]);
    record->latents.push_back(z);
  }
  for (size_t s = 0; s + 1 < idx.size(); ++s) {
    z = euler_step(field, z, schedule[idx[s]], schedule[idx[s + 1]]);
    if (!z.allFinite()) {
      throw NumericFailure("sample: non-finite latent after step to index " + std::to_string(idx[s + 1]));
    }
    if (record) {
      record->times.push_back(schedule[idx[s + 1]]);
      record->latents.push_back(z);
      record->velocity_norms.push_back(last_norm);
    }
  }
  return z;
}

LatentTensor sample(const VelocityModel& m, const LatentTensor& z_noise, const TimeSchedule& schedule,
                    int stride, ConditionLabel c, double cfg_scale, SolveRecord* record) {
  require_same_dims(z_noise.dims(), m.arch().dims, "sample");
  const Eigen::MatrixXd out =
      sample(m, Eigen::MatrixXd(z_noise.data()), schedule, stride, std::span<const int>(&c.id, 1),
             cfg_scale, record);
  return LatentTensor(z_noise.dims(), out.col(0));
}

}  // namespace gpd
