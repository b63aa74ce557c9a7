// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "gpd/netcore.hpp"
#include "gpd/schedule.hpp"

namespace gpd {

/// Trajectory visited by a sampler, from noise (first) to data (last).
struct SolveRecord {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> latents;
  /// Frobenius norm of the velocity used for each step.
  std::vector<double> velocity_norms;
};

/// One Euler step of dz/dt = v(z, t) from t_i down to t_j:
/// z + (t_j - t_i) * field(z, t_i). The field is always evaluated once.
template <class Field, class Derived>
typename Derived::PlainObject euler_step(Field&& field, const Eigen::MatrixBase<Derived>& z,
                                         double t_i, double t_j) {
  if (t_j > t_i) throw InvalidArgument("euler_step: reverse integration is not supported");
  using Plain = typename Derived::PlainObject;
  Plain out = z;
  const Plain v = field(out, t_i);
  if (v.rows() != out.rows() || v.cols() != out.cols()) {
    throw InvalidShape("euler_step: velocity shape does not match the latent");
  }
  out += (t_j - t_i) * v;
  return out;
}

/// `substeps` Euler steps between grid indices i >= j of `schedule`.
/// The span i - j must be divisible by `substeps`.
template <class Field, class Derived>
typename Derived::PlainObject solve_segment_indices(Field&& field, const Eigen::MatrixBase<Derived>& z,
                                                    const TimeSchedule& schedule, int i, int j,
                                                    int substeps) {
  if (substeps < 1) throw InvalidArgument("solve_segment: substeps must be >= 1");
  if (i < j || j < 0 || i > schedule.steps()) {
    throw InvalidArgument("solve_segment: segment indices out of order or off the grid");
  }
  const int span = i - j;
  if (span % substeps != 0) {
    throw InvalidArgument("solve_segment: " + std::to_string(substeps) +
                          " substeps do not divide a span of " + std::to_string(span));
  }
  const int hop = span / substeps;
  typename Derived::PlainObject out = z;
  int at = i;
  for (int s = 0; s < substeps; ++s) {
    out = euler_step(field, out, schedule[at], schedule[at - hop]);
    at -= hop;
  }
  return out;
}

/// Same as solve_segment_indices, addressed by time values that must lie
/// exactly on the schedule.
template <class Field, class Derived>
typename Derived::PlainObject solve_segment(Field&& field, const Eigen::MatrixBase<Derived>& z,
                                            const TimeSchedule& schedule, double t_i, double t_j,
                                            int substeps) {
  const auto i = schedule.index_of(t_i);
  const auto j = schedule.index_of(t_j);
  if (!i || !j) throw InvalidArgument("solve_segment: times are not on the schedule");
  return solve_segment_indices(field, z, schedule, *i, *j, substeps);
}

/// v_u + scale * (v_c - v_u). scale == 1 returns the conditional prediction
/// with a single evaluation.
Eigen::MatrixXd cfg_velocity(const VelocityModel& m, const Eigen::MatrixXd& z, double t,
                             std::span<const int> labels, double scale);
LatentTensor cfg_velocity(const VelocityModel& m, const LatentTensor& z, double t,
                          ConditionLabel c, double scale);

/// Guided velocity field bound to a model, labels and CFG scale.
class GuidedField {
 public:
  GuidedField(const VelocityModel& model, std::span<const int> labels, double scale)
      : model_(&model), labels_(labels.begin(), labels.end()), scale_(scale) {}
  GuidedField(VelocityModel&&, std::span<const int>, double) = delete;

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& z, double t) const {
    return cfg_velocity(*model_, z, t, labels_, scale_);
  }

 private:
  const VelocityModel* model_;
  std::vector<int> labels_;
  double scale_;
};

/// Grid indices visited with the given stride: N, N-s, ..., 0. The last
/// hop is shorter when s does not divide N.
std::vector<int> stride_indices(int steps, int stride);

/// Integrates from t = 1 to t = 0 walking the schedule `stride` indices per
/// step. Columns of `z_noise` are independent trajectories.
Eigen::MatrixXd sample(const VelocityModel& m, const Eigen::MatrixXd& z_noise,
                       const TimeSchedule& schedule, int stride, std::span<const int> labels,
                       double cfg_scale, SolveRecord* record = nullptr);

LatentTensor sample(const VelocityModel& m, const LatentTensor& z_noise, const TimeSchedule& schedule,
                    int stride, ConditionLabel c, double cfg_scale, SolveRecord* record = nullptr);

}  // namespace gpd
