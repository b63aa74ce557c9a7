// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gpd/solver.hpp"

namespace gpd {
namespace {

using testing::constant_model;
using testing::fixture_arch;

const Dims kDims{1, 2, 2, 2};

Eigen::MatrixXd noise(Index cols, std::uint64_t seed) { return gaussian_matrix(kDims.size(), cols, seed); }

auto constant_field(double u) {
  return [u](const Eigen::MatrixXd& z, double) { return Eigen::MatrixXd::Constant(z.rows(), z.cols(), u).eval(); };
}

// v(z) = z: integrating from t = 1 to 0 shrinks z.
auto identity_field() {
  return [](const Eigen::MatrixXd& z, double) { return z; };
}

TEST(EulerStep, ZeroStepLeavesLatent) {
  const Eigen::MatrixXd z = noise(2, 1);
  EXPECT_EQ(euler_step(constant_field(3.0), z, 0.4, 0.4), z);
}

TEST(EulerStep, ConstantFieldHandArithmetic) {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_EQ(euler_step(constant_field(2.0), z, 1.0, 0.5), Eigen::MatrixXd::Constant(3, 2, -1.0));
}

TEST(EulerStep, LinearFieldFullStepGivesZero) {
  const Eigen::MatrixXd z = noise(2, 2);
  EXPECT_EQ(euler_step(identity_field(), z, 1.0, 0.0), Eigen::MatrixXd::Zero(z.rows(), z.cols()));
}

TEST(EulerStep, SingleEvaluation) {
  int calls = 0;
  auto field = [&](const Eigen::MatrixXd& z, double) {
    ++calls;
    return z;
  };
  euler_step(field, noise(1, 3), 0.5, 0.25);
  EXPECT_EQ(calls, 1);
}

TEST(EulerStep, RejectsReverseIntegration) {
  EXPECT_THROW(euler_step(constant_field(1.0), noise(1, 4), 0.2, 0.3), InvalidArgument);
}

TEST(SolveSegment, ConstantFieldSubstepsEqualOneStep) {
  const TimeSchedule s = uniform_schedule(16);
  const Eigen::MatrixXd z = noise(2, 5);
  for (int k : {1, 2, 4, 8, 16}) {
    const Eigen::MatrixXd many = solve_segment_indices(constant_field(0.75), z, s, 16, 0, k);
    EXPECT_LT((many - (z.array() - 0.75).matrix()).cwiseAbs().maxCoeff(), 1e-15) << k;
  }
}

TEST(SolveSegment, OneSubstepIsBitIdenticalToEulerStep) {
  const TimeSchedule s = uniform_schedule(8);
  const Eigen::MatrixXd z = noise(3, 6);
  auto field = [](const Eigen::MatrixXd& x, double t) { return (x.array().sin() * t).matrix().eval(); };
  EXPECT_EQ(solve_segment(field, z, s, s[6], s[3], 1), euler_step(field, z, s[6], s[3]));
}

TEST(SolveSegment, LinearFieldTwoSubstepsQuarter) {
  const TimeSchedule s = uniform_schedule(2);
  const Eigen::MatrixXd z = noise(2, 7);
  EXPECT_LT((solve_segment(identity_field(), z, s, 1.0, 0.0, 2) - 0.25 * z).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SolveSegment, RejectsOffGridTimesAndBadSubsteps) {
  const TimeSchedule s = uniform_schedule(4);
  const Eigen::MatrixXd z = noise(1, 8);
  EXPECT_THROW(solve_segment(constant_field(1.0), z, s, 0.9, 0.0, 1), InvalidArgument);
  EXPECT_THROW(solve_segment(constant_field(1.0), z, s, 1.0, 0.0, 3), InvalidArgument);
  EXPECT_THROW(solve_segment(constant_field(1.0), z, s, 1.0, 0.0, 0), InvalidArgument);
}

TEST(CfgVelocity, ScaleOneIsConditionalForward) {
  const VelocityModel m = init_model(fixture_arch(kDims), 9);
  const Eigen::MatrixXd z = noise(2, 9);
  const std::vector<int> labels{1, 2};
  EXPECT_EQ(cfg_velocity(m, z, 0.3, labels, 1.0), m.forward(z, 0.3, labels));
}

TEST(CfgVelocity, LabelIndependentModelIgnoresScale) {
  const VelocityModel m = constant_model(fixture_arch(kDims), 0.4);
  const Eigen::MatrixXd z = noise(1, 10);
  const std::vector<int> labels{2};
  EXPECT_LT((cfg_velocity(m, z, 0.5, labels, 7.0) - m.forward(z, 0.5, labels)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CfgVelocity, ScaleTwoOnIndicatorFields) {
  const VelocityModel m = testing::indicator_model(fixture_arch(kDims));
  const Eigen::MatrixXd z = noise(1, 11);
  const std::vector<int> labels{1}, null{0};
  ASSERT_NEAR(m.forward(z, 0.5, labels)(0, 0), 1.0, 1e-14);
  ASSERT_EQ(m.forward(z, 0.5, null)(0, 0), 0.0);
  const Eigen::MatrixXd v = cfg_velocity(m, z, 0.5, labels, 2.0);
  EXPECT_NEAR(v(0, 0), 2.0, 1e-14);
}

TEST(CfgVelocity, RejectsNullClassGuidanceAndSmallScale) {
  const VelocityModel m = init_model(fixture_arch(kDims), 12);
  const Eigen::MatrixXd z = noise(1, 12);
  const std::vector<int> null{0}, one{1};
  EXPECT_THROW(cfg_velocity(m, z, 0.5, null, 2.0), InvalidArgument);
  EXPECT_THROW(cfg_velocity(m, z, 0.5, one, 0.5), InvalidArgument);
}

TEST(Sample, ConstantFieldIndependentOfStride) {
  const Eigen::VectorXd u = gaussian_matrix(kDims.size(), 1, 13);
  const VelocityModel m = constant_model(fixture_arch(kDims), u);
  const TimeSchedule s = uniform_schedule(12);
  const Eigen::MatrixXd z = noise(2, 14);
  const std::vector<int> labels{1, 2};
  Eigen::MatrixXd expected = z;
  expected.colwise() -= u;
  for (int stride = 1; stride <= 12; ++stride) {
    EXPECT_LT((sample(m, z, s, stride, labels, 1.0) - expected).cwiseAbs().maxCoeff(), 1e-14) << stride;
  }
}

TEST(Sample, StrideNIsOneEvaluation) {
  const VelocityModel m = init_model(fixture_arch(kDims), 15);
  const std::vector<int> labels{1};
  sample(m, noise(1, 15), uniform_schedule(16), 16, labels, 1.0);
  EXPECT_EQ(m.evaluations(), 1u);
}

TEST(Sample, EvaluationCountIsCeilNOverStride) {
  const VelocityModel m = init_model(fixture_arch(kDims), 16);
  const std::vector<int> labels{1};
  const TimeSchedule s = uniform_schedule(48);
  for (int stride : {1, 5, 7, 8, 48}) {
    m.reset_evaluations();
    sample(m, noise(1, 16), s, stride, labels, 1.0);
    EXPECT_EQ(m.evaluations(), static_cast<std::uint64_t>((48 + stride - 1) / stride));
    m.reset_evaluations();
    sample(m, noise(1, 16), s, stride, labels, 3.0);
    EXPECT_EQ(m.evaluations(), 2u * static_cast<std::uint64_t>((48 + stride - 1) / stride));
  }
}

TEST(Sample, TrailingShortSegment) {
  EXPECT_EQ(stride_indices(10, 4), (std::vector<int>{10, 6, 2, 0}));
  EXPECT_EQ(stride_indices(8, 4), (std::vector<int>{8, 4, 0}));
}

TEST(Sample, RejectsStrideBeyondGrid) {
  const VelocityModel m = init_model(fixture_arch(kDims), 17);
  const std::vector<int> labels{1};
  EXPECT_THROW(sample(m, noise(1, 17), uniform_schedule(4), 5, labels, 1.0), InvalidArgument);
  EXPECT_THROW(sample(m, noise(1, 17), uniform_schedule(4), 0, labels, 1.0), InvalidArgument);
}

TEST(Sample, RecordReplaysEulerRecurrence) {
  const VelocityModel m = init_model(fixture_arch(kDims), 18);
  const std::vector<int> labels{2, 1};
  const TimeSchedule s = uniform_schedule(10);
  SolveRecord rec;
  const Eigen::MatrixXd out = sample(m, noise(2, 18), s, 3, labels, 2.0, &rec);
  ASSERT_EQ(rec.times.size(), rec.latents.size());
  ASSERT_EQ(rec.times.size(), 5u);
  EXPECT_EQ(rec.latents.back(), out);
  for (size_t k = 0; k + 1 < rec.times.size(); ++k) {
    EXPECT_GT(rec.times[k], rec.times[k + 1]);
    const Eigen::MatrixXd v = cfg_velocity(m, rec.latents[k], rec.times[k], labels, 2.0);
    EXPECT_EQ(rec.latents[k] + (rec.times[k + 1] - rec.times[k]) * v, rec.latents[k + 1]);
    EXPECT_DOUBLE_EQ(rec.velocity_norms[k], v.norm());
  }
}

TEST(Sample, TrainedTeacherDiscretizationGapShrinksWithN) {
  const VelocityModel& teacher = testing::gmm_teacher();
  const Eigen::MatrixXd z = gaussian_matrix(2, 64, 19);
  std::vector<int> labels(64);
  for (int b = 0; b < 64; ++b) labels[b] = 1 + b % 4;
  double previous = 1e300;
  for (int n : {4, 8, 16, 32}) {
    const TimeSchedule s = uniform_schedule(n);
    const double gap = (sample(teacher, z, s, 1, labels, 1.0) - sample(teacher, z, s, 2, labels, 1.0)).squaredNorm();
    EXPECT_GT(gap, 0.0);
    EXPECT_LT(gap, previous) << n;
    previous = gap;
  }
}

}  // namespace
}  // namespace gpd
