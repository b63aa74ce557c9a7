// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <vector>

#include "gpd/solver.hpp"
#include "gpd/tensorfreq.hpp"

namespace gpd {

struct AlignmentResult {
  /// One entry per input pair; NaN where the pair was excluded.
  std::vector<double> cosines;
  /// Mean over the included pairs (NaN when none remain).
  double mean = 0.0;
  /// Pairs skipped because one of the vectors had zero norm.
  int excluded = 0;
};

/// Cosine similarity between paired direction vectors, one pair per timestep.
AlignmentResult cosine_alignment(const std::vector<Eigen::VectorXd>& targets,
                                 const std::vector<Eigen::VectorXd>& student_flow);

/// Mean squared difference of paired samples (columns).
double sample_mse(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b);

/// Mean high-frequency energy of `samples` over that of `reference`.
/// Columns are flattened latents of `dims`.
double hf_energy_ratio(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& reference,
                       const Dims& dims, const FilterParams& p);

/// Mean cosine between consecutive displacement vectors of every trajectory
/// in the record (columns are trajectories). 1 means straight.
double straightness(const SolveRecord& record);

/// 2 E|a-b| - E|a-a'| - E|b-b'| over all pairs (V-statistic), columns are
/// points. Symmetric in its arguments bit-for-bit.
double energy_distance(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b);

}  // namespace gpd
