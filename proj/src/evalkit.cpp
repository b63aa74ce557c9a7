// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpd {

namespace {

double mean_pair_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double sum = 0.0;
  for (Index i = 0; i < a.cols(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) sum += (a.col(i) - b.col(j)).norm();
  }
  return sum / (static_cast<double>(a.cols()) * static_cast<double>(b.cols()));
}

// Strict weak order on sample sets so that d(a, b) and d(b, a) run the
// same arithmetic.
bool ordered_before(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

AlignmentResult cosine_alignment(const std::vector<Eigen::VectorXd>& targets,
                                 const std::vector<Eigen::VectorXd>& student_flow) {
  if (targets.size() != student_flow.size()) {
    throw InvalidArgument("cosine_alignment: target and flow counts differ");
  }
  AlignmentResult r;
  double sum = 0.0;
  int used = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const auto& a = targets[i];
    const auto& b = student_flow[i];
    if (a.size() != b.size()) throw InvalidShape("cosine_alignment: vector sizes differ");
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      r.cosines.push_back(std::numeric_limits<double>::quiet_NaN());
      ++r.excluded;
      continue;
    }
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    r.cosines.push_back(c);
    sum += c;
    ++used;
  }
  r.mean = used ? sum / used : std::numeric_limits<double>::quiet_NaN();
  return r;
}

double sample_mse(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b) {
  if (samples_a.cols() != samples_b.cols() || samples_a.rows() != samples_b.rows()) {
    throw InvalidArgument("sample_mse: samples are not paired");
  }
  if (samples_a.size() == 0) throw InvalidArgument("sample_mse: no samples");
  return (samples_a - samples_b).squaredNorm() / static_cast<double>(samples_a.size());
}

double hf_energy_ratio(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& reference,
                       const Dims& dims, const FilterParams& p) {
  if (samples.rows() != reference.rows() || samples.rows() != dims.size()) {
    throw InvalidShape("hf_energy_ratio: sample shapes do not match");
  }
  if (samples.cols() == 0 || reference.cols() == 0) throw InvalidArgument("hf_energy_ratio: no samples");
  const HighPassFilter filter(dims, p);
  const double ref = filter.energy(reference).mean();
  if (!(ref > 0.0)) throw NumericFailure("hf_energy_ratio: reference has zero high-frequency energy");
  return filter.energy(samples).mean() / ref;
}

double straightness(const SolveRecord& record) {
  if (record.latents.size() < 3) throw InvalidArgument("straightness: need at least 3 points");
  const Index B = record.latents.front().cols();
  double sum = 0.0;
  int used = 0;
  for (Index b = 0; b < B; ++b) {
    for (size_t s = 0; s + 2 < record.latents.size(); ++s) {
      const Eigen::VectorXd d0 = record.latents[s + 1].col(b) - record.latents[s].col(b);
      const Eigen::VectorXd d1 = record.latents[s + 2].col(b) - record.latents[s + 1].col(b);
      const double n0 = d0.norm(), n1 = d1.norm();
      if (n0 == 0.0 || n1 == 0.0) continue;
      sum += std::clamp(d0.dot(d1) / (n0 * n1), -1.0, 1.0);
      ++used;
    }
  }
  if (!used) throw NumericFailure("straightness: every displacement is zero");
  return sum / used;
}

double energy_distance(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b) {
  if (samples_a.cols() == 0 || samples_b.cols() == 0) throw InvalidArgument("energy_distance: empty set");
  if (samples_a.rows() != samples_b.rows()) throw InvalidShape("energy_distance: dimension mismatch");
  const bool swap = ordered_before(samples_b, samples_a);
  const Eigen::MatrixXd& a = swap ? samples_b : samples_a;
  const Eigen::MatrixXd& b = swap ? samples_a : samples_b;
  const double cross = mean_pair_distance(a, b);
  const double self = mean_pair_distance(a, a) + mean_pair_distance(b, b);
  return std::max(0.0, 2.0 * cross - self);
}

}  // namespace gpd
