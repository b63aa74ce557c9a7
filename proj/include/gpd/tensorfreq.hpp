// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "gpd/tensor.hpp"

namespace gpd {

/// Gaussian high-pass parameters. Frequencies are in cycles per sample.
struct FilterParams {
  double sigma_t = 0.25;
  double sigma_s = 0.25;
  double alpha = 1.0;

  void validate() const;
};

/// Per-channel 3D DFT over (T, H, W). Unnormalized.
Spectrum fft3(const LatentTensor& z);

/// Inverse of fft3. Throws SymmetryViolation when the imaginary residue
/// reaches 1e-6; smaller residue is discarded.
LatentTensor ifft3(const Spectrum& s);

/// Signed normalized frequency of DFT bin k out of n, in [-1/2, 1/2).
double normalized_frequency(Index k, Index n);

/// H(f) = 1 - exp(-alpha (ft^2/st^2 + fh^2/ss^2 + fw^2/ss^2)).
double highpass_gain(double f_t, double f_h, double f_w, const FilterParams& p);

/// Gains for every (ft, fh, fw) bin of a T x H x W volume, row-major.
Eigen::VectorXd highpass_gains(const Dims& dims, const FilterParams& p);

LatentTensor extract_high_freq(const LatentTensor& z, const FilterParams& p);

/// Mean over all C*T*H*W entries of the squared difference of the
/// high-frequency parts of the two tensors.
double hf_loss(const LatentTensor& z_student, const LatentTensor& z_target, const FilterParams& p);

/// Precomputed high-pass operator for a fixed latent shape. Operates on
/// batches stored as columns of flattened latents.
class HighPassFilter {
 public:
  HighPassFilter(const Dims& dims, const FilterParams& params);

  const Dims& dims() const { return dims_; }
  const Eigen::VectorXd& gains() const { return gains_; }

  /// Multiplies every column's spectrum by `gains` (one entry per volume bin).
  Eigen::MatrixXd apply_gains(const Eigen::MatrixXd& batch, const Eigen::VectorXd& gains) const;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& batch) const { return apply_gains(batch, gains_); }

  /// Mean squared high-frequency difference over all entries of the batch.
  double loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) const;

  /// d loss / d pred. The filter is a real symmetric operator, so the
  /// gradient is (2/n) * H^2 (pred - target).
  Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) const;

  /// Sum of squared high-frequency entries, per column.
  Eigen::VectorXd energy(const Eigen::MatrixXd& batch) const;

 private:
  Dims dims_;
  FilterParams params_;
  Eigen::VectorXd gains_;
  Eigen::VectorXd gains_sq_;
};

}  // namespace gpd
