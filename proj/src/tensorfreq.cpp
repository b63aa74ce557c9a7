// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/tensorfreq.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <vector>

namespace gpd {

namespace {

using Complex = std::complex<double>;

enum class Direction { forward, inverse };

// Transforms one channel volume in place along W, H, then T.
void transform_volume(Complex* volume, const Dims& d, Direction dir) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in, out;

  auto run_axis = [&](Index len, Index stride, Index lines, auto line_start) {
    if (len == 1) return;
    in.resize(static_cast<size_t>(len));
    for (Index l = 0; l < lines; ++l) {
      Complex* base = volume + line_start(l);
      for (Index k = 0; k < len; ++k) in[k] = base[k * stride];
      if (dir == Direction::forward) {
        fft.fwd(out, in);
      } else {
        fft.inv(out, in);
      }
      for (Index k = 0; k < len; ++k) base[k * stride] = out[k];
    }
  };

  const Index T = d.frames, H = d.height, W = d.width;
  run_axis(W, 1, T * H, [&](Index l) { return l * W; });
  run_axis(H, W, T * W, [&](Index l) { return (l / W) * H * W + (l % W); });
  run_axis(T, H * W, H * W, [&](Index l) { return l; });
}

void check_finite(const LatentTensor& z, const char* op) {
  if (!z.all_finite()) throw NumericFailure(std::string(op) + ": non-finite entries in tensor");
}

}  // namespace

void FilterParams::validate() const {
  if (!(sigma_t > 0.0) || !(sigma_s > 0.0) || !(alpha > 0.0)) {
    throw InvalidArgument("filter parameters sigma_t, sigma_s, alpha must be strictly positive");
  }
}

Spectrum fft3(const LatentTensor& z) {
  const Dims& d = z.dims();
  d.validate();
  Spectrum::Vector data = z.data().cast<Complex>();
  for (Index c = 0; c < d.channels; ++c) {
    transform_volume(data.data() + c * d.volume(), d, Direction::forward);
  }
  return Spectrum(d, std::move(data));
}

LatentTensor ifft3(const Spectrum& s) {
  const Dims& d = s.dims();
  d.validate();
  Spectrum::Vector data = s.data();
  for (Index c = 0; c < d.channels; ++c) {
    transform_volume(data.data() + c * d.volume(), d, Direction::inverse);
  }
  const double residue = data.size() ? data.imag().cwiseAbs().maxCoeff() : 0.0;
  if (!(residue < 1e-6)) {
    throw SymmetryViolation("inverse transform has imaginary residue " + std::to_string(residue));
  }
  return LatentTensor(d, data.real());
}

double normalized_frequency(Index k, Index n) {
  if (n <= 0 || k < 0 || k >= n) throw InvalidArgument("frequency bin out of range");
  const double kk = static_cast<double>(k), nn = static_cast<double>(n);
  return 2 * k < n ? kk / nn : (kk - nn) / nn;
}

double highpass_gain(double f_t, double f_h, double f_w, const FilterParams& p) {
  p.validate();
  const double e = f_t * f_t / (p.sigma_t * p.sigma_t) +
                   (f_h * f_h + f_w * f_w) / (p.sigma_s * p.sigma_s);
  return -std::expm1(-p.alpha * e);
}

Eigen::VectorXd highpass_gains(const Dims& dims, const FilterParams& p) {
  dims.validate();
  p.validate();
  Eigen::VectorXd g(dims.volume());
  Index o = 0;
  for (Index t = 0; t < dims.frames; ++t) {
    const double ft = normalized_frequency(t, dims.frames);
    for (Index h = 0; h < dims.height; ++h) {
      const double fh = normalized_frequency(h, dims.height);
      for (Index w = 0; w < dims.width; ++w) {
        g[o++] = highpass_gain(ft, fh, normalized_frequency(w, dims.width), p);
      }
    }
  }
  return g;
}

LatentTensor extract_high_freq(const LatentTensor& z, const FilterParams& p) {
  check_finite(z, "extract_high_freq");
  HighPassFilter filter(z.dims(), p);
  return LatentTensor(z.dims(), filter.apply(z.data()));
}

double hf_loss(const LatentTensor& z_student, const LatentTensor& z_target, const FilterParams& p) {
  require_same_dims(z_student.dims(), z_target.dims(), "hf_loss");
  HighPassFilter filter(z_student.dims(), p);
  return filter.loss(z_student.data(), z_target.data());
}

HighPassFilter::HighPassFilter(const Dims& dims, const FilterParams& params)
    : dims_(dims), params_(params), gains_(highpass_gains(dims, params)) {
  gains_sq_ = gains_.array().square();
}

Eigen::MatrixXd HighPassFilter::apply_gains(const Eigen::MatrixXd& batch,
                                            const Eigen::VectorXd& gains) const {
  if (batch.rows() != dims_.size()) {
    throw InvalidShape("high-pass filter: batch rows do not match latent size " + dims_.str());
  }
  if (gains.size() != dims_.volume()) throw InvalidShape("high-pass filter: gain table size");
  Eigen::MatrixXd out(batch.rows(), batch.cols());
  const Index vol = dims_.volume();
  for (Index col = 0; col < batch.cols(); ++col) {
    Spectrum s = fft3(LatentTensor(dims_, batch.col(col)));
    for (Index c = 0; c < dims_.channels; ++c) {
      s.data().segment(c * vol, vol).array() *= gains.array().cast<Complex>();
    }
    out.col(col) = ifft3(s).data();
  }
  return out;
}

double HighPassFilter::loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) const {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidShape("hf loss: prediction and target shapes differ");
  }
  if (pred.size() == 0) return 0.0;
  const Eigen::MatrixXd diff = apply(pred - target);
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

Eigen::MatrixXd HighPassFilter::loss_gradient(const Eigen::MatrixXd& pred,
                                              const Eigen::MatrixXd& target) const {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidShape("hf loss: prediction and target shapes differ");
  }
  const double n = static_cast<double>(pred.size());
  return (2.0 / n) * apply_gains(pred - target, gains_sq_);
}

Eigen::VectorXd HighPassFilter::energy(const Eigen::MatrixXd& batch) const {
  return apply(batch).colwise().squaredNorm().transpose();
}

}  // namespace gpd
