// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

// Slow reference implementations used only by the tests.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "gpd/datagen.hpp"
#include "gpd/netcore.hpp"
#include "gpd/tensorfreq.hpp"

namespace gpd::testing {

inline LatentTensor random_tensor(const Dims& dims, std::uint64_t seed) { return gaussian_noise(dims, seed); }

/// Triple-sum DFT over (T, H, W) per channel; sign = -1 forward, +1 inverse
/// (the inverse also divides by T*H*W).
inline Eigen::VectorXcd naive_dft3(const Dims& d, const Eigen::VectorXcd& x, int sign) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(x.size());
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index c = 0; c < d.channels; ++c)
    for (Index kt = 0; kt < d.frames; ++kt)
      for (Index kh = 0; kh < d.height; ++kh)
        for (Index kw = 0; kw < d.width; ++kw) {
          std::complex<double> acc = 0.0;
          for (Index t = 0; t < d.frames; ++t)
            for (Index h = 0; h < d.height; ++h)
              for (Index w = 0; w < d.width; ++w) {
                const double phase = two_pi * (static_cast<double>(kt * t) / d.frames +
                                               static_cast<double>(kh * h) / d.height +
                                               static_cast<double>(kw * w) / d.width);
                acc += x[d.offset(c, t, h, w)] * std::polar(1.0, sign * phase);
              }
          out[d.offset(c, kt, kh, kw)] = acc;
        }
  if (sign > 0) out /= static_cast<double>(d.volume());
  return out;
}

/// naive DFT -> gain multiply -> naive inverse, gains computed from the
/// closed-form filter definition.
inline Eigen::VectorXd naive_high_freq(const LatentTensor& z, const FilterParams& p) {
  const Dims& d = z.dims();
  Eigen::VectorXcd spec = naive_dft3(d, z.data().cast<std::complex<double>>(), -1);
  auto freq = [](Index k, Index n) {
    return 2 * k < n ? static_cast<double>(k) / n : static_cast<double>(k - n) / n;
  };
  for (Index c = 0; c < d.channels; ++c)
    for (Index t = 0; t < d.frames; ++t)
      for (Index h = 0; h < d.height; ++h)
        for (Index w = 0; w < d.width; ++w) {
          const double ft = freq(t, d.frames), fh = freq(h, d.height), fw = freq(w, d.width);
          const double e = ft * ft / (p.sigma_t * p.sigma_t) + (fh * fh + fw * fw) / (p.sigma_s * p.sigma_s);
          spec[d.offset(c, t, h, w)] *= 1.0 - std::exp(-p.alpha * e);
        }
  return naive_dft3(d, spec, +1).real();
}

/// Largest per-array max|fd - an| / max|an| over all parameter arrays, with
/// central differences of step `h` on the scalar `loss(model)`.
inline double max_relative_gradient_error(VelocityModel& model, const ParamSet& analytic,
                                          const std::function<double(const VelocityModel&)>& loss,
                                          double h = 1e-5) {
  double worst = 0.0;
  auto views = model.mutable_params().views();
  const auto grads = analytic.views();
  for (size_t a = 0; a < views.size(); ++a) {
    double max_diff = 0.0, max_an = 0.0;
    for (Index e = 0; e < views[a].size(); ++e) {
      double& p = model.mutable_params().views()[a].data[e];
      const double saved = p;
      p = saved + h;
      const double up = loss(model);
      p = saved - h;
      const double down = loss(model);
      p = saved;
      const double fd = (up - down) / (2.0 * h);
      max_diff = std::max(max_diff, std::abs(fd - grads[a].data[e]));
      max_an = std::max(max_an, std::abs(grads[a].data[e]));
    }
    if (max_an > 0.0) worst = std::max(worst, max_diff / max_an);
  }
  return worst;
}

}  // namespace gpd::testing
