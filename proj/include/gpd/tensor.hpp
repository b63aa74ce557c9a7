// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <complex>
#include <string>
#include <utility>

#include "gpd/error.hpp"

namespace gpd {

using Index = Eigen::Index;

/// Shape of a video latent: channels x frames x height x width.
struct Dims {
  Index channels = 1;
  Index frames = 1;
  Index height = 1;
  Index width = 1;

  Index size() const { return channels * frames * height * width; }
  /// Number of entries in one channel (the 3D transform volume).
  Index volume() const { return frames * height * width; }

  bool valid() const { return channels > 0 && frames > 0 && height > 0 && width > 0; }

  void validate() const {
    if (!valid()) throw InvalidShape("zero-sized or negative dimension in " + str());
  }

  Index offset(Index c, Index t, Index h, Index w) const {
    return ((c * frames + t) * height + h) * width + w;
  }

  std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(frames) + "x" +
           std::to_string(height) + "x" + std::to_string(width);
  }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Real C x T x H x W array stored row-major in a flat Eigen vector.
template <typename Scalar_>
class Latent {
 public:
  using Scalar = Scalar_;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Latent() = default;

  explicit Latent(const Dims& dims) : dims_(dims) {
    dims_.validate();
    data_ = Vector::Zero(dims_.size());
  }

  Latent(const Dims& dims, Vector data) : dims_(dims), data_(std::move(data)) {
    dims_.validate();
    if (data_.size() != dims_.size()) {
      throw InvalidShape("data length " + std::to_string(data_.size()) +
                         " does not match dims " + dims_.str());
    }
  }

  static Latent Constant(const Dims& dims, Scalar value) {
    dims.validate();
    return Latent(dims, Vector::Constant(dims.size(), value));
  }

  const Dims& dims() const { return dims_; }
  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Scalar operator()(Index c, Index t, Index h, Index w) const {
    return data_[dims_.offset(c, t, h, w)];
  }
  Scalar& operator()(Index c, Index t, Index h, Index w) {
    return data_[dims_.offset(c, t, h, w)];
  }

  bool all_finite() const { return data_.allFinite(); }

 private:
  Dims dims_{};
  Vector data_{};
};

/// Complex companion of Latent holding a per-channel 3D spectrum.
/// Forward transforms are unnormalized; the inverse carries 1/(T*H*W).
template <typename Scalar_>
class BasicSpectrum {
 public:
  using Scalar = Scalar_;
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  BasicSpectrum() = default;
  BasicSpectrum(const Dims& dims, Vector data) : dims_(dims), data_(std::move(data)) {
    dims_.validate();
    if (data_.size() != dims_.size()) throw InvalidShape("spectrum length does not match dims");
  }

  const Dims& dims() const { return dims_; }
  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Complex operator()(Index c, Index ft, Index fh, Index fw) const {
    return data_[dims_.offset(c, ft, fh, fw)];
  }

 private:
  Dims dims_{};
  Vector data_{};
};

using LatentTensor = Latent<double>;
using Spectrum = BasicSpectrum<double>;

inline void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw InvalidShape(std::string(what) + ": dimension mismatch " + a.str() + " vs " + b.str());
  }
}

}  // namespace gpd
