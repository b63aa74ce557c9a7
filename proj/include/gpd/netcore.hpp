// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpd/tensor.hpp"

namespace gpd {

/// Class id 0 is the unconditional label used by classifier-free guidance.
inline constexpr int kNullClass = 0;

struct ConditionLabel {
  int id = kNullClass;
};

/// Architecture of the velocity network v(z, t, c).
///
/// The flattened latent is concatenated with a sinusoidal embedding of t
/// and a learned embedding of c, passed through `depth` affine layers with
/// SiLU between them, and reshaped back to `dims`. A time-gated elementwise
/// skip path adds (skip.bias + skip.weight * embed(t)) * z to the output so
/// the full-rank part of the velocity does not have to pass the hidden width.
struct Arch {
  Dims dims{};
  Index hidden = 64;
  Index depth = 3;
  /// Including the null class.
  Index num_classes = 5;
  /// Must be even: sin/cos pairs.
  Index time_embed = 12;
  Index class_embed = 8;

  Index latent_size() const { return dims.size(); }
  Index input_size() const { return dims.size() + time_embed + class_embed; }
  void validate() const;

  friend bool operator==(const Arch&, const Arch&) = default;
};

/// Parameter (or gradient, or optimizer moment) arrays of one network.
struct ParamSet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd class_embed;
  Eigen::VectorXd skip_bias;    // latent_size
  Eigen::MatrixXd skip_weight;  // latent_size x time_embed

  /// Flat view of one named array.
  struct View {
    std::string name;
    double* data;
    Index rows;
    Index cols;
    Index size() const { return rows * cols; }
  };

  /// Views in lexicographic name order: class_embed, layer0.bias,
  /// layer0.weight, layer1.bias, ..., skip.bias, skip.weight
  std::vector<View> views();
  std::vector<View> views() const;

  ParamSet zeros_like() const;
  Index total_size() const;
  bool all_finite() const;
  bool same_shape(const ParamSet& other) const;

  ParamSet& operator+=(const ParamSet& other);
  ParamSet& operator*=(double s);
};

/// Intermediate activations of a forward call, consumed by backward.
struct ForwardCache {
  bool valid = false;
  std::uint64_t model_id = 0;
  Eigen::MatrixXd input;                    // input_size x B
  std::vector<Eigen::MatrixXd> pre;         // pre-activations per hidden layer
  std::vector<Eigen::MatrixXd> post;        // activations per hidden layer
  std::vector<int> labels;
};

class VelocityModel {
 public:
  VelocityModel(Arch arch, ParamSet params);
  VelocityModel(const VelocityModel& other);
  VelocityModel& operator=(const VelocityModel& other);
  VelocityModel(VelocityModel&& other) noexcept;
  VelocityModel& operator=(VelocityModel&& other) noexcept;

  const Arch& arch() const { return arch_; }
  const ParamSet& params() const { return params_; }
  bool frozen() const { return frozen_; }

  /// Throws FrozenModelError on a frozen model.
  ParamSet& mutable_params();

  /// Batched forward: columns of `z` are flattened latents; `t` and
  /// `labels` hold one entry per column (or a single shared t).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& z, std::span<const double> t,
                          std::span<const int> labels, ForwardCache* cache = nullptr) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& z, double t, std::span<const int> labels,
                          ForwardCache* cache = nullptr) const;

  /// Gradients of a scalar loss w.r.t. every parameter, given dL/d(output).
  ParamSet backward(const Eigen::MatrixXd& grad_output, const ForwardCache& cache) const;

  /// Per-sample velocity evaluations performed so far.
  std::uint64_t evaluations() const { return evaluations_.load(); }
  void reset_evaluations() const { evaluations_.store(0); }

  /// FNV-1a over the raw parameter bytes.
  std::uint64_t param_hash() const;

  friend VelocityModel clone_frozen(const VelocityModel& m);
  friend VelocityModel clone_trainable(const VelocityModel& m);

 private:
  Arch arch_;
  ParamSet params_;
  bool frozen_ = false;
  std::uint64_t id_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

/// Deterministic initialization. Weights of layer l are drawn from
/// N(0, 1/fan_in) (the output layer additionally scaled by 0.1), biases
/// start at zero, class embeddings at N(0, 1) and the skip path at zero.
VelocityModel init_model(const Arch& arch, std::uint64_t seed);

/// Single-latent forward.
LatentTensor forward(const VelocityModel& m, const LatentTensor& z, double t, ConditionLabel c,
                     ForwardCache* cache = nullptr);

ParamSet backward(const VelocityModel& m, const LatentTensor& grad_output,
                  const ForwardCache& cache);

/// Deep copy with the frozen flag set.
VelocityModel clone_frozen(const VelocityModel& m);
/// Deep copy that may be trained.
VelocityModel clone_trainable(const VelocityModel& m);

/// Sinusoidal embedding of t with `dim` entries (sin/cos pairs at
/// frequencies pi * 2^j).
Eigen::VectorXd time_embedding(double t, Index dim);

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimState {
  AdamWConfig config;
  std::uint64_t step = 0;
  ParamSet m;
  ParamSet v;
};

OptimState make_optimizer(const VelocityModel& model, const AdamWConfig& config);

/// Decoupled weight decay Adam: p <- p(1 - lr*wd) - lr * mhat / (sqrt(vhat) + eps).
void adamw_step(VelocityModel& model, const ParamSet& grads, OptimState& opt);

}  // namespace gpd
