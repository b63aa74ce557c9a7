// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/netcore.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "gpd/random.hpp"

namespace gpd {

namespace {

std::atomic<std::uint64_t> next_model_id{1};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd silu(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double x) { return x * sigmoid(x); });
}

Eigen::MatrixXd silu_derivative(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
  });
}

std::string layer_name(size_t l, const char* what) {
  return "layer" + std::to_string(l) + "." + what;
}

template <class Self>
std::vector<ParamSet::View> collect_views(Self& self) {
  // Lexicographic order; layer indices above 9 would need zero padding.
  std::vector<ParamSet::View> out;
  auto add = [&](std::string name, auto& array) {
    out.push_back({std::move(name), const_cast<double*>(array.data()), array.rows(), array.cols()});
  };
  add("class_embed", self.class_embed);
  for (size_t l = 0; l < self.weights.size(); ++l) {
    add(layer_name(l, "bias"), self.biases[l]);
    add(layer_name(l, "weight"), self.weights[l]);
  }
  add("skip.bias", self.skip_bias);
  add("skip.weight", self.skip_weight);
  return out;
}

void check_labels(const Arch& arch, std::span<const int> labels) {
  for (int c : labels) {
    if (c < 0 || c >= arch.num_classes) {
      throw InvalidArgument("condition label " + std::to_string(c) + " outside [0, " +
                            std::to_string(arch.num_classes) + ")");
    }
  }
}

}  // namespace

void Arch::validate() const {
  dims.validate();
  if (hidden < 1) throw InvalidArgument("arch: hidden width must be >= 1");
  if (depth < 2 || depth > 10) throw InvalidArgument("arch: depth must be in [2, 10]");
  if (num_classes < 2) throw InvalidArgument("arch: num_classes must include null plus one class");
  if (time_embed < 2 || time_embed % 2 != 0) throw InvalidArgument("arch: time_embed must be even and >= 2");
  if (class_embed < 1) throw InvalidArgument("arch: class_embed must be >= 1");
}

std::vector<ParamSet::View> ParamSet::views() { return collect_views(*this); }
std::vector<ParamSet::View> ParamSet::views() const {
  return collect_views(*this);
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  for (const auto& w : weights) z.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) z.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  z.class_embed = Eigen::MatrixXd::Zero(class_embed.rows(), class_embed.cols());
  z.skip_bias = Eigen::VectorXd::Zero(skip_bias.size());
  z.skip_weight = Eigen::MatrixXd::Zero(skip_weight.rows(), skip_weight.cols());
  return z;
}

Index ParamSet::total_size() const {
  Index n = 0;
  for (const auto& v : views()) n += v.size();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& v : views()) {
    if (!Eigen::Map<const Eigen::VectorXd>(v.data, v.size()).allFinite()) return false;
  }
  return true;
}

bool ParamSet::same_shape(const ParamSet& other) const {
  const auto a = views(), b = other.views();
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].rows != b[i].rows || a[i].cols != b[i].cols) return false;
  }
  return true;
}

ParamSet& ParamSet::operator+=(const ParamSet& other) {
  if (!same_shape(other)) throw InvalidShape("parameter sets differ in shape");
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  class_embed += other.class_embed;
  skip_bias += other.skip_bias;
  skip_weight += other.skip_weight;
  return *this;
}

ParamSet& ParamSet::operator*=(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  class_embed *= s;
  skip_bias *= s;
  skip_weight *= s;
  return *this;
}

VelocityModel::VelocityModel(Arch arch, ParamSet params)
    : arch_(arch), params_(std::move(params)), id_(next_model_id.fetch_add(1)) {
  arch_.validate();
  const auto d = static_cast<size_t>(arch_.depth);
  if (params_.weights.size() != d || params_.biases.size() != d) {
    throw InvalidShape("parameter layer count does not match arch depth");
  }
  for (size_t l = 0; l < d; ++l) {
    const Index in = l == 0 ? arch_.input_size() : arch_.hidden;
    const Index out = l + 1 == d ? arch_.latent_size() : arch_.hidden;
    if (params_.weights[l].rows() != out || params_.weights[l].cols() != in ||
        params_.biases[l].size() != out) {
      throw InvalidShape("parameter " + layer_name(l, "weight") + " has the wrong shape");
    }
  }
  if (params_.class_embed.rows() != arch_.class_embed ||
      params_.class_embed.cols() != arch_.num_classes) {
    throw InvalidShape("parameter class_embed has the wrong shape");
  }
  if (params_.skip_bias.size() != arch_.latent_size() || params_.skip_weight.rows() != arch_.latent_size() ||
      params_.skip_weight.cols() != arch_.time_embed) {
    throw InvalidShape("skip parameters have the wrong shape");
  }
}

VelocityModel::VelocityModel(const VelocityModel& other)
    : arch_(other.arch_),
      params_(other.params_),
      frozen_(other.frozen_),
      id_(next_model_id.fetch_add(1)),
      evaluations_(other.evaluations_.load()) {}

VelocityModel& VelocityModel::operator=(const VelocityModel& other) {
  if (this != &other) {
    arch_ = other.arch_;
    params_ = other.params_;
    frozen_ = other.frozen_;
    id_ = next_model_id.fetch_add(1);
    evaluations_.store(other.evaluations_.load());
  }
  return *this;
}

VelocityModel::VelocityModel(VelocityModel&& other) noexcept
    : arch_(other.arch_),
      params_(std::move(other.params_)),
      frozen_(other.frozen_),
      id_(other.id_),
      evaluations_(other.evaluations_.load()) {}

VelocityModel& VelocityModel::operator=(VelocityModel&& other) noexcept {
  arch_ = other.arch_;
  params_ = std::move(other.params_);
  frozen_ = other.frozen_;
  id_ = other.id_;
  evaluations_.store(other.evaluations_.load());
  return *this;
}

ParamSet& VelocityModel::mutable_params() {
  if (frozen_) throw FrozenModelError("attempt to modify the parameters of a frozen model");
  // Invalidates caches taken before the mutation.
  id_ = next_model_id.fetch_add(1);
  return params_;
}

Eigen::VectorXd time_embedding(double t, Index dim) {
  Eigen::VectorXd e(dim);
  for (Index j = 0; j < dim / 2; ++j) {
    const double f = std::numbers::pi * std::ldexp(1.0, static_cast<int>(j));
    e[2 * j] = std::sin(f * t);
    e[2 * j + 1] = std::cos(f * t);
  }
  return e;
}

Eigen::MatrixXd VelocityModel::forward(const Eigen::MatrixXd& z, std::span<const double> t,
                                       std::span<const int> labels, ForwardCache* cache) const {
  const Index B = z.cols();
  if (z.rows() != arch_.latent_size()) {
    throw InvalidShape("forward: latent size " + std::to_string(z.rows()) + " does not match " +
                       arch_.dims.str());
  }
  if (static_cast<Index>(labels.size()) != B) throw InvalidShape("forward: one label per column");
  if (t.size() != 1 && static_cast<Index>(t.size()) != B) {
    throw InvalidShape("forward: need one time or one per column");
  }
  for (double ti : t) {
    if (!(ti >= 0.0 && ti <= 1.0)) throw InvalidArgument("forward: t outside [0, 1]");
  }
  check_labels(arch_, labels);

  const Index D = arch_.latent_size(), E = arch_.time_embed;
  Eigen::MatrixXd x(arch_.input_size(), B);
  x.topRows(D) = z;
  if (t.size() == 1) {
    x.middleRows(D, E).colwise() = time_embedding(t[0], E);
  } else {
    for (Index b = 0; b < B; ++b) x.middleRows(D, E).col(b) = time_embedding(t[b], E);
  }
  for (Index b = 0; b < B; ++b) x.bottomRows(arch_.class_embed).col(b) = params_.class_embed.col(labels[b]);

  const size_t depth = params_.weights.size();
  std::vector<Eigen::MatrixXd> pre, post;
  Eigen::MatrixXd h = x;
  for (size_t l = 0; l + 1 < depth; ++l) {
    Eigen::MatrixXd a = params_.weights[l] * h;
    a.colwise() += params_.biases[l];
    h = silu(a);
    if (cache) {
      pre.push_back(std::move(a));
      post.push_back(h);
    }
  }
  Eigen::MatrixXd out = params_.weights.back() * h;
  out.colwise() += params_.biases.back();
  Eigen::MatrixXd gate = params_.skip_weight * x.middleRows(D, E);
  gate.colwise() += params_.skip_bias;
  out += gate.cwiseProduct(z);
  evaluations_.fetch_add(static_cast<std::uint64_t>(B));

  if (cache) {
    cache->valid = true;
    cache->model_id = id_;
    cache->input = std::move(x);
    cache->pre = std::move(pre);
    cache->post = std::move(post);
    cache->labels.assign(labels.begin(), labels.end());
  }
  return out;
}

Eigen::MatrixXd VelocityModel::forward(const Eigen::MatrixXd& z, double t,
                                       std::span<const int> labels, ForwardCache* cache) const {
  return forward(z, std::span<const double>(&t, 1), labels, cache);
}

ParamSet VelocityModel::backward(const Eigen::MatrixXd& grad_output, const ForwardCache& cache) const {
  if (!cache.valid) throw UsageError("backward called without a cached forward pass");
  if (cache.model_id != id_) {
    throw UsageError("backward: cache was produced by a different model or before an update");
  }
  const Index B = cache.input.cols();
  if (grad_output.rows() != arch_.latent_size() || grad_output.cols() != B) {
    throw InvalidShape("backward: upstream gradient shape does not match the cached output");
  }

  ParamSet g = params_.zeros_like();
  const Index D = arch_.latent_size();
  const Eigen::MatrixXd gated = grad_output.cwiseProduct(cache.input.topRows(D));
  g.skip_bias = gated.rowwise().sum();
  g.skip_weight.noalias() = gated * cache.input.middleRows(D, arch_.time_embed).transpose();

  const size_t depth = params_.weights.size();
  Eigen::MatrixXd delta = grad_output;
  for (size_t l = depth; l-- > 0;) {
    const Eigen::MatrixXd& input = l == 0 ? cache.input : cache.post[l - 1];
    g.weights[l].noalias() = delta * input.transpose();
    g.biases[l] = delta.rowwise().sum();
    Eigen::MatrixXd back = params_.weights[l].transpose() * delta;
    if (l > 0) {
      delta = back.cwiseProduct(silu_derivative(cache.pre[l - 1]));
    } else {
      const Index offset = arch_.latent_size() + arch_.time_embed;
      for (Index b = 0; b < B; ++b) {
        g.class_embed.col(cache.labels[b]) += back.col(b).segment(offset, arch_.class_embed);
      }
    }
  }
  return g;
}

std::uint64_t VelocityModel::param_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& v : params_.views()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data);
    for (size_t i = 0; i < static_cast<size_t>(v.size()) * sizeof(double); ++i) {
      h = (h ^ bytes[i]) * 0x100000001b3ULL;
    }
  }
  return h;
}

VelocityModel init_model(const Arch& arch, std::uint64_t seed) {
  arch.validate();
  CounterRng rng(mix_seed(seed, 0x1417));
  ParamSet p;
  const auto depth = static_cast<size_t>(arch.depth);
  for (size_t l = 0; l < depth; ++l) {
    const Index in = l == 0 ? arch.input_size() : arch.hidden;
    const Index out = l + 1 == depth ? arch.latent_size() : arch.hidden;
    const double scale = (l + 1 == depth ? 0.1 : 1.0) / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = scale * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  p.class_embed.resize(arch.class_embed, arch.num_classes);
  for (Index i = 0; i < p.class_embed.size(); ++i) p.class_embed.data()[i] = rng.normal();
  p.skip_bias = Eigen::VectorXd::Zero(arch.latent_size());
  p.skip_weight = Eigen::MatrixXd::Zero(arch.latent_size(), arch.time_embed);
  return VelocityModel(arch, std::move(p));
}

LatentTensor forward(const VelocityModel& m, const LatentTensor& z, double t, ConditionLabel c,
                     ForwardCache* cache) {
  require_same_dims(z.dims(), m.arch().dims, "forward");
  const int label = c.id;
  Eigen::MatrixXd out = m.forward(z.data(), t, std::span<const int>(&label, 1), cache);
  return LatentTensor(z.dims(), out.col(0));
}

ParamSet backward(const VelocityModel& m, const LatentTensor& grad_output, const ForwardCache& cache) {
  require_same_dims(grad_output.dims(), m.arch().dims, "backward");
  return m.backward(grad_output.data(), cache);
}

VelocityModel clone_frozen(const VelocityModel& m) {
  VelocityModel copy(m);
  copy.frozen_ = true;
  copy.reset_evaluations();
  return copy;
}

VelocityModel clone_trainable(const VelocityModel& m) {
  VelocityModel copy(m);
  copy.frozen_ = false;
  copy.reset_evaluations();
  return copy;
}

OptimState make_optimizer(const VelocityModel& model, const AdamWConfig& config) {
  if (!(config.lr > 0.0) || config.weight_decay < 0.0 || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0)) {
    throw InvalidArgument("invalid AdamW configuration");
  }
  OptimState s;
  s.config = config;
  s.m = model.params().zeros_like();
  s.v = model.params().zeros_like();
  return s;
}

void adamw_step(VelocityModel& model, const ParamSet& grads, OptimState& opt) {
  ParamSet& params = model.mutable_params();
  if (!params.same_shape(grads) || !params.same_shape(opt.m) || !params.same_shape(opt.v)) {
    throw InvalidShape("adamw_step: gradient or moment shapes do not match the parameters");
  }
  const AdamWConfig& c = opt.config;
  opt.step += 1;
  const double t = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double decay = 1.0 - c.lr * c.weight_decay;

  auto pv = params.views();
  const auto gv = grads.views(), mv = opt.m.views(), vv = opt.v.views();
  for (size_t a = 0; a < pv.size(); ++a) {
    Eigen::Map<Eigen::ArrayXd> p(pv[a].data, pv[a].size());
    Eigen::Map<const Eigen::ArrayXd> g(gv[a].data, gv[a].size());
    Eigen::Map<Eigen::ArrayXd> m(mv[a].data, mv[a].size());
    Eigen::Map<Eigen::ArrayXd> v(vv[a].data, vv[a].size());
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.square();
    p = p * decay - c.lr * (m / bc1) / ((v / bc2).sqrt() + c.eps);
  }
}

}  // namespace gpd
