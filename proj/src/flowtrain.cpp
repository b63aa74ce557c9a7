// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/flowtrain.hpp"

#include <cmath>
#include <numbers>

#include "gpd/evalkit.hpp"
#include "gpd/random.hpp"
#include "gpd/solver.hpp"

namespace gpd {

LatentTensor interpolate(const LatentTensor& x_clean, const LatentTensor& noise, double t) {
  require_same_dims(x_clean.dims(), noise.dims(), "interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("interpolate: t outside [0, 1]");
  if (t == 0.0) return x_clean;
  if (t == 1.0) return noise;
  return LatentTensor(x_clean.dims(), (1.0 - t) * x_clean.data() + t * noise.data());
}

LatentTensor fm_target(const LatentTensor& x_clean, const LatentTensor& noise) {
  require_same_dims(x_clean.dims(), noise.dims(), "fm_target");
  return LatentTensor(x_clean.dims(), noise.data() - x_clean.data());
}

void TeacherPlan::validate() const {
  if (iterations < 1) throw InvalidArgument("teacher iterations must be >= 1");
  if (batch_size < 1) throw InvalidArgument("teacher batch size must be >= 1");
  if (!(cond_dropout >= 0.0 && cond_dropout < 1.0)) throw InvalidArgument("cond_dropout must be in [0, 1)");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    throw InvalidArgument("final_lr_fraction must be in (0, 1]");
  }
  if (log_every < 1) throw InvalidArgument("log_every must be >= 1");
}

TeacherResult train_teacher(const DatasetSpec& data, const Arch& arch, const TeacherPlan& plan,
                            std::uint64_t seed) {
  data.validate();
  arch.validate();
  plan.validate();
  require_same_dims(arch.dims, data.dims, "train_teacher");
  if (arch.num_classes < data.num_classes + 1) {
    throw InvalidArgument("arch has fewer condition classes than the dataset plus the null class");
  }

  const Index D = arch.latent_size();
  Eigen::MatrixXd dataset(D, data.size);
  std::vector<int> dataset_labels(static_cast<size_t>(data.size));
  for (Index n = 0; n < data.size; ++n) {
    LabeledSample s = draw_sample(data, n);
    dataset.col(n) = s.x.data();
    dataset_labels[n] = s.label.id;
  }

  VelocityModel model = init_model(arch, seed);
  OptimState opt = make_optimizer(model, plan.optim);
  CounterRng rng(mix_seed(seed, 0xDA7A));
  TeacherResult result{model, {}};

  const Index B = plan.batch_size;
  Eigen::MatrixXd x(D, B), noise(D, B);
  std::vector<double> t(static_cast<size_t>(B));
  std::vector<int> labels(static_cast<size_t>(B));
  ForwardCache cache;
  for (int it = 0; it < plan.iterations; ++it) {
    for (Index b = 0; b < B; ++b) {
      const auto n = static_cast<Index>(rng.below(static_cast<std::uint64_t>(data.size)));
      x.col(b) = dataset.col(n);
      labels[b] = rng.uniform() < plan.cond_dropout ? kNullClass : dataset_labels[n];
      t[b] = rng.uniform();
      for (Index r = 0; r < D; ++r) noise(r, b) = rng.normal();
    }
    Eigen::MatrixXd z(D, B);
    for (Index b = 0; b < B; ++b) z.col(b) = (1.0 - t[b]) * x.col(b) + t[b] * noise.col(b);
    const Eigen::MatrixXd target = noise - x;

    const Eigen::MatrixXd out = result.model.forward(z, t, labels, &cache);
    const Eigen::MatrixXd diff = out - target;
    const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
    if (!std::isfinite(loss)) {
      throw TrainingFailure("teacher training diverged at iteration " + std::to_string(it));
    }
    if (it % plan.log_every == 0 || it + 1 == plan.iterations) result.report.teacher.push_back({it, loss});

    const ParamSet grads = result.model.backward((2.0 / static_cast<double>(diff.size())) * diff, cache);
    const double progress = static_cast<double>(it) / plan.iterations;
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    opt.config.lr = plan.optim.lr * (plan.final_lr_fraction + (1.0 - plan.final_lr_fraction) * cosine);
    adamw_step(result.model, grads, opt);
  }
  result.model.reset_evaluations();
  return result;
}

GateResult quality_gate(const VelocityModel& teacher, const DatasetSpec& data, const GatePlan& plan) {
  if (plan.samples < 2) throw InvalidArgument("quality gate needs at least 2 samples");
  DatasetSpec held_out = data;
  held_out.seed = mix_seed(data.seed, 0x4E1D);
  held_out.size = plan.samples;

  const Index D = teacher.arch().latent_size();
  Eigen::MatrixXd reference(D, plan.samples);
  std::vector<int> labels(static_cast<size_t>(plan.samples));
  for (int n = 0; n < plan.samples; ++n) {
    LabeledSample s = draw_sample(held_out, n);
    reference.col(n) = s.x.data();
    labels[n] = s.label.id;
  }
  const Eigen::MatrixXd noise = gaussian_matrix(D, plan.samples, mix_seed(plan.seed, 1));
  const Eigen::MatrixXd generated =
      sample(teacher, noise, uniform_schedule(plan.steps), 1, labels, plan.cfg_scale);
  const Eigen::MatrixXd other_noise = gaussian_matrix(D, plan.samples, mix_seed(plan.seed, 2));

  GateResult r;
  r.teacher_distance = energy_distance(generated, reference);
  r.noise_distance = energy_distance(other_noise, reference);
  r.passed = r.teacher_distance * plan.required_ratio <= r.noise_distance;
  return r;
}

}  // namespace gpd
