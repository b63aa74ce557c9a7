// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/schedule.hpp"

namespace gpd {

TimeSchedule::TimeSchedule(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw InvalidArgument("time schedule needs at least two points");
  if (times_.front() != 0.0 || times_.back() != 1.0) {
    throw InvalidArgument("time schedule must start at 0 and end at 1");
  }
  for (size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw InvalidArgument("time schedule must be strictly increasing");
  }
}

std::optional<int> TimeSchedule::index_of(double t) const {
  for (size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] == t) return static_cast<int>(i);
  }
  return std::nullopt;
}

TimeSchedule uniform_schedule(int steps) {
  if (steps < 1) throw InvalidArgument("uniform_schedule: N must be >= 1");
  std::vector<double> t(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) t[i] = static_cast<double>(i) / steps;
  t.back() = 1.0;
  return TimeSchedule(std::move(t));
}

void DistillPlan::validate() const {
  if (K < 2) throw InvalidArgument("K must be >= 2");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  if (K > steps) throw InvalidArgument("K must not exceed steps");
  if (iters_per_stage < 1) throw InvalidArgument("iters_per_stage must be >= 1");
  if (!(cfg_end >= 1.0) || !(cfg_start >= cfg_end)) {
    throw InvalidArgument("cfg scales must satisfy cfg_start >= cfg_end >= 1");
  }
  if (!(lambda0 >= 0.0)) throw InvalidArgument("lambda0 must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  filter.validate();
}

DistillPlan DistillPlan::paper_preset() {
  DistillPlan p;
  p.K = 8;
  p.steps = 48;
  p.optim.lr = 1e-6;
  p.optim.weight_decay = 1e-2;
  return p;
}

double cfg_scale_for_stage(int k, const DistillPlan& plan) {
  if (k < 2 || k > plan.K) {
    throw InvalidArgument("stage " + std::to_string(k) + " outside [2, " + std::to_string(plan.K) + "]");
  }
  if (plan.K == 2) return plan.cfg_start;
  if (k == plan.K) return plan.cfg_end;
  return plan.cfg_start + (plan.cfg_end - plan.cfg_start) * (k - 2) / (plan.K - 2);
}

double lambda_weight(int k, int i, int N, int K, double lambda0) {
  return (k == K && 2 * i <= N) ? lambda0 : 0.0;
}

double hf_weight(HfMode mode, int k, int i, int N, int K, double lambda0) {
  switch (mode) {
    case HfMode::weighted:
      return lambda_weight(k, i, N, K, lambda0);
    case HfMode::constant:
      return k == K ? lambda0 : 0.0;
    case HfMode::none:
      return 0.0;
  }
  return 0.0;
}

std::string to_string(PriorRollout v) { return v == PriorRollout::single_step ? "single" : "unit"; }
std::string to_string(TrailingSegment v) { return v == TrailingSegment::train ? "train" : "drop"; }
std::string to_string(HfMode v) {
  switch (v) {
    case HfMode::weighted: return "weighted";
    case HfMode::constant: return "constant";
    case HfMode::none: return "none";
  }
  return "none";
}

PriorRollout parse_prior_rollout(const std::string& s) {
  if (s == "single") return PriorRollout::single_step;
  if (s == "unit") return PriorRollout::unit_steps;
  throw InvalidArgument("prior rollout must be single|unit, got '" + s + "'");
}

TrailingSegment parse_trailing(const std::string& s) {
  if (s == "train") return TrailingSegment::train;
  if (s == "drop") return TrailingSegment::drop;
  throw InvalidArgument("trailing must be train|drop, got '" + s + "'");
}

HfMode parse_hf_mode(const std::string& s) {
  if (s == "weighted") return HfMode::weighted;
  if (s == "constant") return HfMode::constant;
  if (s == "none") return HfMode::none;
  throw InvalidArgument("hf_mode must be weighted|constant|none, got '" + s + "'");
}

}  // namespace gpd
