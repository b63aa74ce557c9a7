// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpd/netcore.hpp"
#include "gpd/tensorfreq.hpp"

namespace gpd {

/// Time grid t_0 = 0 < t_1 < ... < t_N = 1. Index N is pure noise.
class TimeSchedule {
 public:
  explicit TimeSchedule(std::vector<double> times);

  int steps() const { return static_cast<int>(times_.size()) - 1; }
  double operator[](int i) const { return times_.at(static_cast<size_t>(i)); }
  const std::vector<double>& times() const { return times_; }

  /// Index of a time that lies exactly on the grid.
  std::optional<int> index_of(double t) const;

 private:
  std::vector<double> times_;
};

/// t_i = i / N.
TimeSchedule uniform_schedule(int steps);

/// How the frozen prior student covers the first k-1 intervals of a segment.
enum class PriorRollout { single_step, unit_steps };
/// What to do with the last N mod k intervals.
enum class TrailingSegment { train, drop };
/// High-frequency loss weighting: stage-and-time gated, stage gated only, off.
enum class HfMode { weighted, constant, none };

struct DistillPlan {
  int K = 4;
  int steps = 16;
  int iters_per_stage = 150;
  double cfg_start = 6.0;
  double cfg_end = 1.5;
  double lambda0 = 0.5;
  FilterParams filter{};
  /// Fine-tuning rate for a teacher-initialized student.
  AdamWConfig optim{.lr = 1e-4};
  /// Trajectories walked in lockstep per iteration.
  int batch_size = 4;
  std::uint64_t seed = 0;
  PriorRollout prior_rollout = PriorRollout::single_step;
  TrailingSegment trailing = TrailingSegment::train;
  HfMode hf_mode = HfMode::weighted;
  /// Fill the wall_ms log column; off keeps run logs byte-reproducible.
  bool record_wall_time = false;

  void validate() const;

  /// Settings used for the 1.3B video model: 48-step grid, stride 8, lr 1e-6.
  static DistillPlan paper_preset();
};

/// Linear decay from cfg_start at k = 2 to cfg_end at k = K.
double cfg_scale_for_stage(int k, const DistillPlan& plan);

/// lambda0 when k == K and i <= N/2, otherwise 0.
double lambda_weight(int k, int i, int N, int K, double lambda0);

/// Weight under the given ablation mode (weighted == lambda_weight).
double hf_weight(HfMode mode, int k, int i, int N, int K, double lambda0);

std::string to_string(PriorRollout v);
std::string to_string(TrailingSegment v);
std::string to_string(HfMode v);
PriorRollout parse_prior_rollout(const std::string& s);
TrailingSegment parse_trailing(const std::string& s);
HfMode parse_hf_mode(const std::string& s);

}  // namespace gpd
