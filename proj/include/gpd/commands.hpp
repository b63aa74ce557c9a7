// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace gpd {

/// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumeric = 3 };

struct TrainTeacherArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

struct DistillArgs {
  std::filesystem::path teacher;
  std::filesystem::path config;
  std::string method = "gpd";
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

struct SampleArgs {
  std::filesystem::path model;
  int steps = 1;
  std::optional<std::uint64_t> seed;
  int label = 1;
  double cfg_scale = 1.0;
  std::filesystem::path out;
};

struct EvalArgs {
  std::filesystem::path student;
  std::filesystem::path teacher;
  std::filesystem::path config;
  std::filesystem::path report;
};

struct AlignmentArgs {
  std::filesystem::path teacher;
  std::filesystem::path student;
  std::optional<std::filesystem::path> prior;
  std::optional<std::filesystem::path> config;
  std::string baseline = "offline";
  std::filesystem::path report;
};

/// Each command returns an ExitCode and reports problems on `err`.
/// Progress and summaries go to `out`.
int cmd_train_teacher(const TrainTeacherArgs& args, std::ostream& out, std::ostream& err);
int cmd_distill(const DistillArgs& args, std::ostream& out, std::ostream& err);
int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_analyze_alignment(const AlignmentArgs& args, std::ostream& out, std::ostream& err);

}  // namespace gpd
