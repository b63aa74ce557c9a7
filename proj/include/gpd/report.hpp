// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gpd {

struct TeacherRecord {
  int iteration;
  double loss;
};

/// One optimizer update of a distillation stage.
struct StageRecord {
  int stage;
  int iteration;
  int segment_i;
  double loss_v;
  double loss_hf;
  double lambda;
  double cfg_scale;
  double wall_ms;
};

struct RunReport {
  std::vector<TeacherRecord> teacher;
  std::vector<StageRecord> stages;
  std::map<std::string, double> metrics;

  void append(const RunReport& other);
};

/// "iteration,loss"
std::string teacher_log_csv(const RunReport& report);
/// "stage,iteration,segment_i,loss_v,loss_hf,lambda,cfg_scale,wall_ms"
std::string stage_log_csv(const RunReport& report);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gpd
