// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/report.hpp"

#include <charconv>
#include <fstream>

#include "gpd/error.hpp"

namespace gpd {

void RunReport::append(const RunReport& other) {
  teacher.insert(teacher.end(), other.teacher.begin(), other.teacher.end());
  stages.insert(stages.end(), other.stages.begin(), other.stages.end());
  for (const auto& [k, v] : other.metrics) metrics[k] = v;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string teacher_log_csv(const RunReport& report) {
  std::string out = "iteration,loss\n";
  for (const auto& r : report.teacher) {
    out += std::to_string(r.iteration) + "," + format_double(r.loss) + "\n";
  }
  return out;
}

std::string stage_log_csv(const RunReport& report) {
  std::string out = "stage,iteration,segment_i,loss_v,loss_hf,lambda,cfg_scale,wall_ms\n";
  for (const auto& r : report.stages) {
    out += std::to_string(r.stage) + "," + std::to_string(r.iteration) + "," +
           std::to_string(r.segment_i) + "," + format_double(r.loss_v) + "," +
           format_double(r.loss_hf) + "," + format_double(r.lambda) + "," +
           format_double(r.cfg_scale) + "," + format_double(r.wall_ms) + "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw UsageError("failed writing " + path.string());
}

}  // namespace gpd
