// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gpd/analysis.hpp"
#include "gpd/datagen.hpp"
#include "gpd/report.hpp"
#include "gpd/flowtrain.hpp"
#include "gpd/schedule.hpp"

namespace gpd {

/// Bad configuration; carries the offending key and 1-based line (0 when
/// the problem is not tied to a line).
class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message)
      : Error(describe(key, line, message)), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string describe(const std::string& key, int line, const std::string& message) {
    std::string s = "config";
    if (line > 0) s += " line " + std::to_string(line);
    if (!key.empty()) s += " key '" + key + "'";
    return s + ": " + message;
  }
  std::string key_;
  int line_;
};

/// Fully resolved settings of a run.
struct RunConfig {
  DatasetSpec data;
  Arch arch;
  TeacherPlan teacher;
  GatePlan gate;
  DistillPlan plan;
  EvalPlan eval;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys,
/// duplicates, malformed values and violated invariants throw ConfigError.
RunConfig parse_config_string(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Every key with its resolved value, in a fixed order. Parsing the echo
/// yields the same configuration.
std::string echo_config(const RunConfig& config);

/// Seed precedence: flag, then the GPD_SEED environment variable, then the
/// config value.
std::uint64_t resolve_seed(std::uint64_t config_seed, std::optional<std::uint64_t> flag);

}  // namespace gpd
