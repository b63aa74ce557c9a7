// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "gpd/checkpoint.hpp"
#include "gpd/commands.hpp"

namespace gpd {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpd_cmd_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

const char* kGmmConfig =
    "dataset = gmm2d\n"
    "teacher_iters = 1500\n"
    "iters_per_stage = 4\n"
    "batch_size = 4\n"
    "eval_samples = 16\n";

// A quality-gated GMM teacher written once through the command.
const fs::path& trained_teacher() {
  static const fs::path path = [] {
    const fs::path dir = scratch("teacher");
    write_file(dir / "run.cfg", kGmmConfig);
    std::ostringstream out, err;
    const int code = cmd_train_teacher({dir / "run.cfg", dir / "teacher.ckpt", std::nullopt}, out, err);
    EXPECT_EQ(code, kExitOk) << err.str();
    return dir / "teacher.ckpt";
  }();
  return path;
}

fs::path config_path() { return trained_teacher().parent_path() / "run.cfg"; }

TEST(TrainTeacherCommand, MissingConfigNamesPath) {
  const fs::path dir = scratch("missing");
  std::ostringstream out, err;
  const int code = cmd_train_teacher({dir / "absent.cfg", dir / "t.ckpt", std::nullopt}, out, err);
  EXPECT_EQ(code, kExitUsage);
  EXPECT_NE(err.str().find((dir / "absent.cfg").string()), std::string::npos) << err.str();
}

TEST(TrainTeacherCommand, BadKeyIsUsageErrorNamingKey) {
  const fs::path dir = scratch("badkey");
  write_file(dir / "run.cfg", "dataset = gmm2d\nteacher_itrs = 5\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train_teacher({dir / "run.cfg", dir / "t.ckpt", std::nullopt}, out, err), kExitUsage);
  EXPECT_NE(err.str().find("teacher_itrs"), std::string::npos);
}

TEST(TrainTeacherCommand, WritesMagicLossLogAndConfigEcho) {
  const std::string bytes = read_file(trained_teacher());
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(bytes.substr(0, 4), "GPD1");
  const auto log = lines(read_file(fs::path(trained_teacher().string() + ".loss.csv")));
  ASSERT_GT(log.size(), 1u);
  EXPECT_EQ(log[0], "iteration,loss");
  const Checkpoint ck = load_checkpoint(trained_teacher());
  EXPECT_EQ(ck.meta.quality_gate, 1);
  EXPECT_EQ(ck.meta.stage, 1);
  EXPECT_EQ(ck.meta.schedule_steps, 16);
}

TEST(TrainTeacherCommand, RerunIsByteIdentical) {
  const fs::path dir = scratch("rerun");
  write_file(dir / "run.cfg", "dataset = gmm2d\nteacher_iters = 30\ngate_samples = 16\n");
  std::ostringstream out, err;
  const int a = cmd_train_teacher({dir / "run.cfg", dir / "a.ckpt", 4}, out, err);
  const int b = cmd_train_teacher({dir / "run.cfg", dir / "b.ckpt", 4}, out, err);
  EXPECT_EQ(a, b);
  EXPECT_EQ(read_file(dir / "a.ckpt"), read_file(dir / "b.ckpt"));
  EXPECT_EQ(read_file(dir / "a.ckpt.loss.csv"), read_file(dir / "b.ckpt.loss.csv"));
}

TEST(TrainTeacherCommand, GateFailureExitsThree) {
  const fs::path dir = scratch("gatefail");
  write_file(dir / "run.cfg", "dataset = gmm2d\nteacher_iters = 2\ngate_samples = 16\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train_teacher({dir / "run.cfg", dir / "t.ckpt", std::nullopt}, out, err), kExitNumeric);
  EXPECT_EQ(load_checkpoint(dir / "t.ckpt").meta.quality_gate, 0);
}

std::map<std::string, std::vector<std::string>> columns(const std::string& csv) {
  const auto rows = lines(csv);
  const auto header = split(rows.at(0));
  std::map<std::string, std::vector<std::string>> out;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto f = split(rows[r]);
    for (size_t c = 0; c < header.size(); ++c) out[header[c]].push_back(f.at(c));
  }
  return out;
}

TEST(DistillCommand, GpdWritesStageCheckpointsAndLog) {
  const fs::path dir = scratch("distill_gpd");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_distill({trained_teacher(), config_path(), "gpd", dir, std::nullopt}, out, err), kExitOk) << err.str();
  for (int k = 2; k <= 4; ++k) {
    const fs::path p = dir / ("stage_k" + std::to_string(k) + ".ckpt");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(load_checkpoint(p).meta.stage, k);
  }
  EXPECT_FALSE(fs::exists(dir / "stage_k5.ckpt"));
  const std::string csv = read_file(dir / "run_log.csv");
  EXPECT_EQ(lines(csv)[0], "stage,iteration,segment_i,loss_v,loss_hf,lambda,cfg_scale,wall_ms");
  auto cols = columns(csv);
  double lo = 1e9, hi = -1e9;
  for (size_t r = 0; r < cols["stage"].size(); ++r) {
    const int k = std::stoi(cols["stage"][r]);
    if (k < 4) {
      EXPECT_EQ(std::stod(cols["lambda"][r]), 0.0);
    }
    lo = std::min(lo, std::stod(cols["cfg_scale"][r]));
    hi = std::max(hi, std::stod(cols["cfg_scale"][r]));
  }
  EXPECT_EQ(lo, 1.5);
  EXPECT_EQ(hi, 6.0);
  EXPECT_NE(read_file(dir / "plan.txt").find("clean_data_reads = 0\n"), std::string::npos);
}

TEST(DistillCommand, DeterministicAcrossRuns) {
  const fs::path a = scratch("distill_a"), b = scratch("distill_b");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_distill({trained_teacher(), config_path(), "gpd", a, 3}, out, err), kExitOk);
  ASSERT_EQ(cmd_distill({trained_teacher(), config_path(), "gpd", b, 3}, out, err), kExitOk);
  for (const char* f : {"stage_k2.ckpt", "stage_k3.ckpt", "stage_k4.ckpt", "run_log.csv", "plan.txt"}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
}

TEST(DistillCommand, OfflineWritesFinalStage) {
  const fs::path dir = scratch("distill_off");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_distill({trained_teacher(), config_path(), "offline", dir, std::nullopt}, out, err), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "stage_k4.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "stage_k2.ckpt"));
}

TEST(DistillCommand, UnknownMethodIsUsageError) {
  const fs::path dir = scratch("distill_bad");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_distill({trained_teacher(), config_path(), "online", dir, std::nullopt}, out, err), kExitUsage);
}

TEST(DistillCommand, ShapeMismatchIsUsageError) {
  const fs::path dir = scratch("distill_shape");
  write_file(dir / "run.cfg", "iters_per_stage = 1\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_distill({trained_teacher(), dir / "run.cfg", "gpd", dir / "o", std::nullopt}, out, err), kExitUsage);
}

TEST(DistillCommand, UngatedTeacherIsRejected) {
  const fs::path dir = scratch("distill_ungated");
  const Checkpoint ck = load_checkpoint(trained_teacher());
  CheckpointMeta meta = ck.meta;
  meta.quality_gate = 0;
  save_checkpoint(dir / "t.ckpt", ck.model, meta);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_distill({dir / "t.ckpt", config_path(), "gpd", dir / "o", std::nullopt}, out, err), kExitNumeric);
}

fs::path shape_model(const fs::path& dir) {
  Arch arch;
  arch.dims = {1, 4, 6, 5};
  arch.hidden = 8;
  save_checkpoint(dir / "m.ckpt", init_model(arch, 3), CheckpointMeta{});
  return dir / "m.ckpt";
}

TEST(SampleCommand, OneStepRecordsOneEvaluation) {
  const fs::path dir = scratch("sample_one");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sample({shape_model(dir), 1, 5, 2, 1.0, dir / "s"}, out, err), kExitOk) << err.str();
  const std::string mapping = read_file(dir / "s" / "mapping.txt");
  EXPECT_NE(mapping.find("evaluations = 1\n"), std::string::npos) << mapping;
  EXPECT_NE(mapping.find("steps = 1\n"), std::string::npos);
  EXPECT_NE(mapping.find("stride = 16\n"), std::string::npos);
}

TEST(SampleCommand, GuidanceDoublesEvaluations) {
  const fs::path dir = scratch("sample_cfg");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sample({shape_model(dir), 4, 5, 2, 3.0, dir / "s"}, out, err), kExitOk);
  EXPECT_NE(read_file(dir / "s" / "mapping.txt").find("evaluations = 8\n"), std::string::npos);
}

TEST(SampleCommand, FramesArePgmAndDeterministic) {
  const fs::path dir = scratch("sample_pgm");
  const fs::path model = shape_model(dir);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_sample({model, 4, 9, 1, 1.0, dir / "a"}, out, err), kExitOk);
  ASSERT_EQ(cmd_sample({model, 4, 9, 1, 1.0, dir / "b"}, out, err), kExitOk);
  for (int t = 0; t < 4; ++t) {
    const std::string name = "frame_" + std::to_string(t) + ".pgm";
    const std::string a = read_file(dir / "a" / name);
    EXPECT_EQ(a, read_file(dir / "b" / name)) << name;
    const std::string header = "P5\n5 6\n255\n";
    ASSERT_EQ(a.substr(0, header.size()), header);
    EXPECT_EQ(a.size(), header.size() + 6u * 5u);
  }
  EXPECT_FALSE(fs::exists(dir / "a" / "frame_4.pgm"));
  EXPECT_EQ(read_file(dir / "a" / "mapping.txt"), read_file(dir / "b" / "mapping.txt"));
}

TEST(SampleCommand, UnwritableOutIsUsageError) {
  const fs::path dir = scratch("sample_unwritable");
  write_file(dir / "blocker", "x");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sample({shape_model(dir), 2, 1, 1, 1.0, dir / "blocker" / "out"}, out, err), kExitUsage);
}

TEST(SampleCommand, BadArgumentsAreUsageErrors) {
  const fs::path dir = scratch("sample_args");
  const fs::path model = shape_model(dir);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_sample({model, 0, 1, 1, 1.0, dir / "s"}, out, err), kExitUsage);
  EXPECT_EQ(cmd_sample({model, 2, 1, 9, 1.0, dir / "s"}, out, err), kExitUsage);
  EXPECT_EQ(cmd_sample({dir / "none.ckpt", 2, 1, 1, 1.0, dir / "s"}, out, err), kExitUsage);
}

TEST(EvalCommand, ReportHeaderAndRows) {
  const fs::path dir = scratch("eval");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_distill({trained_teacher(), config_path(), "gpd", dir, std::nullopt}, out, err), kExitOk);
  ASSERT_EQ(cmd_eval({dir / "stage_k4.ckpt", trained_teacher(), config_path(), dir / "eval.csv"}, out, err), kExitOk)
      << err.str();
  const auto rows = lines(read_file(dir / "eval.csv"));
  EXPECT_EQ(rows[0], "metric,stride,value,seed");
  EXPECT_EQ(rows.size(), 1u + 3u * 4u);
}

TEST(EvalCommand, IncompatibleCheckpointsAreUsageErrors) {
  const fs::path dir = scratch("eval_shape");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_eval({shape_model(dir), trained_teacher(), config_path(), dir / "e.csv"}, out, err), kExitUsage);
}

TEST(AlignmentCommand, OneRowPerSegment) {
  const fs::path dir = scratch("align");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_distill({trained_teacher(), config_path(), "gpd", dir, std::nullopt}, out, err), kExitOk);
  AlignmentArgs args;
  args.teacher = trained_teacher();
  args.student = dir / "stage_k4.ckpt";
  args.prior = dir / "stage_k3.ckpt";
  args.config = config_path();
  args.report = dir / "align.csv";
  ASSERT_EQ(cmd_analyze_alignment(args, out, err), kExitOk) << err.str();
  const auto rows = lines(read_file(args.report));
  EXPECT_EQ(rows[0], "segment_i,t,cos_gpd,cos_offline");
  EXPECT_EQ(rows.size(), 1u + 4u);
  EXPECT_NE(out.str().find("mean_cos_gpd = "), std::string::npos);

  args.baseline = "none";
  ASSERT_EQ(cmd_analyze_alignment(args, out, err), kExitOk);
  EXPECT_EQ(lines(read_file(args.report))[0], "segment_i,t,cos_gpd");
  args.baseline = "teacher";
  EXPECT_EQ(cmd_analyze_alignment(args, out, err), kExitUsage);
}

}  // namespace
}  // namespace gpd
