// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>

#include "gpd/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Progressive few-step distillation of flow-matching video models"};
  app.require_subcommand(1);

  gpd::TrainTeacherArgs teacher_args;
  std::uint64_t teacher_seed = 0;
  auto* teacher = app.add_subcommand("train-teacher", "Train a flow-matching teacher on a synthetic dataset");
  teacher->add_option("--config", teacher_args.config, "Config file")->required();
  teacher->add_option("--out", teacher_args.out, "Output checkpoint")->required();
  auto* teacher_seed_opt = teacher->add_option("--seed", teacher_seed, "Override the config seed");

  gpd::DistillArgs distill_args;
  std::uint64_t distill_seed = 0;
  auto* distill = app.add_subcommand("distill", "Distill a teacher into a few-step student");
  distill->add_option("--teacher", distill_args.teacher, "Teacher checkpoint")->required();
  distill->add_option("--config", distill_args.config, "Config file")->required();
  distill->add_option("--method", distill_args.method, "gpd or offline");
  distill->add_option("--out", distill_args.out, "Output directory")->required();
  auto* distill_seed_opt = distill->add_option("--seed", distill_seed, "Override the config seed");

  gpd::SampleArgs sample_args;
  std::uint64_t sample_seed = 0;
  auto* sample = app.add_subcommand("sample", "Sample one latent video and write PGM frames");
  sample->add_option("--model", sample_args.model, "Model checkpoint")->required();
  sample->add_option("--steps", sample_args.steps, "Number of sampling steps")->required();
  auto* sample_seed_opt = sample->add_option("--seed", sample_seed, "Noise seed");
  sample->add_option("--class", sample_args.label, "Condition class (1-based)");
  sample->add_option("--cfg", sample_args.cfg_scale, "Guidance scale (1 = conditional only)");
  sample->add_option("--out", sample_args.out, "Output directory")->required();

  gpd::EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Compare a student with its teacher at several strides");
  eval->add_option("--student", eval_args.student, "Student checkpoint")->required();
  eval->add_option("--teacher", eval_args.teacher, "Teacher checkpoint")->required();
  eval->add_option("--config", eval_args.config, "Config file")->required();
  eval->add_option("--report", eval_args.report, "Output CSV")->required();

  gpd::AlignmentArgs align_args;
  std::filesystem::path align_prior, align_config;
  auto* align = app.add_subcommand("analyze-alignment", "Per-timestep cosine alignment of training targets");
  align->add_option("--teacher", align_args.teacher, "Teacher checkpoint")->required();
  align->add_option("--student", align_args.student, "Student checkpoint")->required();
  auto* prior_opt = align->add_option("--prior", align_prior, "Frozen prior student (defaults to the student)");
  auto* align_config_opt = align->add_option("--config", align_config, "Config file");
  align->add_option("--baseline", align_args.baseline, "offline or none");
  align->add_option("--report", align_args.report, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return gpd::kExitUsage;
  }

  if (*teacher) {
    if (*teacher_seed_opt) teacher_args.seed = teacher_seed;
    return gpd::cmd_train_teacher(teacher_args, std::cout, std::cerr);
  }
  if (*distill) {
    if (*distill_seed_opt) distill_args.seed = distill_seed;
    return gpd::cmd_distill(distill_args, std::cout, std::cerr);
  }
  if (*sample) {
    if (*sample_seed_opt) sample_args.seed = sample_seed;
    return gpd::cmd_sample(sample_args, std::cout, std::cerr);
  }
  if (*eval) return gpd::cmd_eval(eval_args, std::cout, std::cerr);
  if (*prior_opt) align_args.prior = align_prior;
  if (*align_config_opt) align_args.config = align_config;
  return gpd::cmd_analyze_alignment(align_args, std::cout, std::cerr);
}
