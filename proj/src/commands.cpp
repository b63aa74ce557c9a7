// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "gpd/analysis.hpp"
#include "gpd/checkpoint.hpp"
#include "gpd/config.hpp"
#include "gpd/datagen.hpp"
#include "gpd/distill.hpp"
#include "gpd/flowtrain.hpp"
#include "gpd/report.hpp"
#include "gpd/solver.hpp"

namespace gpd {

namespace {

namespace fs = std::filesystem;

// Maps library exceptions onto exit codes.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidShape& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const TrainingFailure& e) {
    err << "training failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const SymmetryViolation& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

Checkpoint load_or_usage(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " checkpoint not found: " + path.string());
  return load_checkpoint(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".gpd_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

void write_or_usage(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
  if (!f) throw UsageError("write failed: " + path.string());
}

void require_compatible(const Arch& a, const Arch& b, const std::string& what) {
  if (!(a.dims == b.dims) || a.num_classes != b.num_classes) {
    throw InvalidShape(what + ": latent dims " + a.dims.str() + " vs " + b.dims.str() + ", classes " +
                       std::to_string(a.num_classes) + " vs " + std::to_string(b.num_classes));
  }
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p += suffix;
  return p;
}

}  // namespace

int cmd_train_teacher(const TrainTeacherArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = parse_config(args.config);
    const std::uint64_t seed = resolve_seed(cfg.plan.seed, args.seed);
    if (args.out.has_parent_path()) ensure_dir(args.out.parent_path());

    TeacherResult trained = train_teacher(cfg.data, cfg.arch, cfg.teacher, seed);
    const GateResult gate = quality_gate(trained.model, cfg.data, cfg.gate);
    CheckpointMeta meta;
    meta.schedule_steps = cfg.plan.steps;
    meta.quality_gate = gate.passed ? 1 : 0;
    meta.stage = 1;
    save_checkpoint(args.out, trained.model, meta);
    write_or_usage(sibling(args.out, ".loss.csv"), teacher_log_csv(trained.report));
    write_or_usage(sibling(args.out, ".config.txt"), echo_config(cfg));

    out << "teacher written to " << args.out.string() << "\n"
        << "quality gate: teacher " << format_double(gate.teacher_distance) << " noise "
        << format_double(gate.noise_distance) << (gate.passed ? " passed" : " FAILED") << "\n";
    if (!gate.passed) {
      err << "training failure: teacher did not pass the quality gate\n";
      return static_cast<int>(kExitNumeric);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_distill(const DistillArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.method != "gpd" && args.method != "offline") {
      throw UsageError("unknown method '" + args.method + "' (expected gpd or offline)");
    }
    RunConfig cfg = parse_config(args.config);
    cfg.plan.seed = resolve_seed(cfg.plan.seed, args.seed);
    const Checkpoint teacher_ckpt = load_or_usage(args.teacher, "teacher");
    require_compatible(teacher_ckpt.model.arch(), cfg.arch, "teacher does not match the config");
    if (teacher_ckpt.meta.quality_gate != 1) {
      throw TrainingFailure("teacher checkpoint did not pass the quality gate");
    }
    ensure_dir(args.out);

    const std::uint64_t reads_before = clean_data_reads();
    const VelocityModel teacher = clone_frozen(teacher_ckpt.model);
    const NoiseSource source(cfg.arch.dims, cfg.data.num_classes, cfg.plan.batch_size, cfg.plan.seed);
    CheckpointMeta meta;
    meta.schedule_steps = cfg.plan.steps;
    meta.quality_gate = teacher_ckpt.meta.quality_gate;

    RunReport report;
    if (args.method == "gpd") {
      ProgressiveResult result = run_progressive(teacher, cfg.plan, source);
      for (size_t s = 0; s < result.stage_students.size(); ++s) {
        meta.stage = static_cast<std::int64_t>(s) + 2;
        save_checkpoint(args.out / ("stage_k" + std::to_string(meta.stage) + ".ckpt"),
                        result.stage_students[s], meta);
      }
      report = std::move(result.report);
    } else {
      const int iterations = cfg.plan.iters_per_stage * (cfg.plan.K - 1);
      OfflineResult result = offline_distill(teacher, cfg.plan.K, cfg.plan, source, iterations);
      meta.stage = cfg.plan.K;
      save_checkpoint(args.out / ("stage_k" + std::to_string(cfg.plan.K) + ".ckpt"), result.student, meta);
      report = std::move(result.report);
    }
    const std::uint64_t reads = clean_data_reads() - reads_before;

    write_or_usage(args.out / "run_log.csv", stage_log_csv(report));
    write_or_usage(args.out / "plan.txt", echo_config(cfg) + "method = " + args.method + "\n" +
                                              "clean_data_reads = " + std::to_string(reads) + "\n");
    out << args.method << " distillation wrote " << report.stages.size() << " updates to "
        << args.out.string() << "\n";
    if (reads != 0) {
      err << "error: distillation read " << reads << " clean data tensors\n";
      return static_cast<int>(kExitNumeric);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.steps < 1) throw UsageError("--steps must be >= 1");
    if (!(args.cfg_scale >= 1.0)) throw UsageError("--cfg must be >= 1");
    const Checkpoint ckpt = load_or_usage(args.model, "model");
    const Arch& arch = ckpt.model.arch();
    const int num_classes = static_cast<int>(arch.num_classes) - 1;
    if (args.label < 1 || args.label > num_classes) {
      throw UsageError("--class must lie in 1.." + std::to_string(num_classes));
    }
    ensure_dir(args.out);

    const int steps = static_cast<int>(ckpt.meta.schedule_steps);
    const int stride = (steps + args.steps - 1) / args.steps;
    const std::uint64_t seed = resolve_seed(0, args.seed);
    const TimeSchedule schedule = uniform_schedule(steps);
    const LatentTensor noise = gaussian_noise(arch.dims, seed);

    ckpt.model.reset_evaluations();
    const LatentTensor x = sample(ckpt.model, noise, schedule, stride, ConditionLabel{args.label}, args.cfg_scale);
    const std::uint64_t evaluations = ckpt.model.evaluations();

    const Dims& d = arch.dims;
    for (Index c = 0; c < d.channels; ++c) {
      for (Index t = 0; t < d.frames; ++t) {
        std::string name = "frame_" + std::to_string(t) + ".pgm";
        if (d.channels > 1) name = "c" + std::to_string(c) + "_" + name;
        std::string bytes = "P5\n" + std::to_string(d.width) + " " + std::to_string(d.height) + "\n255\n";
        for (Index h = 0; h < d.height; ++h) {
          for (Index w = 0; w < d.width; ++w) {
            const double g = std::clamp((x(c, t, h, w) + 1.0) * 0.5 * 255.0, 0.0, 255.0);
            bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(g))));
          }
        }
        write_or_usage(args.out / name, bytes);
      }
    }
    write_or_usage(args.out / "mapping.txt",
                   "gray = round(clamp((value + 1) / 2 * 255, 0, 255))\n"
                   "value_at_gray_0 = -1\n"
                   "value_at_gray_255 = 1\n"
                   "steps = " + std::to_string(stride_indices(steps, stride).size() - 1) + "\n" +
                   "stride = " + std::to_string(stride) + "\n" +
                   "seed = " + std::to_string(seed) + "\n" +
                   "class = " + std::to_string(args.label) + "\n" +
                   "cfg_scale = " + format_double(args.cfg_scale) + "\n" +
                   "evaluations = " + std::to_string(evaluations) + "\n");
    out << "wrote " << d.channels * d.frames << " frames to " << args.out.string() << " using "
        << evaluations << " velocity evaluations\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = parse_config(args.config);
    const Checkpoint student = load_or_usage(args.student, "student");
    const Checkpoint teacher = load_or_usage(args.teacher, "teacher");
    require_compatible(student.model.arch(), teacher.model.arch(), "student and teacher are incompatible");
    require_compatible(student.model.arch(), cfg.arch, "student does not match the config");
    const auto rows = evaluate_student(student.model, teacher.model, cfg.plan, cfg.data.num_classes, cfg.eval);
    if (args.report.has_parent_path()) ensure_dir(args.report.parent_path());
    write_or_usage(args.report, eval_csv(rows));
    out << "wrote " << rows.size() << " metric rows to " << args.report.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_analyze_alignment(const AlignmentArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.baseline != "offline" && args.baseline != "none") {
      throw UsageError("unknown baseline '" + args.baseline + "' (expected offline or none)");
    }
    const Checkpoint teacher = load_or_usage(args.teacher, "teacher");
    const Checkpoint student = load_or_usage(args.student, "student");
    require_compatible(student.model.arch(), teacher.model.arch(), "student and teacher are incompatible");
    std::optional<Checkpoint> prior;
    if (args.prior) {
      prior = load_or_usage(*args.prior, "prior");
      require_compatible(prior->model.arch(), teacher.model.arch(), "prior and teacher are incompatible");
    }
    RunConfig cfg = parse_config_string("");
    if (args.config) {
      cfg = parse_config(*args.config);
      require_compatible(student.model.arch(), cfg.arch, "student does not match the config");
    } else {
      cfg.plan.steps = static_cast<int>(student.meta.schedule_steps);
      cfg.plan.K = std::min<int>(cfg.plan.K, cfg.plan.steps);
      cfg.plan.validate();
    }
    const bool with_offline = args.baseline == "offline";
    const NoiseBatch batch = eval_batch(student.model.arch().dims, static_cast<int>(student.model.arch().num_classes) - 1,
                                        cfg.eval.samples, cfg.eval.seed);
    const AlignmentReport report =
        alignment_analysis(clone_frozen(teacher.model), clone_frozen(prior ? prior->model : student.model),
                           student.model, cfg.plan, batch, with_offline);
    if (args.report.has_parent_path()) ensure_dir(args.report.parent_path());
    write_or_usage(args.report, alignment_csv(report, with_offline));
    out << "mean_cos_gpd = " << format_double(report.mean_gpd) << "\n";
    if (with_offline) out << "mean_cos_offline = " << format_double(report.mean_offline) << "\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace gpd
