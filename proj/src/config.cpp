// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace gpd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line;
};

class Values {
 public:
  explicit Values(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const Entry& entry(const std::string& key) const { return entries_.at(key); }

  template <class T>
  void number(const std::string& key, T& out) const {
    if (!has(key)) return;
    const Entry& e = entries_.at(key);
    T parsed{};
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto res = std::from_chars(first, last, parsed);
    if (res.ec != std::errc() || res.ptr != last) {
      throw ConfigError(key, e.line, "malformed value '" + e.value + "'");
    }
    out = parsed;
  }

  void boolean(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const Entry& e = entries_.at(key);
    if (e.value == "true" || e.value == "1") {
      out = true;
    } else if (e.value == "false" || e.value == "0") {
      out = false;
    } else {
      throw ConfigError(key, e.line, "expected true|false, got '" + e.value + "'");
    }
  }

  template <class T>
  void choice(const std::string& key, T& out, T (*parse)(const std::string&)) const {
    if (!has(key)) return;
    const Entry& e = entries_.at(key);
    try {
      out = parse(e.value);
    } catch (const Error& err) {
      throw ConfigError(key, e.line, err.what());
    }
  }

  void int_list(const std::string& key, std::vector<int>& out) const {
    if (!has(key)) return;
    const Entry& e = entries_.at(key);
    std::vector<int> parsed;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      int v = 0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
        throw ConfigError(key, e.line, "malformed list entry '" + item + "'");
      }
      parsed.push_back(v);
    }
    if (parsed.empty()) throw ConfigError(key, e.line, "empty list");
    out = parsed;
  }

 private:
  std::map<std::string, Entry> entries_;
};

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "dataset", "channels", "frames", "height", "width", "num_classes", "dataset_size", "dataset_seed",
      "hidden", "depth", "time_embed", "class_embed",
      "teacher_iters", "teacher_batch", "teacher_lr", "teacher_weight_decay", "cond_dropout",
      "gate_steps", "gate_samples",
      "K", "steps", "iters_per_stage", "cfg_start", "cfg_end", "lambda0", "sigma_t", "sigma_s", "alpha",
      "lr", "weight_decay", "beta1", "beta2", "eps", "batch_size", "seed", "prior_rollout", "trailing",
      "hf_mode", "log_wall_time",
      "eval_strides", "eval_samples", "eval_seed"};
  return keys;
}

bool is_known(const std::string& key) {
  for (const auto& k : known_keys()) {
    if (k == key) return true;
  }
  return false;
}

// Runs a validation step, attributing any failure to `key`.
void check(const Values& v, const std::string& key, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, v.has(key) ? v.entry(key).line : 0, e.what());
  }
}

}  // namespace

RunConfig parse_config_string(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::stringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "missing key");
    if (!is_known(key)) throw ConfigError(key, line_no, "unknown key");
    if (value.empty()) throw ConfigError(key, line_no, "missing value");
    if (entries.count(key)) throw ConfigError(key, line_no, "duplicate key");
    entries[key] = {value, line_no};
  }
  const Values v(std::move(entries));

  RunConfig c;
  v.choice("dataset", c.data.kind, parse_dataset_kind);
  const bool gmm = c.data.kind == DatasetKind::gmm2d;
  if (gmm) {
    c.data = DatasetSpec::gmm2d_default();
    for (const char* key : {"channels", "frames", "height", "width"}) {
      if (v.has(key)) throw ConfigError(key, v.entry(key).line, "gmm2d datasets have fixed dims 1x1x1x2");
    }
    c.arch.hidden = 64;
    c.teacher.iterations = 3000;
    c.teacher.batch_size = 128;
    c.plan.batch_size = 32;
  } else {
    c.data = DatasetSpec::moving_shape_default();
    c.arch.hidden = 256;
    c.teacher.iterations = 1500;
    c.teacher.batch_size = 32;
    c.gate.samples = 128;
  }
  v.number("channels", c.data.dims.channels);
  v.number("frames", c.data.dims.frames);
  v.number("height", c.data.dims.height);
  v.number("width", c.data.dims.width);
  v.number("num_classes", c.data.num_classes);
  v.number("dataset_size", c.data.size);
  v.number("dataset_seed", c.data.seed);
  check(v, "num_classes", [&] { c.data.validate(); });

  c.arch.dims = c.data.dims;
  c.arch.num_classes = c.data.num_classes + 1;
  v.number("hidden", c.arch.hidden);
  v.number("depth", c.arch.depth);
  v.number("time_embed", c.arch.time_embed);
  v.number("class_embed", c.arch.class_embed);
  check(v, "hidden", [&] { c.arch.validate(); });

  v.number("teacher_iters", c.teacher.iterations);
  v.number("teacher_batch", c.teacher.batch_size);
  v.number("teacher_lr", c.teacher.optim.lr);
  v.number("teacher_weight_decay", c.teacher.optim.weight_decay);
  v.number("cond_dropout", c.teacher.cond_dropout);
  check(v, "teacher_iters", [&] { c.teacher.validate(); });
  check(v, "teacher_lr", [&] {
    if (!(c.teacher.optim.lr > 0.0)) throw InvalidArgument("teacher_lr must be > 0");
  });

  v.number("gate_steps", c.gate.steps);
  v.number("gate_samples", c.gate.samples);
  check(v, "gate_steps", [&] {
    if (c.gate.steps < 1) throw InvalidArgument("gate_steps must be >= 1");
  });
  check(v, "gate_samples", [&] {
    if (c.gate.samples < 2) throw InvalidArgument("gate_samples must be >= 2");
  });

  v.number("K", c.plan.K);
  v.number("steps", c.plan.steps);
  v.number("iters_per_stage", c.plan.iters_per_stage);
  v.number("cfg_start", c.plan.cfg_start);
  v.number("cfg_end", c.plan.cfg_end);
  v.number("lambda0", c.plan.lambda0);
  v.number("sigma_t", c.plan.filter.sigma_t);
  v.number("sigma_s", c.plan.filter.sigma_s);
  v.number("alpha", c.plan.filter.alpha);
  v.number("lr", c.plan.optim.lr);
  v.number("weight_decay", c.plan.optim.weight_decay);
  v.number("beta1", c.plan.optim.beta1);
  v.number("beta2", c.plan.optim.beta2);
  v.number("eps", c.plan.optim.eps);
  v.number("batch_size", c.plan.batch_size);
  v.number("seed", c.plan.seed);
  v.choice("prior_rollout", c.plan.prior_rollout, parse_prior_rollout);
  v.choice("trailing", c.plan.trailing, parse_trailing);
  v.choice("hf_mode", c.plan.hf_mode, parse_hf_mode);
  v.boolean("log_wall_time", c.plan.record_wall_time);

  // Attribute plan invariant violations to the most specific key.
  check(v, "K", [&] {
    if (c.plan.K < 2) throw InvalidArgument("K must be >= 2");
    if (c.plan.K > c.plan.steps) throw InvalidArgument("K must not exceed steps");
  });
  check(v, "steps", [&] {
    if (c.plan.steps < 1) throw InvalidArgument("steps must be >= 1");
  });
  check(v, "iters_per_stage", [&] {
    if (c.plan.iters_per_stage < 1) throw InvalidArgument("iters_per_stage must be >= 1");
  });
  check(v, "cfg_end", [&] {
    if (!(c.plan.cfg_end >= 1.0)) throw InvalidArgument("cfg_end must be >= 1");
  });
  check(v, "cfg_start", [&] {
    if (!(c.plan.cfg_start >= c.plan.cfg_end)) throw InvalidArgument("cfg_start must be >= cfg_end");
  });
  check(v, "lambda0", [&] {
    if (!(c.plan.lambda0 >= 0.0)) throw InvalidArgument("lambda0 must be >= 0");
  });
  check(v, "sigma_t", [&] { c.plan.filter.validate(); });
  check(v, "batch_size", [&] {
    if (c.plan.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  });
  check(v, "lr", [&] {
    if (!(c.plan.optim.lr > 0.0)) throw InvalidArgument("lr must be > 0");
  });
  check(v, "beta1", [&] {
    if (!(c.plan.optim.beta1 >= 0.0 && c.plan.optim.beta1 < 1.0)) throw InvalidArgument("beta1 must be in [0, 1)");
  });
  check(v, "beta2", [&] {
    if (!(c.plan.optim.beta2 >= 0.0 && c.plan.optim.beta2 < 1.0)) throw InvalidArgument("beta2 must be in [0, 1)");
  });
  check(v, "eps", [&] {
    if (!(c.plan.optim.eps > 0.0)) throw InvalidArgument("eps must be > 0");
  });
  check(v, "weight_decay", [&] {
    if (!(c.plan.optim.weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  });
  check(v, "K", [&] { c.plan.validate(); });

  c.eval.strides = {1, 2, c.plan.K};
  if (c.plan.K <= 2) c.eval.strides = {1, c.plan.K};
  v.int_list("eval_strides", c.eval.strides);
  v.number("eval_samples", c.eval.samples);
  v.number("eval_seed", c.eval.seed);
  check(v, "eval_strides", [&] {
    for (int s : c.eval.strides) {
      if (s < 1 || s > c.plan.steps) throw InvalidArgument("eval strides must lie in [1, steps]");
    }
  });
  check(v, "eval_samples", [&] {
    if (c.eval.samples < 2) throw InvalidArgument("eval_samples must be >= 2");
  });
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

std::string echo_config(const RunConfig& c) {
  std::string out;
  auto put = [&](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
  auto num = [](auto x) {
    if constexpr (std::is_floating_point_v<decltype(x)>) {
      return format_double(x);
    } else {
      return std::to_string(x);
    }
  };
  put("dataset", to_string(c.data.kind));
  if (c.data.kind == DatasetKind::moving_shape) {
    put("channels", num(c.data.dims.channels));
    put("frames", num(c.data.dims.frames));
    put("height", num(c.data.dims.height));
    put("width", num(c.data.dims.width));
  }
  put("num_classes", num(c.data.num_classes));
  put("dataset_size", num(c.data.size));
  put("dataset_seed", num(c.data.seed));
  put("hidden", num(c.arch.hidden));
  put("depth", num(c.arch.depth));
  put("time_embed", num(c.arch.time_embed));
  put("class_embed", num(c.arch.class_embed));
  put("teacher_iters", num(c.teacher.iterations));
  put("teacher_batch", num(c.teacher.batch_size));
  put("teacher_lr", num(c.teacher.optim.lr));
  put("teacher_weight_decay", num(c.teacher.optim.weight_decay));
  put("cond_dropout", num(c.teacher.cond_dropout));
  put("gate_steps", num(c.gate.steps));
  put("gate_samples", num(c.gate.samples));
  put("K", num(c.plan.K));
  put("steps", num(c.plan.steps));
  put("iters_per_stage", num(c.plan.iters_per_stage));
  put("cfg_start", num(c.plan.cfg_start));
  put("cfg_end", num(c.plan.cfg_end));
  put("lambda0", num(c.plan.lambda0));
  put("sigma_t", num(c.plan.filter.sigma_t));
  put("sigma_s", num(c.plan.filter.sigma_s));
  put("alpha", num(c.plan.filter.alpha));
  put("lr", num(c.plan.optim.lr));
  put("weight_decay", num(c.plan.optim.weight_decay));
  put("beta1", num(c.plan.optim.beta1));
  put("beta2", num(c.plan.optim.beta2));
  put("eps", num(c.plan.optim.eps));
  put("batch_size", num(c.plan.batch_size));
  put("seed", num(c.plan.seed));
  put("prior_rollout", to_string(c.plan.prior_rollout));
  put("trailing", to_string(c.plan.trailing));
  put("hf_mode", to_string(c.plan.hf_mode));
  put("log_wall_time", c.plan.record_wall_time ? "true" : "false");
  std::string strides;
  for (size_t i = 0; i < c.eval.strides.size(); ++i) strides += (i ? "," : "") + std::to_string(c.eval.strides[i]);
  put("eval_strides", strides);
  put("eval_samples", num(c.eval.samples));
  put("eval_seed", num(c.eval.seed));
  return out;
}

std::uint64_t resolve_seed(std::uint64_t config_seed, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GPD_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("GPD_SEED", 0, "environment seed '" + s + "' is not an unsigned integer");
    }
    return v;
  }
  return config_seed;
}

}  // namespace gpd
