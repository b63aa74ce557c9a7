// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace gpd {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian hosts");

constexpr const char* kArchArray = "__arch";
constexpr Index kArchFields = 10;

class Writer {
 public:
  template <class T>
  void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_bytes(const char* data, size_t n) { out_.append(data, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_bytes(size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }
  const std::string& in_;
  size_t pos_ = 0;
};

struct Array {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

void write_array(Writer& w, const std::string& name, const std::vector<std::uint64_t>& dims,
                 const double* values, size_t count) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.put_bytes(name.data(), name.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.put<std::uint64_t>(d);
  for (size_t i = 0; i < count; ++i) w.put<double>(values[i]);
}

}  // namespace

std::string encode_checkpoint(const VelocityModel& model, const CheckpointMeta& meta) {
  const Arch& a = model.arch();
  const double arch_values[kArchFields] = {
      static_cast<double>(a.dims.channels), static_cast<double>(a.dims.frames),
      static_cast<double>(a.dims.height),   static_cast<double>(a.dims.width),
      static_cast<double>(a.hidden),        static_cast<double>(a.depth),
      static_cast<double>(a.num_classes),   static_cast<double>(a.time_embed),
      static_cast<double>(a.class_embed),   static_cast<double>(meta.schedule_steps)};

  const auto views = model.params().views();
  Writer w;
  w.put_bytes(kCheckpointMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(views.size() + 1));

  std::vector<double> arch(arch_values, arch_values + kArchFields);
  arch.push_back(static_cast<double>(meta.quality_gate));
  arch.push_back(static_cast<double>(meta.stage));
  write_array(w, kArchArray, {arch.size()}, arch.data(), arch.size());

  for (const auto& v : views) {
    // Eigen storage is column-major; the file is row-major.
    std::vector<double> row_major(static_cast<size_t>(v.size()));
    for (Index r = 0; r < v.rows; ++r) {
      for (Index c = 0; c < v.cols; ++c) row_major[r * v.cols + c] = v.data[c * v.rows + r];
    }
    std::vector<std::uint64_t> dims = {static_cast<std::uint64_t>(v.rows)};
    if (v.cols != 1 || v.name == "class_embed" || v.name.ends_with("weight")) {
      dims.push_back(static_cast<std::uint64_t>(v.cols));
    }
    write_array(w, v.name, dims, row_major.data(), row_major.size());
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(4) != std::string(kCheckpointMagic, 4)) throw FormatError("bad checkpoint magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  std::vector<Array> arrays;
  for (std::uint32_t i = 0; i < count; ++i) {
    Array a;
    a.name = r.get_bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 4) throw FormatError("array " + a.name + " has unsupported rank");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      a.dims.push_back(r.get<std::uint64_t>());
      n *= a.dims.back();
    }
    if (n > (1ULL << 32)) throw FormatError("array " + a.name + " is implausibly large");
    a.values.resize(n);
    for (auto& x : a.values) x = r.get<double>();
    if (!arrays.empty() && !(arrays.back().name < a.name)) {
      throw FormatError("checkpoint arrays are not in lexicographic order");
    }
    arrays.push_back(std::move(a));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint arrays");
  if (arrays.empty() || arrays.front().name != kArchArray || arrays.front().values.size() < kArchFields + 2) {
    throw FormatError("checkpoint is missing the leading arch array");
  }

  const auto& av = arrays.front().values;
  auto as_index = [](double x) { return static_cast<Index>(x); };
  Arch arch;
  arch.dims = {as_index(av[0]), as_index(av[1]), as_index(av[2]), as_index(av[3])};
  arch.hidden = as_index(av[4]);
  arch.depth = as_index(av[5]);
  arch.num_classes = as_index(av[6]);
  arch.time_embed = as_index(av[7]);
  arch.class_embed = as_index(av[8]);
  CheckpointMeta meta;
  meta.schedule_steps = static_cast<std::int64_t>(av[9]);
  meta.quality_gate = static_cast<std::int64_t>(av[10]);
  meta.stage = static_cast<std::int64_t>(av[11]);
  try {
    arch.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint arch invalid: ") + e.what());
  }

  VelocityModel model = init_model(arch, 0);
  ParamSet& params = model.mutable_params();
  auto views = params.views();
  if (views.size() + 1 != arrays.size()) throw FormatError("checkpoint parameter count mismatch");
  for (size_t i = 0; i < views.size(); ++i) {
    const Array& a = arrays[i + 1];
    auto& v = views[i];
    if (a.name != v.name || a.values.size() != static_cast<size_t>(v.size()) || a.dims.empty() ||
        a.dims[0] != static_cast<std::uint64_t>(v.rows)) {
      throw FormatError("checkpoint array " + a.name + " does not match the architecture");
    }
    for (Index r2 = 0; r2 < v.rows; ++r2) {
      for (Index c = 0; c < v.cols; ++c) v.data[c * v.rows + r2] = a.values[r2 * v.cols + c];
    }
  }
  model.reset_evaluations();
  return {std::move(model), meta};
}

void save_checkpoint(const std::filesystem::path& path, const VelocityModel& model,
                     const CheckpointMeta& meta) {
  const std::string bytes = encode_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UsageError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace gpd
