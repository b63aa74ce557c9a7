// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpd/datagen.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "gpd/random.hpp"

namespace gpd {

namespace {

std::atomic<std::uint64_t> g_clean_reads{0};

void check_index(const DatasetSpec& spec, Index index) {
  if (index < 0 || index >= spec.size) {
    throw InvalidArgument("sample index " + std::to_string(index) + " outside dataset of size " +
                          std::to_string(spec.size));
  }
}

int label_of(const DatasetSpec& spec, Index index) {
  return 1 + static_cast<int>(index % spec.num_classes);
}

// Triangle-wave reflection of x into [0, len].
Index bounce(Index x, Index len) {
  if (len == 0) return 0;
  const Index period = 2 * len;
  Index u = x % period;
  if (u < 0) u += period;
  return u <= len ? u : period - u;
}

}  // namespace

std::string to_string(DatasetKind k) { return k == DatasetKind::moving_shape ? "moving_shape" : "gmm2d"; }

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "moving_shape") return DatasetKind::moving_shape;
  if (s == "gmm2d") return DatasetKind::gmm2d;
  throw InvalidArgument("dataset must be moving_shape|gmm2d, got '" + s + "'");
}

void DatasetSpec::validate() const {
  dims.validate();
  if (size < 1) throw InvalidArgument("dataset size must be >= 1");
  if (num_classes < 1) throw InvalidArgument("dataset needs at least one class");
  if (kind == DatasetKind::gmm2d && !(dims == Dims{1, 1, 1, 2})) {
    throw InvalidShape("gmm2d datasets have dims 1x1x1x2");
  }
  if (kind == DatasetKind::moving_shape && (dims.height < 2 || dims.width < 2)) {
    throw InvalidShape("moving_shape frames must be at least 2x2");
  }
}

DatasetSpec DatasetSpec::moving_shape_default() { return {}; }

DatasetSpec DatasetSpec::gmm2d_default() {
  DatasetSpec s;
  s.kind = DatasetKind::gmm2d;
  s.dims = {1, 1, 1, 2};
  s.num_classes = 4;
  s.size = 4096;
  return s;
}

Index moving_shape_side(const Dims& dims) {
  return std::max<Index>(1, std::min(dims.height, dims.width) / 4);
}

std::pair<int, int> moving_shape_direction(int label) {
  switch ((label - 1) % 4) {
    case 0: return {1, 0};
    case 1: return {-1, 0};
    case 2: return {0, 1};
    default: return {0, -1};
  }
}

std::pair<Index, Index> moving_shape_position(const DatasetSpec& spec, Index index, Index frame) {
  const Index side = moving_shape_side(spec.dims);
  const Index range_x = spec.dims.width - side, range_y = spec.dims.height - side;
  CounterRng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(index)));
  const auto x0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(range_x + 1)));
  const auto y0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(range_y + 1)));
  const auto [dx, dy] = moving_shape_direction(label_of(spec, index));
  return {bounce(x0 + dx * frame, range_x), bounce(y0 + dy * frame, range_y)};
}

LabeledSample moving_shape_sample(const DatasetSpec& spec, Index index) {
  check_index(spec, index);
  const Dims& d = spec.dims;
  const Index side = moving_shape_side(d);
  LatentTensor x = LatentTensor::Constant(d, -1.0);
  for (Index t = 0; t < d.frames; ++t) {
    const auto [px, py] = moving_shape_position(spec, index, t);
    for (Index c = 0; c < d.channels; ++c) {
      for (Index h = py; h < py + side; ++h) {
        for (Index w = px; w < px + side; ++w) x(c, t, h, w) = 1.0;
      }
    }
  }
  g_clean_reads.fetch_add(1);
  return {std::move(x), {label_of(spec, index)}};
}

Eigen::Vector2d gmm2d_class_mean(const DatasetSpec& spec, int label) {
  if (label < 1 || label > spec.num_classes) throw InvalidArgument("gmm2d: label out of range");
  const double a = 2.0 * std::numbers::pi * (label - 1) / spec.num_classes;
  return {kGmmRadius * std::cos(a), kGmmRadius * std::sin(a)};
}

LabeledSample gmm2d_sample(const DatasetSpec& spec, Index index) {
  check_index(spec, index);
  const int label = label_of(spec, index);
  CounterRng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(index)));
  const Eigen::Vector2d mean = gmm2d_class_mean(spec, label);
  LatentTensor x(Dims{1, 1, 1, 2});
  x.data()[0] = mean[0] + kGmmStddev * rng.normal();
  x.data()[1] = mean[1] + kGmmStddev * rng.normal();
  g_clean_reads.fetch_add(1);
  return {std::move(x), {label}};
}

LabeledSample draw_sample(const DatasetSpec& spec, Index index) {
  return spec.kind == DatasetKind::gmm2d ? gmm2d_sample(spec, index) : moving_shape_sample(spec, index);
}

LatentTensor gaussian_noise(const Dims& dims, std::uint64_t seed) {
  dims.validate();
  return LatentTensor(dims, gaussian_matrix(dims.size(), 1, seed).col(0));
}

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

std::uint64_t clean_data_reads() { return g_clean_reads.load(); }

}  // namespace gpd
