// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

#include "gpd/netcore.hpp"

namespace gpd {

enum class DatasetKind { moving_shape, gmm2d };

std::string to_string(DatasetKind k);
DatasetKind parse_dataset_kind(const std::string& s);

/// Synthetic dataset descriptor. Labels run over 1..num_classes; the null
/// class 0 is never emitted.
struct DatasetSpec {
  DatasetKind kind = DatasetKind::moving_shape;
  Dims dims{1, 8, 16, 16};
  int num_classes = 4;
  Index size = 1024;
  std::uint64_t seed = 7;

  void validate() const;

  static DatasetSpec moving_shape_default();
  static DatasetSpec gmm2d_default();
};

struct LabeledSample {
  LatentTensor x;
  ConditionLabel label;
};

/// A bright square (value +1, side min(H, W)/4) on a -1 background moving
/// one pixel per frame. Classes 1..4 map to +x, -x, +y, -y (cycling for
/// more classes); the square bounces off the borders.
LabeledSample moving_shape_sample(const DatasetSpec& spec, Index index);

/// Square side used by moving_shape_sample.
Index moving_shape_side(const Dims& dims);
/// Unit displacement per frame (dx, dy) of a class before any bounce.
std::pair<int, int> moving_shape_direction(int label);
/// Position of the square's top-left corner (x, y) at `frame`.
std::pair<Index, Index> moving_shape_position(const DatasetSpec& spec, Index index, Index frame);

/// Isotropic 2D Gaussian components: class c has mean
/// 2 * (cos(2 pi (c-1)/n), sin(2 pi (c-1)/n)) and standard deviation 0.3.
LabeledSample gmm2d_sample(const DatasetSpec& spec, Index index);
Eigen::Vector2d gmm2d_class_mean(const DatasetSpec& spec, int label);
inline constexpr double kGmmStddev = 0.3;
inline constexpr double kGmmRadius = 2.0;

/// Dispatches on spec.kind.
LabeledSample draw_sample(const DatasetSpec& spec, Index index);

/// I.i.d. N(0, 1) entries from CounterRng(seed).
LatentTensor gaussian_noise(const Dims& dims, std::uint64_t seed);
Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::uint64_t seed);

/// Number of clean data tensors produced by the generators in this process.
std::uint64_t clean_data_reads();

}  // namespace gpd
