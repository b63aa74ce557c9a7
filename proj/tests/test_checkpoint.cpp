// Copyright 2026 The GPD Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "gpd/checkpoint.hpp"
#include "gpd/datagen.hpp"

namespace gpd {
namespace {

Arch small_arch() {
  Arch a;
  a.dims = {1, 2, 2, 3};
  a.hidden = 5;
  a.depth = 3;
  a.num_classes = 4;
  a.time_embed = 2;
  a.class_embed = 2;
  return a;
}

template <class T>
T read_le(const std::string& bytes, size_t at) {
  T v;
  std::memcpy(&v, bytes.data() + at, sizeof(T));
  return v;
}

TEST(Checkpoint, RoundTripPreservesModelAndMeta) {
  const VelocityModel m = init_model(small_arch(), 3);
  const CheckpointMeta meta{48, 1, 3};
  const Checkpoint back = decode_checkpoint(encode_checkpoint(m, meta));
  EXPECT_EQ(back.model.arch(), m.arch());
  EXPECT_EQ(back.meta, meta);
  EXPECT_EQ(back.model.param_hash(), m.param_hash());
  const LatentTensor z = gaussian_noise(small_arch().dims, 1);
  EXPECT_EQ(forward(back.model, z, 0.4, {2}).data(), forward(m, z, 0.4, {2}).data());
}

TEST(Checkpoint, HeaderLayout) {
  const VelocityModel m = init_model(small_arch(), 4);
  const std::string bytes = encode_checkpoint(m, {});
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 4), "GPD1");
  EXPECT_EQ(read_le<std::uint32_t>(bytes, 4), 1u);
  // __arch, class_embed, a bias/weight pair per layer and the skip pair.
  EXPECT_EQ(read_le<std::uint32_t>(bytes, 8), 1u + 1u + 2u * 3u + 2u);
  EXPECT_EQ(read_le<std::uint32_t>(bytes, 12), 6u);
  EXPECT_EQ(bytes.substr(16, 6), "__arch");
}

TEST(Checkpoint, WeightsAreRowMajor) {
  const VelocityModel m = init_model(small_arch(), 5);
  const std::string bytes = encode_checkpoint(m, {});
  const std::string name = "layer0.weight";
  const size_t at = bytes.find(name);
  ASSERT_NE(at, std::string::npos);
  size_t p = at + name.size();
  EXPECT_EQ(read_le<std::uint32_t>(bytes, p), 2u);
  const auto rows = read_le<std::uint64_t>(bytes, p + 4);
  const auto cols = read_le<std::uint64_t>(bytes, p + 12);
  const Eigen::MatrixXd& w = m.params().weights[0];
  EXPECT_EQ(rows, static_cast<std::uint64_t>(w.rows()));
  EXPECT_EQ(cols, static_cast<std::uint64_t>(w.cols()));
  p += 20;
  EXPECT_EQ(read_le<double>(bytes, p), w(0, 0));
  EXPECT_EQ(read_le<double>(bytes, p + 8), w(0, 1));
  EXPECT_EQ(read_le<double>(bytes, p + 8 * cols), w(1, 0));
}

TEST(Checkpoint, EncodingIsDeterministic) {
  EXPECT_EQ(encode_checkpoint(init_model(small_arch(), 6), {}), encode_checkpoint(init_model(small_arch(), 6), {}));
}

TEST(Checkpoint, RejectsCorruptInput) {
  const std::string good = encode_checkpoint(init_model(small_arch(), 7), {});
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  EXPECT_THROW(decode_checkpoint(good.substr(0, good.size() - 3)), FormatError);
  EXPECT_THROW(decode_checkpoint(good + "x"), FormatError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "gpd_checkpoint_test.ckpt";
  const VelocityModel m = init_model(small_arch(), 8);
  save_checkpoint(path, m, {16, 1, 2});
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.model.param_hash(), m.param_hash());
  EXPECT_EQ(back.meta.stage, 2);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), Error);
}

}  // namespace
}  // namespace gpd
