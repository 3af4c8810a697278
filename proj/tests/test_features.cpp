// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/features.hpp"
#include "artflow/nn/ops.hpp"

using namespace artflow;

TEST_CASE("shipped extractor weights match their seeds") {
  const std::filesystem::path assets = ARTFLOW_ASSETS_DIR;
  REQUIRE(std::filesystem::exists(assets / "perceptual_features.ckpt"));
  REQUIRE(std::filesystem::exists(assets / "fid_features.ckpt"));
  const auto perceptual = RandomConvFeatures<float>::load(assets / "perceptual_features.ckpt");
  const auto fid = RandomConvFeatures<float>::load(assets / "fid_features.ckpt", {1, 2, 3});
  CHECK(perceptual.checksum() == RandomConvFeatures<float>(3, kPerceptualFeatureSeed).checksum());
  CHECK(fid.checksum() == RandomConvFeatures<float>(3, kFidFeatureSeed).checksum());
  CHECK(perceptual.checksum() != fid.checksum());
}

TEST_CASE("save and load preserve the extractor") {
  const auto dir = testing::temp_dir("features");
  const RandomConvFeatures<double> f(1, 77);
  f.save(dir / "f.ckpt");
  CHECK(RandomConvFeatures<double>::load(dir / "f.ckpt").checksum() == f.checksum());
}

TEST_CASE("embeddings pool every selected layer") {
  const auto fid = default_fid_features<float>(3);
  std::vector<StageImage> imgs;
  for (int i = 0; i < 5; ++i) imgs.push_back(testing::random_image(3, 16, 16, i));
  const auto rows = embed_images(*fid, std::span<const StageImage>(imgs), 2);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].size() == 128);
  const auto one = embed_images(*fid, std::span<const StageImage>(imgs).subspan(3, 1));
  for (std::size_t j = 0; j < 128; ++j) CHECK(one[0][j] == doctest::Approx(rows[3][j]).epsilon(1e-5));
  CHECK(default_perceptual_features<float>(3).get() == default_perceptual_features<float>(3).get());
}

TEST_CASE("perceptual distance") {
  const RandomConvFeatures<double> f(3, kPerceptualFeatureSeed);
  const auto a = Var<double>::constant(to_batch<double>(testing::random_image(1, 8, 8, 1)));
  const auto b = Var<double>::constant(to_batch<double>(testing::random_image(1, 8, 8, 2)));
  CHECK(perceptual_distance(a, a, f).value()[0] == 0.0);
  const double ab = perceptual_distance(a, b, f).value()[0];
  CHECK(ab > 0.0);
  CHECK(perceptual_distance(b, a, f).value()[0] == doctest::Approx(ab));
}
