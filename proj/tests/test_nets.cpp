// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/nets.hpp"

using namespace artflow;

TEST_CASE("generation net shapes and stage contracts") {
  const WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<float> net(cfg, 1, 3);
  CHECK(net.adain_dim() == 8 * cfg.adain_channels);
  const StageImage x = testing::random_image(1, 16, 16, 1);
  const StageImage y = testing::random_image(2, 16, 16, 2);

  const LatentCode z = encode_latent(net, y);
  CHECK(z.stage_index == 1);
  CHECK(static_cast<int>(z.values.size()) == cfg.latent_dim);
  CHECK(encode_latent(net, y).values == z.values);
  Rng rng(5);
  CHECK(encode_latent(net, y, &rng).values != z.values);

  const AdaINParams ada = latent_to_adain(net, z);
  CHECK(static_cast<int>(ada.base.size()) == net.adain_dim());
  CHECK(ada.delta == std::vector<double>(ada.base.size(), 0.0));

  const StageImage out = generate_next(net, x, ada);
  CHECK(out.stage_index == 2);
  CHECK(out.same_geometry(x));
  for (float v : out.pixels.values()) CHECK(std::abs(v) <= 1.0f);
  CHECK(identical(generate_next(net, x, ada), out));

  AdaINParams shifted = ada;
  shifted.delta[0] = 0.5;
  CHECK_FALSE(identical(generate_next(net, x, shifted), out));

  CHECK_THROWS_AS(generate_next(net, y, ada), stage_error);
  CHECK_THROWS_AS(encode_latent(net, x), stage_error);
  CHECK_THROWS_AS(GenerationNet<float>(cfg, 3, 1), stage_error);
  AdaINParams short_ada(1, {1.0, 2.0});
  CHECK_THROWS_AS(generate_next(net, x, short_ada), std::invalid_argument);
  LatentCode other = z;
  other.stage_index = 2;
  CHECK_THROWS_AS(latent_to_adain(net, other), stage_error);
}

TEST_CASE("AdaIN mapping starts near identity scales") {
  const WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<float> net(cfg, 1, 3);
  const AdaINParams ada = latent_to_adain(net, LatentCode{1, std::vector<double>(cfg.latent_dim, 0.0)});
  const int c = cfg.adain_channels;
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < c; ++j) {
      CHECK(ada.base[2 * c * k + j] == doctest::Approx(1.0).epsilon(0.2));
    }
  }
}

TEST_CASE("initialization is seeded per network and stage") {
  const WorkflowConfig cfg = testing::tiny_config();
  CHECK(GenerationNet<float>(cfg, 1, 3).checksum() == GenerationNet<float>(cfg, 1, 3).checksum());
  CHECK(GenerationNet<float>(cfg, 1, 3).checksum() != GenerationNet<float>(cfg, 2, 3).checksum());
  CHECK(GenerationNet<float>(cfg, 1, 3).checksum() != GenerationNet<float>(cfg, 1, 4).checksum());
  CHECK(InferenceNet<float>(cfg, 1, 3).checksum() != InferenceNet<float>(cfg, 2, 3).checksum());
}

TEST_CASE("inference chain returns stages 1..N") {
  const WorkflowConfig cfg = testing::tiny_config();
  std::vector<InferenceNet<float>> nets{InferenceNet<float>(cfg, 1, 1), InferenceNet<float>(cfg, 2, 1)};
  const StageImage art = testing::random_image(3, 16, 16, 8);
  const auto stages = infer_all_stages(nets, art);
  REQUIRE(stages.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(stages[k].stage_index == k + 1);
  CHECK(identical(stages[2], art));
  CHECK(identical(stages[1], infer_prev(nets[1], art)));
  CHECK(identical(stages[0], infer_prev(nets[0], stages[1])));
  CHECK_THROWS_AS(infer_all_stages(nets, testing::random_image(2, 16, 16, 8)), stage_error);
  std::swap(nets[0], nets[1]);
  CHECK_THROWS_AS(infer_all_stages(nets, art), std::invalid_argument);
}

TEST_CASE("batched generation matches per-image generation") {
  const WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<double> net(cfg, 2, 9);
  std::vector<StageImage> xs{testing::random_image(2, 16, 16, 1), testing::random_image(2, 16, 16, 2)};
  const auto z = latent_to_adain(net, LatentCode{2, {0.1, -0.2, 0.3, 0.0}});
  const auto batch = net.generate(Var<double>::constant(to_batch<double>(std::span<const StageImage>(xs))),
                                  Var<double>::constant(row_tensor<double>(z.effective())));
  const StageImage second = from_batch(batch.value(), 1, 3);
  const StageImage single = generate_next(net, xs[1], z);
  for (std::size_t i = 0; i < single.pixels.size(); ++i) {
    CHECK(second.pixels[i] == doctest::Approx(single.pixels[i]).epsilon(1e-6));
  }
}

TEST_CASE("discriminator returns one logit map per scale") {
  const WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<float> net(cfg, 1, 3);
  const auto logits = net.discriminate(Var<float>::constant(to_batch<float>(testing::random_image(2, 16, 16, 4))));
  CHECK(logits.size() == 2);
  for (const auto& l : logits) CHECK(l.dim(1) == 1);
}

TEST_CASE("reparameterized codes invert to the recorded noise") {
  const WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<double> net(cfg, 1, 3);
  const StageImage y = testing::random_image(2, 16, 16, 6);
  const auto enc = net.encode(Var<double>::constant(to_batch<double>(y)));
  Rng rng(17), replay(17);
  const LatentCode z = encode_latent(net, y, &rng);
  for (int j = 0; j < cfg.latent_dim; ++j) {
    const double eps = (z.values[j] - enc.mu.value()[j]) / std::exp(0.5 * enc.logvar.value()[j]);
    CHECK(eps == doctest::Approx(replay.normal()).epsilon(1e-9));
  }
}

TEST_CASE("a single AdaIN bias entry changes the output") {
  const WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<float> net(cfg, 1, 3);
  const StageImage x = testing::random_image(1, 16, 16, 1);
  const AdaINParams ada = latent_to_adain(net, LatentCode{1, std::vector<double>(cfg.latent_dim, 0.0)});
  const StageImage ref = generate_next(net, x, ada);
  const int c = cfg.adain_channels;
  for (int layer = 0; layer < 4; ++layer) {
    AdaINParams bumped = ada;
    bumped.delta[2 * c * layer + c] = 0.5;
    CHECK_FALSE(identical(generate_next(net, x, bumped), ref));
  }
}
