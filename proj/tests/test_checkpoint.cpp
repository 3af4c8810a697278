// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/models.hpp"
#include "artflow/training.hpp"

using namespace artflow;
namespace fs = std::filesystem;

TEST_CASE("checkpoint file roundtrip") {
  const auto dir = testing::temp_dir("ckpt_roundtrip");
  Checkpoint c;
  c.kind = "generation";
  c.stage_index = 2;
  c.config_hash = 0xabcdef12345ULL;
  c.iteration = 77;
  c.meta = {{"seed", 5}};
  c.tensors = {{"a", {2, 2}, {1.0, -2.5, 3.25, 1e-300}}, {"b", {1}, {0.1}}};
  write_checkpoint(dir / "c.ckpt", c);
  const Checkpoint back = read_checkpoint(dir / "c.ckpt", "generation", 2, c.config_hash);
  CHECK(back.iteration == 77);
  CHECK(back.meta["seed"] == 5);
  REQUIRE(back.find("a"));
  CHECK(back.find("a")->data == c.tensors[0].data);
  CHECK(back.find("a")->shape == std::vector<int>{2, 2});
  CHECK(back.find("zzz") == nullptr);

  CHECK_THROWS_AS(read_checkpoint(dir / "c.ckpt", "inference", 2, c.config_hash), checkpoint_error);
  CHECK_THROWS_AS(read_checkpoint(dir / "c.ckpt", "generation", 1, c.config_hash), checkpoint_error);
  try {
    read_checkpoint(dir / "c.ckpt", "generation", 2, 1);
    FAIL("expected checkpoint_error");
  } catch (const checkpoint_error& e) {
    CHECK(std::string(e.what()).find(hash_hex(c.config_hash)) != std::string::npos);
  }

  c.tensors[1].shape = {3};
  CHECK_THROWS_AS(write_checkpoint(dir / "bad.ckpt", c), checkpoint_error);
}

TEST_CASE("corrupt and truncated files are rejected") {
  const auto dir = testing::temp_dir("ckpt_corrupt");
  Checkpoint c;
  c.kind = "inference";
  c.stage_index = 1;
  c.tensors = {{"w", {64}, std::vector<double>(64, 0.5)}};
  write_checkpoint(dir / "c.ckpt", c);
  const auto size = fs::file_size(dir / "c.ckpt");
  fs::copy_file(dir / "c.ckpt", dir / "t.ckpt");
  fs::resize_file(dir / "t.ckpt", size - 100);
  CHECK_THROWS_AS(read_checkpoint(dir / "t.ckpt"), checkpoint_error);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint at all";
  CHECK_THROWS_AS(read_checkpoint(dir / "junk.ckpt"), checkpoint_error);
  CHECK_THROWS_AS(read_checkpoint(dir / "absent.ckpt"), checkpoint_error);
}

TEST_CASE("network and optimizer state survive export and import") {
  WorkflowConfig cfg = testing::tiny_config();
  GenerationNet<float> trained(cfg, 1, 3);
  GenerationTrainer<float> trainer(trained, cfg.hyper);
  std::vector<StageImage> xs{testing::random_image(1, 16, 16, 1), testing::random_image(1, 16, 16, 2)};
  std::vector<StageImage> ys{testing::random_image(2, 16, 16, 3), testing::random_image(2, 16, 16, 4)};
  Rng rng(1);
  trainer.step(xs, ys, rng, nullptr);

  Checkpoint c;
  export_params(trained.encoder_params(), c.tensors);
  export_params(trained.generator_params(), c.tensors);
  export_params(trained.discriminator_params(), c.tensors);
  export_adam(trainer.eg_optimizer(), "opt.eg", c.tensors);
  export_adam(trainer.d_optimizer(), "opt.d", c.tensors);

  GenerationNet<float> fresh(cfg, 1, 99);
  CHECK(fresh.checksum() != trained.checksum());
  for (auto* g : fresh.groups()) import_params(*g, c);
  CHECK(fresh.checksum() == trained.checksum());
  GenerationTrainer<float> resumed(fresh, cfg.hyper);
  import_adam(resumed.eg_optimizer(), "opt.eg", c);
  import_adam(resumed.d_optimizer(), "opt.d", c);
  CHECK(resumed.eg_optimizer().steps() == 1);
  CHECK(resumed.eg_optimizer().first_moments() == trainer.eg_optimizer().first_moments());

  Rng r1(2), r2(2);
  trainer.step(xs, ys, r1, nullptr);
  resumed.step(xs, ys, r2, nullptr);
  CHECK(fresh.checksum() == trained.checksum());
  CHECK_THROWS_AS(import_adam(resumed.eg_optimizer(), "opt.missing", c), checkpoint_error);

  Checkpoint partial;
  export_params(trained.encoder_params(), partial.tensors);
  CHECK_THROWS_AS(import_params(fresh.generator_params(), partial), checkpoint_error);
}

TEST_CASE("model bundle loads what was saved") {
  const auto dir = testing::temp_dir("bundle");
  WorkflowConfig cfg = testing::tiny_config();
  const ModelBundle original = ModelBundle::initialize(cfg, 12);
  save_config(cfg, dir / "config.json");
  for (int s = 1; s < 3; ++s) {
    save_generation(generation_checkpoint_path(dir, s), original.gen[s - 1], original.config_hash, 10, {{"seed", 12}});
    save_inference(inference_checkpoint_path(dir, s), original.inf[s - 1], original.config_hash, 10);
  }
  save_regularizer(regularizer_checkpoint_path(dir, 2), RegularizerWeights::constant(2, cfg.adain_channels, 0.3),
                   original.config_hash, 5);
  const ModelBundle loaded = ModelBundle::load(dir);
  CHECK(loaded.seed == 12);
  CHECK(loaded.source == dir);
  for (int k = 0; k < 2; ++k) {
    CHECK(loaded.gen[k].checksum() == original.gen[k].checksum());
    CHECK(loaded.inf[k].checksum() == original.inf[k].checksum());
  }
  CHECK_FALSE(loaded.regs[0].has_value());
  REQUIRE(loaded.regs[1].has_value());
  CHECK(loaded.regs[1]->w[3] == 0.3);
  CHECK_FALSE(loaded.has_learned_regularizers());

  // A different architecture hash refuses the checkpoints.
  cfg.latent_dim = 6;
  save_config(cfg, dir / "config.json");
  CHECK_THROWS_AS(ModelBundle::load(dir), checkpoint_error);
  fs::remove(dir / "config.json");
  CHECK_THROWS_AS(ModelBundle::load(dir), checkpoint_error);
}
