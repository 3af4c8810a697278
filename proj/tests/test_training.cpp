// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/dataset.hpp"
#include "artflow/training.hpp"

using namespace artflow;

namespace {

std::vector<StageImage> images(int stage, int count, std::uint64_t seed) {
  std::vector<StageImage> out;
  for (int i = 0; i < count; ++i) out.push_back(testing::random_image(stage, 16, 16, seed + i));
  return out;
}

}  // namespace

TEST_CASE("loss breakdown arithmetic") {
  LossBreakdown b;
  b.terms = {{"a", 2.0, 1.0}, {"b", 3.0, 10.0}};
  b.extras = {{"disc", 7.0, 1.0}};
  b.total = b.weighted_sum();
  CHECK(b.total == doctest::Approx(32.0));
  CHECK(b.value("b") == 3.0);
  CHECK(b.value("disc") == 7.0);
  CHECK(b.finite());
  b.extras[0].value = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(b.finite());
  CHECK(b.describe().find("disc") != std::string::npos);
}

TEST_CASE("bicycle loss terms are finite and weighted") {
  WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<float> net(cfg, 1, 3);
  const auto xs = images(1, 2, 10), ys = images(2, 2, 20);
  Rng rng(4);
  const auto z = draw_prior(rng, 2, 1, cfg.latent_dim);
  CHECK(z.size() == 2);
  CHECK(z[1].stage_index == 1);
  const LossBreakdown b = bicycle_loss(net, std::span<const StageImage>(xs), std::span<const StageImage>(ys),
                                       std::span<const LatentCode>(z), rng, cfg.hyper);
  CHECK(b.finite());
  for (const char* name : {"gan_vae", "gan_lr", "l1", "latent", "kl"}) CHECK(std::isfinite(b.value(name)));
  CHECK(b.value("l1") >= 0.0);
  CHECK(b.value("kl") >= 0.0);
  CHECK(b.total == doctest::Approx(b.weighted_sum()).epsilon(1e-5));
}

TEST_CASE("cycle loss vanishes only for a perfect inverse") {
  WorkflowConfig cfg = testing::tiny_config();
  const GenerationNet<float> gen(cfg, 1, 3);
  const InferenceNet<float> inf(cfg, 1, 3);
  const StageImage x = testing::random_image(1, 16, 16, 2);
  const LatentCode z{1, {0.1, 0.2, -0.3, 0.4}};
  const double c = cycle_loss(gen, inf, x, z);
  CHECK(c > 0.0);
  CHECK(c == cycle_loss(gen, inf, x, z));
  const StageImage back = infer_prev(inf, generate_next(gen, x, latent_to_adain(gen, z)));
  double expected = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) expected += std::abs(back.pixels[i] - x.pixels[i]);
  CHECK(c == doctest::Approx(expected / static_cast<double>(x.pixels.size())).epsilon(1e-4));
}

TEST_CASE("generation trainer fits a fixed batch") {
  WorkflowConfig cfg = testing::tiny_config();
  cfg.hyper.lr = 2e-3;
  GenerationNet<float> net(cfg, 1, 3);
  const auto xs = images(1, 2, 30), ys = images(2, 2, 40);
  GenerationTrainer<float> trainer(net, cfg.hyper);
  Rng rng(1);
  const double first = trainer.step(xs, ys, rng, nullptr).value("l1");
  double last = first;
  for (int i = 0; i < 40; ++i) last = trainer.step(xs, ys, rng, nullptr).value("l1");
  CHECK(last < first);
  CHECK(trainer.eg_optimizer().steps() == 41);
  CHECK(trainer.d_optimizer().steps() == 41);
}

TEST_CASE("cycle term only appears with an inference network and lambda_c > 0") {
  WorkflowConfig cfg = testing::tiny_config();
  GenerationNet<float> net(cfg, 1, 3);
  const InferenceNet<float> inf(cfg, 1, 3);
  const auto xs = images(1, 2, 30), ys = images(2, 2, 40);
  GenerationTrainer<float> trainer(net, cfg.hyper);
  Rng rng(1);
  const LossBreakdown with = trainer.step(xs, ys, rng, &inf);
  CHECK(with.value("cycle") > 0.0);
  cfg.hyper.lambda_c = 0.0;
  GenerationTrainer<float> off(net, cfg.hyper);
  const LossBreakdown without = off.step(xs, ys, rng, &inf);
  bool has_cycle = false;
  for (const auto& t : without.terms) has_cycle |= t.name == "cycle";
  CHECK_FALSE(has_cycle);
}

TEST_CASE("inference trainer reduces l1 and rejects misaligned pairs") {
  WorkflowConfig cfg = testing::tiny_config();
  cfg.hyper.lr = 2e-3;
  InferenceNet<float> net(cfg, 2, 3);
  const auto xs = images(2, 2, 50), ys = images(3, 2, 60);
  InferenceTrainer<float> trainer(net, cfg.hyper);
  const double first = trainer.step(xs, ys).value("l1");
  double last = first;
  for (int i = 0; i < 40; ++i) last = trainer.step(xs, ys).value("l1");
  CHECK(last < first);
  CHECK_THROWS_AS(trainer.step(ys, xs), stage_error);
}

TEST_CASE("non-finite losses abort the step before any update") {
  WorkflowConfig cfg = testing::tiny_config();
  InferenceNet<float> net(cfg, 1, 3);
  auto xs = images(1, 2, 70);
  const auto ys = images(2, 2, 80);
  xs[0].pixels[3] = std::numeric_limits<float>::quiet_NaN();
  InferenceTrainer<float> trainer(net, cfg.hyper);
  const std::uint64_t before = net.checksum();
  CHECK_THROWS_AS(trainer.step(xs, ys), non_finite_loss);
  CHECK(net.checksum() == before);
  CHECK(trainer.g_optimizer().steps() == 0);

  GenerationNet<float> gen(cfg, 1, 3);
  GenerationTrainer<float> gt(gen, cfg.hyper);
  Rng rng(3);
  auto bad_ys = images(2, 2, 90);
  bad_ys[1].pixels[0] = std::numeric_limits<float>::infinity();
  const std::uint64_t gen_before = gen.checksum();
  try {
    gt.step(images(1, 2, 95), bad_ys, rng, nullptr);
    FAIL("expected non_finite_loss");
  } catch (const non_finite_loss& e) {
    CHECK_FALSE(e.breakdown.finite());
  }
  CHECK(gen.checksum() == gen_before);
}

TEST_CASE("200 generation steps on a small toy set cut the l1 term by 15%") {
  WorkflowConfig cfg = testing::tiny_config();
  cfg.arch = {16, 8, 8, 8};
  cfg.adain_channels = 8;
  cfg.latent_dim = 8;
  cfg.hyper.lr = 1e-3;
  cfg.hyper.batch_size = 4;
  const auto data = make_synthetic_workflow_dataset(16, cfg, 12);
  GenerationNet<float> net(cfg, 1, 3);
  GenerationTrainer<float> trainer(net, cfg.hyper);
  Rng rng(5);
  std::vector<double> l1;
  for (int step = 0; step < 200; ++step) {
    std::vector<StageImage> xs, ys;
    for (int b = 0; b < cfg.hyper.batch_size; ++b) {
      const auto& ex = data[static_cast<std::size_t>(rng.uniform_int(0, 15))];
      xs.push_back(ex.images[0]);
      ys.push_back(ex.images[1]);
    }
    l1.push_back(trainer.step(xs, ys, rng, nullptr).value("l1"));
  }
  const double start = std::accumulate(l1.begin(), l1.begin() + 10, 0.0) / 10.0;
  const double end = std::accumulate(l1.end() - 10, l1.end(), 0.0) / 10.0;
  CHECK(end <= 0.85 * start);
}
