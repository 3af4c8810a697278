// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/dataset.hpp"
#include "artflow/evaluation.hpp"

using namespace artflow;

namespace {

std::vector<StageImage> noisy(const std::vector<StageImage>& base, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<StageImage> out = base;
  for (auto& img : out) {
    for (float& v : img.pixels.values()) v = static_cast<float>(std::clamp(v + sigma * rng.normal(), -1.0, 1.0));
  }
  return out;
}

}  // namespace

TEST_CASE("l1 error is measured on the unit scale") {
  const StageImage black(3, 3, 4, 4, -1.0f), white(3, 3, 4, 4, 1.0f), mid(3, 3, 4, 4, 0.0f);
  CHECK(l1_error(black, white) == doctest::Approx(1.0));
  CHECK(l1_error(white, white) == 0.0);
  CHECK(l1_error(mid, StageImage(3, 3, 4, 4, 0.5f)) == doctest::Approx(0.25));
  CHECK_THROWS(l1_error(mid, StageImage(3, 3, 4, 5, 0.0f)));
}

TEST_CASE("Frechet distance closed forms") {
  Eigen::VectorXd m1(1), m2(1);
  Eigen::MatrixXd c1(1, 1), c2(1, 1);
  m1 << 0.0;
  m2 << 1.0;
  c1 << 4.0;
  c2 << 9.0;
  CHECK(frechet_distance(m1, c1, m2, c2) == doctest::Approx(2.0));
  CHECK(frechet_distance(m2, c2, m1, c1) == doctest::Approx(2.0));

  Eigen::VectorXd a(3), b(3);
  a << 1.0, 2.0, 3.0;
  b << 0.0, 2.0, 5.0;
  Eigen::MatrixXd da = Eigen::Vector3d(1.0, 4.0, 0.25).asDiagonal();
  Eigen::MatrixXd db = Eigen::Vector3d(9.0, 1.0, 0.25).asDiagonal();
  const double expected = 1.0 + 4.0 + (1.0 - 3.0) * (1.0 - 3.0) + (2.0 - 1.0) * (2.0 - 1.0);
  CHECK(frechet_distance(a, da, b, db) == doctest::Approx(expected));

  Rng rng(3);
  Eigen::MatrixXd x(6, 3), y(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal(), y(i, j) = rng.normal();
  const Eigen::MatrixXd s1 = x.transpose() * x, s2 = y.transpose() * y;
  CHECK(frechet_distance(a, s1, b, s2) == doctest::Approx(frechet_distance(b, s2, a, s1)).epsilon(1e-9));
  CHECK(frechet_distance(a, s1, a, s1) == doctest::Approx(0.0).scale(1.0));

  Eigen::MatrixXd asym = s1;
  asym(0, 1) += 1.0;
  CHECK_THROWS(frechet_distance(a, asym, b, s2));

  const Eigen::MatrixXd r = sqrtm_psd(s1);
  CHECK((r * r - s1).norm() < 1e-9);
}

TEST_CASE("Gaussian fit uses the unbiased covariance") {
  const auto m = fit_gaussian({{1.0, 0.0}, {3.0, 2.0}, {5.0, 1.0}});
  CHECK(m.mean(0) == doctest::Approx(3.0));
  CHECK(m.mean(1) == doctest::Approx(1.0));
  CHECK(m.cov(0, 0) == doctest::Approx(4.0));
  CHECK(m.cov(1, 1) == doctest::Approx(1.0));
  CHECK(m.cov(0, 1) == doctest::Approx(1.0));
  CHECK_THROWS(fit_gaussian({{1.0}}));
}

TEST_CASE("FID is near zero for a set against itself and grows with noise") {
  WorkflowConfig cfg = testing::tiny_config(32);
  const auto examples = make_synthetic_workflow_dataset(24, cfg, 5);
  std::vector<StageImage> art;
  for (const auto& ex : examples) art.push_back(ex.images.back());
  const auto fid_features = default_fid_features<float>(3);
  const std::span<const StageImage> real(art);
  const double self = fid_score(real, real, *fid_features);
  double prev = 0.0;
  for (double sigma : {0.1, 0.3, 0.6}) {
    const auto set = noisy(art, sigma, 8);
    const double f = fid_score(std::span<const StageImage>(set), real, *fid_features);
    CHECK(f > prev);
    if (prev == 0.0) CHECK(self < 1e-3 * f);
    prev = f;
  }
}

TEST_CASE("eval modes parse") {
  CHECK(EvalMode::parse("none").method == "None");
  CHECK(EvalMode::parse("z").method == "z");
  const auto lr = EvalMode::parse("adain-lr");
  CHECK(lr.method == "AdaIN");
  CHECK(lr.w_mode == "LR");
  const auto w = EvalMode::parse("adain-w0.01");
  CHECK(w.w_mode == "0.01");
  CHECK(w.w_value == doctest::Approx(0.01));
  CHECK(EvalMode::parse("adain").w_value == 0.0);
  CHECK_THROWS(EvalMode::parse("adain-w-1"));
  CHECK_THROWS(EvalMode::parse("adain-wabc"));
  CHECK_THROWS(EvalMode::parse("random"));
}

TEST_CASE("eval csv roundtrip") {
  const auto dir = testing::temp_dir("eval_csv");
  std::vector<EvalReport> rows(2);
  rows[0] = {"reconstruction", "AdaIN", "LR", 0.123456789, 4.5, 0.0, 10, 7, {}, {}};
  rows[1] = {"reconstruction", "None", "0", 0.3, 9.25, 1.5, 10, 7, {}, {}};
  write_eval_csv(dir / "r.csv", rows);
  const auto back = read_eval_csv(dir / "r.csv", "reconstruction");
  REQUIRE(back.size() == 2);
  CHECK(back[0].method == "AdaIN");
  CHECK(back[0].w_mode == "LR");
  CHECK(back[0].l1 == rows[0].l1);
  CHECK(back[1].fid_std == 1.5);
  CHECK(back[1].n == 10);
  CHECK(back[1].seed == 7);
}

TEST_CASE("latent baseline and modes on an untrained bundle") {
  WorkflowConfig cfg = testing::tiny_config();
  cfg.hyper.T = 4;
  const ModelBundle models = ModelBundle::initialize(cfg, 3);
  const auto perceptual = default_perceptual_features<float>(3);
  const StageImage art = testing::random_image(3, 16, 16, 1);
  const auto inferred = infer_all_stages(models.inf, art);

  HyperParams still = cfg.hyper;
  still.alpha = 0.0;
  const OptState z0 = z_optimization_baseline(models.gen[0], inferred[0], inferred[1], still, *perceptual);
  CHECK(z0.latent->values == encode_latent(models.gen[0], inferred[1]).values);
  CHECK(z0.loss_trace.size() == 5);
  const OptState z1 = z_optimization_baseline(models.gen[0], inferred[0], inferred[1], cfg.hyper, *perceptual);
  CHECK(z1.loss_trace.back() <= z1.loss_trace.front());
  for (double d : z1.ada.delta) CHECK(d == 0.0);

  const Reconstruction none = reconstruct_with_mode(models, inferred, EvalMode::parse("none"), cfg.hyper, *perceptual);
  for (const auto& s : none.states) {
    CHECK(s.loss_trace.size() == 1);
    for (double d : s.ada.delta) CHECK(d == 0.0);
  }
  CHECK(identical(none.images[2], generate_next(models.gen[1], none.images[1],
                                                latent_to_adain(models.gen[1], encode_latent(models.gen[1], art)))));
  const Reconstruction adain =
      reconstruct_with_mode(models, inferred, EvalMode::parse("adain-w0.5"), cfg.hyper, *perceptual);
  CHECK(adain.states[1].reg_weights->w[0] == 0.5);
  CHECK_THROWS(reconstruct_with_mode(models, inferred, EvalMode::parse("adain-lr"), cfg.hyper, *perceptual));
}

TEST_CASE("resampling a stage leaves earlier stages alone") {
  WorkflowConfig cfg = testing::tiny_config();
  const ModelBundle models = ModelBundle::initialize(cfg, 3);
  const auto images = infer_all_stages(models.inf, testing::random_image(3, 16, 16, 4));
  std::vector<AdaINParams> params;
  for (int k = 0; k < 2; ++k) {
    params.push_back(latent_to_adain(models.gen[k], encode_latent(models.gen[k], images[k + 1])));
    params.back().delta.assign(params.back().base.size(), 0.01);
  }
  auto p = params;
  const auto out = resample_stage(models, images, p, 2, sample_latent(5, 2, cfg), true);
  CHECK(identical(out[0], images[0]));
  CHECK(identical(out[1], images[1]));
  CHECK_FALSE(identical(out[2], images[2]));
  CHECK(p[0].base == params[0].base);
  CHECK(p[1].delta == params[1].delta);
  CHECK(p[1].base != params[1].base);

  auto q = params;
  resample_stage(models, images, q, 1, sample_latent(5, 1, cfg), false);
  CHECK(q[0].delta == std::vector<double>(q[0].base.size(), 0.0));
  CHECK_THROWS_AS(resample_stage(models, images, q, 3, sample_latent(5, 2, cfg), true), stage_error);
}

TEST_CASE("eval suite reports both groups per mode") {
  WorkflowConfig cfg = testing::tiny_config();
  cfg.hyper.T = 2;
  const ModelBundle models = ModelBundle::initialize(cfg, 3);
  const auto test = make_synthetic_workflow_dataset(3, cfg, 6);
  EvalOptions opts;
  opts.seed = 4;
  opts.trials = 2;
  opts.reconstructions_dir = testing::temp_dir("eval_suite");
  const auto modes = std::vector<EvalMode>{EvalMode::parse("none"), EvalMode::parse("adain")};
  const auto rows = run_eval_suite(models, std::span<const StagedExample>(test), modes, cfg.hyper, opts);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].group == "reconstruction");
  CHECK(rows[3].group == "editing");
  CHECK(rows[3].trial_fids.size() == 2);
  CHECK(rows[0].per_image_l1.size() == 3);
  CHECK(std::filesystem::exists(opts.reconstructions_dir / "adain" / (test[0].id + ".png")));
  const auto again = run_eval_suite(models, std::span<const StagedExample>(test), modes, cfg.hyper, opts);
  CHECK(again[2].fid_mean == rows[2].fid_mean);
}
