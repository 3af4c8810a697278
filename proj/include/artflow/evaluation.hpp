// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "artflow/adain_optimization.hpp"
#include "artflow/models.hpp"

namespace artflow {

/// Mean absolute pixel difference on the [0, 1] scale (half the [-1, 1] error).
double l1_error(const StageImage& a, const StageImage& b);

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased (n - 1)
};

GaussianMoments fit_gaussian(const std::vector<std::vector<double>>& rows);

/// Symmetric PSD square root by eigendecomposition; negative eigenvalues clip to 0.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a);

/// |mu1 - mu2|^2 + tr(cov1 + cov2 - 2 (cov1 cov2)^(1/2)). The trace of the
/// square root is taken as tr(sqrt(S1 cov2 S1)) with S1 = sqrt(cov1), which
/// has the same eigenvalues and stays symmetric. Throws on non-symmetric input.
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& cov2);

double fid_score(std::span<const StageImage> set_a, std::span<const StageImage> set_b,
                 const FeatureExtractor<float>& features);

/// The AdaIN optimization loop applied to the latent code instead of the increment.
template <typename T>
OptState z_optimization_baseline(const GenerationNet<T>& net, const StageImage& input_image,
                                 const StageImage& reference, const HyperParams& hyper,
                                 const FeatureExtractor<T>& features);

/// A reconstruction mode: "none", "z", "adain", "adain-w<value>" or "adain-lr".
struct EvalMode {
  std::string name;
  std::string method;  // None | z | AdaIN
  std::string w_mode;  // 0 | <value> | LR
  double w_value = 0.0;

  static EvalMode parse(const std::string& name);
};

/// Sequential reconstruction under a mode. For "none" the deltas stay zero.
Reconstruction reconstruct_with_mode(const ModelBundle& models, const std::vector<StageImage>& inferred,
                                     const EvalMode& mode, const HyperParams& hyper,
                                     const FeatureExtractor<float>& features);

/// Re-samples z at `stage` and regenerates stages stage+1..N, keeping (or
/// zeroing) that stage's optimized delta and every other stage's parameters.
std::vector<StageImage> resample_stage(const ModelBundle& models, const std::vector<StageImage>& images,
                                       std::vector<AdaINParams>& params, int stage, const LatentCode& z,
                                       bool keep_delta);

struct EvalReport {
  std::string group;  // "reconstruction" or "editing"
  std::string method;
  std::string w_mode;
  double l1 = 0.0;
  double fid_mean = 0.0;
  double fid_std = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_image_l1;
  std::vector<double> trial_fids;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  int trials = 5;
  std::vector<StageImage> real_images;  // FID reference set; defaults to the test artworks
  std::filesystem::path reconstructions_dir;  // when set, final images are written per mode
  std::function<void(const std::string&)> log;
};

/// For every mode: reconstruct each test artwork (inferring its stages
/// first), report mean l1 and reconstruction FID, then run `trials` editing
/// trials that re-sample z at one random stage per image and report the
/// edited-set FID as mean and sample standard deviation.
std::vector<EvalReport> run_eval_suite(const ModelBundle& models, std::span<const StagedExample> test,
                                       const std::vector<EvalMode>& modes, const HyperParams& hyper,
                                       const EvalOptions& options);

/// CSV with columns method,w_mode,l1,fid_mean,fid_std,n,seed.
void write_eval_csv(const std::filesystem::path& path, std::span<const EvalReport> rows);
std::vector<EvalReport> read_eval_csv(const std::filesystem::path& path, const std::string& group);

}  // namespace artflow
