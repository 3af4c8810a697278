// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace artflow {

struct HyperParams {
  double lambda_c = 1.0;        // cycle consistency
  double lambda_1 = 10.0;       // pixel l1
  double lambda_p = 10.0;       // perceptual
  double lambda_latent = 0.5;   // latent regression
  double lambda_kl = 0.01;      // KL
  double lambda_gan = 1.0;      // realism term of the regularizer objective
  double alpha = 0.1;           // AdaIN optimization step size
  int T = 150;                  // AdaIN optimization iterations
  double eta = 1e-3;            // regularizer learning rate
  int T_reg = 40000;            // regularizer training iterations
  double lr = 2e-4;             // network learning rate
  int batch_size = 8;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
};

/// Widths of the desk-scale networks. The generator's bottleneck width is
/// WorkflowConfig::adain_channels.
struct ArchConfig {
  int mapping_hidden = 128;
  int encoder_channels = 32;
  int discriminator_channels = 32;
  int inference_channels = 32;
};

struct StagingConfig {
  double sketch_threshold = 0.15;  // normalized Sobel magnitude on [0, 1] grayscale
  double slic_compactness = 10.0;
  int slic_iterations = 10;
  int median_kernel = 5;
};

struct RuntimeOptions {
  double teacher_forcing = 0.5;          // joint phases: chance of feeding ground truth
  int l2r_warmup_steps = 5;              // non-differentiated AdaIN steps before the meta step
  std::string l2r_optimizer = "adam";    // "adam" or "sgd"
  std::string alg1_input = "optimized";  // "optimized" or "inferred"
  bool resample_keep_delta = true;
};

struct ImageSize {
  int height = 64;
  int width = 64;
  bool operator==(const ImageSize&) const = default;
};

struct WorkflowConfig {
  int num_stages = 3;
  std::vector<std::string> stage_names = {"sketch", "flat", "detail"};
  ImageSize image_size;
  int channels = 3;
  int latent_dim = 8;
  int adain_channels = 64;
  HyperParams hyper;
  ArchConfig arch;
  StagingConfig staging;
  RuntimeOptions options;

  int adain_dim() const { return 8 * adain_channels; }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> errors;

  void fail(std::string message) {
    ok = false;
    errors.push_back(std::move(message));
  }
  std::string summary() const;
};

ValidationReport validate_config(const WorkflowConfig& cfg);

/// Throws std::invalid_argument listing every violation when invalid.
void require_valid(const WorkflowConfig& cfg);

void to_json(nlohmann::json& j, const HyperParams& h);
void from_json(const nlohmann::json& j, HyperParams& h);
void to_json(nlohmann::json& j, const WorkflowConfig& cfg);
void from_json(const nlohmann::json& j, WorkflowConfig& cfg);

WorkflowConfig load_config(const std::filesystem::path& path);
void save_config(const WorkflowConfig& cfg, const std::filesystem::path& path);

/// Hash of every field that determines network shapes. Checkpoints carry it
/// and refuse to load under a different architecture.
std::uint64_t config_hash(const WorkflowConfig& cfg);
std::string hash_hex(std::uint64_t h);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace artflow
