// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artflow/checkpoint.hpp"
#include "artflow/nets.hpp"

namespace artflow {

/// Every network of one workflow plus the learned regularizers, as used at
/// test time. Index k holds stage k+1.
struct ModelBundle {
  WorkflowConfig config;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<GenerationNet<float>> gen;
  std::vector<InferenceNet<float>> inf;
  std::vector<std::optional<RegularizerWeights>> regs;
  std::filesystem::path source;

  int num_stages() const { return config.num_stages; }
  bool has_learned_regularizers() const;
  void freeze();

  /// Freshly initialized networks, no regularizers.
  static ModelBundle initialize(const WorkflowConfig& cfg, std::uint64_t seed);
  /// Loads `dir/config.json` and every stage checkpoint; regularizers are
  /// optional. Throws checkpoint_error on any mismatch.
  static ModelBundle load(const std::filesystem::path& dir);
};

std::filesystem::path generation_checkpoint_path(const std::filesystem::path& dir, int stage);
std::filesystem::path inference_checkpoint_path(const std::filesystem::path& dir, int stage);
std::filesystem::path regularizer_checkpoint_path(const std::filesystem::path& dir, int stage);

/// Network-only checkpoints (no optimizer state).
void save_generation(const std::filesystem::path& path, const GenerationNet<float>& net, std::uint64_t hash,
                     std::int64_t iteration, const nlohmann::json& meta = nlohmann::json::object());
void save_inference(const std::filesystem::path& path, const InferenceNet<float>& net, std::uint64_t hash,
                    std::int64_t iteration, const nlohmann::json& meta = nlohmann::json::object());
void save_regularizer(const std::filesystem::path& path, const RegularizerWeights& reg, std::uint64_t hash,
                      std::int64_t iteration, const nlohmann::json& meta = nlohmann::json::object());
RegularizerWeights load_regularizer(const std::filesystem::path& path, int stage, std::uint64_t hash);

}  // namespace artflow
