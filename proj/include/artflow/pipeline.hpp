// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "json.hpp"
#include "artflow/config.hpp"

namespace artflow {

/// Iterations per training phase. Separate phases count steps per network;
/// regularizer < 0 falls back to hyper.T_reg.
struct PhaseSchedule {
  int inference_separate = 0;
  int inference_joint = 0;
  int generation_separate = 0;
  int generation_joint = 0;
  int regularizer = -1;
  int checkpoint_every = 200;
};

struct ExperimentSpec {
  std::filesystem::path config_path;
  std::filesystem::path dataset_path;
  PhaseSchedule schedule;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  int holdout = 0;  // trailing dataset examples kept out of training
  bool train_regularizers = true;
  bool strict_determinism = false;
  nlohmann::json hyper_overrides = nlohmann::json::object();  // applied on top of the config's hyper block

  /// Relative paths resolve against the spec file's directory.
  static ExperimentSpec load(const std::filesystem::path& path);
};

void to_json(nlohmann::json& j, const PhaseSchedule& s);
void from_json(const nlohmann::json& j, PhaseSchedule& s);
void to_json(nlohmann::json& j, const ExperimentSpec& s);
void from_json(const nlohmann::json& j, ExperimentSpec& s);

struct TrainHooks {
  std::function<void(const std::string&)> log;
  /// Stops (after checkpointing) once this many steps ran in this call; < 0 means no limit.
  long long stop_after_steps = -1;
};

struct TrainSummary {
  std::filesystem::path dir;
  bool completed = false;
  bool resumed = false;
  long long steps_run = 0;
  long long total_steps = 0;
};

/// Inference nets (separate, then joint), generation nets (separate, then
/// joint), then per-stage regularizers. Writes `config.json`,
/// `manifest.json`, `losses.csv` (iteration,loss_name,value) and one
/// checkpoint per network to the output directory, resuming from
/// `progress.json` when present.
TrainSummary train_all(const ExperimentSpec& spec, const TrainHooks& hooks = {});

/// Applies `hyper_overrides` to a config.
WorkflowConfig apply_overrides(WorkflowConfig cfg, const nlohmann::json& hyper_overrides);

}  // namespace artflow
