// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/models.hpp"

namespace artflow {

namespace fs = std::filesystem;

fs::path generation_checkpoint_path(const fs::path& dir, int stage) {
  return dir / ("generation_stage" + std::to_string(stage) + ".ckpt");
}
fs::path inference_checkpoint_path(const fs::path& dir, int stage) {
  return dir / ("inference_stage" + std::to_string(stage) + ".ckpt");
}
fs::path regularizer_checkpoint_path(const fs::path& dir, int stage) {
  return dir / ("regularizer_stage" + std::to_string(stage) + ".ckpt");
}

bool ModelBundle::has_learned_regularizers() const {
  if (regs.empty()) return false;
  for (const auto& r : regs)
    if (!r) return false;
  return true;
}

void ModelBundle::freeze() {
  for (auto& g : gen) g.set_trainable(false);
  for (auto& i : inf) i.set_trainable(false);
}

ModelBundle ModelBundle::initialize(const WorkflowConfig& cfg, std::uint64_t seed) {
  require_valid(cfg);
  ModelBundle b;
  b.config = cfg;
  b.config_hash = artflow::config_hash(cfg);
  b.seed = seed;
  for (int s = 1; s < cfg.num_stages; ++s) {
    b.gen.emplace_back(cfg, s, seed);
    b.inf.emplace_back(cfg, s, seed);
  }
  b.regs.assign(static_cast<std::size_t>(cfg.num_stages - 1), std::nullopt);
  b.freeze();
  return b;
}

ModelBundle ModelBundle::load(const fs::path& dir) {
  const fs::path cfg_path = dir / "config.json";
  if (!fs::exists(cfg_path)) throw checkpoint_error("no config.json in " + dir.string());
  ModelBundle b = initialize(load_config(cfg_path), 0);
  b.source = dir;
  for (int s = 1; s < b.config.num_stages; ++s) {
    const Checkpoint g = read_checkpoint(generation_checkpoint_path(dir, s), "generation", s, b.config_hash);
    for (auto* group : b.gen[s - 1].groups()) import_params(*group, g);
    const Checkpoint i = read_checkpoint(inference_checkpoint_path(dir, s), "inference", s, b.config_hash);
    for (auto* group : b.inf[s - 1].groups()) import_params(*group, i);
    if (fs::exists(regularizer_checkpoint_path(dir, s))) {
      b.regs[s - 1] = load_regularizer(regularizer_checkpoint_path(dir, s), s, b.config_hash);
    }
    b.seed = g.meta.value("seed", b.seed);
  }
  b.freeze();
  return b;
}

void save_generation(const fs::path& path, const GenerationNet<float>& net, std::uint64_t hash,
                     std::int64_t iteration, const nlohmann::json& meta) {
  Checkpoint c;
  c.kind = "generation";
  c.stage_index = net.stage_index();
  c.config_hash = hash;
  c.iteration = iteration;
  c.meta = meta;
  export_params(net.encoder_params(), c.tensors);
  export_params(net.generator_params(), c.tensors);
  export_params(net.discriminator_params(), c.tensors);
  write_checkpoint(path, c);
}

void save_inference(const fs::path& path, const InferenceNet<float>& net, std::uint64_t hash, std::int64_t iteration,
                    const nlohmann::json& meta) {
  Checkpoint c;
  c.kind = "inference";
  c.stage_index = net.stage_index();
  c.config_hash = hash;
  c.iteration = iteration;
  c.meta = meta;
  export_params(net.generator_params(), c.tensors);
  export_params(net.discriminator_params(), c.tensors);
  write_checkpoint(path, c);
}

void save_regularizer(const fs::path& path, const RegularizerWeights& reg, std::uint64_t hash,
                      std::int64_t iteration, const nlohmann::json& meta) {
  Checkpoint c;
  c.kind = "regularizer";
  c.stage_index = reg.stage_index;
  c.config_hash = hash;
  c.iteration = iteration;
  c.meta = meta;
  c.tensors.push_back({"w", {static_cast<int>(reg.w.size())}, reg.w});
  write_checkpoint(path, c);
}

RegularizerWeights load_regularizer(const fs::path& path, int stage, std::uint64_t hash) {
  const Checkpoint c = read_checkpoint(path, "regularizer", stage, hash);
  const TensorRecord* w = c.find("w");
  if (!w) throw checkpoint_error(path.string() + " has no regularizer weights");
  return {stage, w->data};
}

}  // namespace artflow
