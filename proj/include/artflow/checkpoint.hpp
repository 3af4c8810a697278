// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "artflow/nn/adam.hpp"
#include "artflow/nn/layers.hpp"

namespace artflow {

struct TensorRecord {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

/// On-disk network state: a JSON header (kind, stage, config hash,
/// iteration, tensor table) followed by little-endian float64 payloads.
struct Checkpoint {
  std::string kind;
  int stage_index = 0;
  std::uint64_t config_hash = 0;
  std::int64_t iteration = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
};

class checkpoint_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Reads and checks kind, stage and config hash; throws checkpoint_error on mismatch.
Checkpoint read_checkpoint(const std::filesystem::path& path, const std::string& kind, int stage_index,
                           std::uint64_t expected_hash);

template <typename T>
void export_params(const nn::ParamSet<T>& set, std::vector<TensorRecord>& out) {
  for (const auto& p : set.items()) {
    const auto& v = p.value();
    out.push_back({p.name, v.shape(), std::vector<double>(v.values().begin(), v.values().end())});
  }
}

template <typename T>
void import_params(nn::ParamSet<T>& set, const Checkpoint& ckpt) {
  for (auto& p : set.items()) {
    const TensorRecord* rec = ckpt.find(p.name);
    if (!rec) throw checkpoint_error("checkpoint is missing tensor " + p.name);
    if (rec->shape != p.value().shape()) throw checkpoint_error("checkpoint tensor " + p.name + " has wrong shape");
    for (std::size_t i = 0; i < rec->data.size(); ++i) p.value()[i] = static_cast<T>(rec->data[i]);
  }
}

template <typename T>
void export_adam(const nn::Adam<T>& opt, const std::string& prefix, std::vector<TensorRecord>& out) {
  out.push_back({prefix + ".t", {1}, {static_cast<double>(opt.steps())}});
  for (std::size_t k = 0; k < opt.first_moments().size(); ++k) {
    const int n = static_cast<int>(opt.first_moments()[k].size());
    out.push_back({prefix + ".m." + std::to_string(k), {n}, opt.first_moments()[k]});
    out.push_back({prefix + ".v." + std::to_string(k), {n}, opt.second_moments()[k]});
  }
}

template <typename T>
void import_adam(nn::Adam<T>& opt, const std::string& prefix, const Checkpoint& ckpt) {
  const TensorRecord* t = ckpt.find(prefix + ".t");
  if (!t) throw checkpoint_error("checkpoint is missing optimizer state " + prefix);
  std::vector<std::vector<double>> m, v;
  for (std::size_t k = 0; k < opt.first_moments().size(); ++k) {
    const TensorRecord* mk = ckpt.find(prefix + ".m." + std::to_string(k));
    const TensorRecord* vk = ckpt.find(prefix + ".v." + std::to_string(k));
    if (!mk || !vk) throw checkpoint_error("checkpoint optimizer state " + prefix + " incomplete");
    m.push_back(mk->data);
    v.push_back(vk->data);
  }
  opt.restore(static_cast<std::int64_t>(t->data.at(0)), std::move(m), std::move(v));
}

}  // namespace artflow
