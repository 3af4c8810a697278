// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "artflow/config.hpp"
#include "artflow/nn/autograd.hpp"
#include "artflow/nn/ops.hpp"
#include "artflow/rng.hpp"

namespace artflow::nn {

/// Ordered collection of parameters belonging to one network component.
template <typename T>
class ParamSet {
 public:
  Parameter<T>& add(std::string name, Tensor<T> init) {
    params_.emplace_back(std::move(name), std::move(init));
    return params_.back();
  }
  void append(const ParamSet& other) {
    params_.insert(params_.end(), other.params_.begin(), other.params_.end());
  }

  std::vector<Parameter<T>>& items() { return params_; }
  const std::vector<Parameter<T>>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }

  void set_trainable(bool on) {
    for (auto& p : params_) p.node->requires_grad = on;
  }
  void zero_grad() {
    for (auto& p : params_) p.node->zero_grad();
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value().size();
    return n;
  }
  /// FNV-1a over raw parameter bytes; equal iff every value is bitwise equal.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) h = fnv1a(p.value().data(), p.value().size() * sizeof(T), h);
    return h;
  }

 private:
  std::vector<Parameter<T>> params_;
};

/// Restores the trainable flag of a parameter set on scope exit.
template <typename T>
class FreezeGuard {
 public:
  explicit FreezeGuard(const ParamSet<T>& set) : set_(set) {
    for (const auto& p : set_.items()) {
      saved_.push_back(p.node->requires_grad);
      p.node->requires_grad = false;
    }
  }
  ~FreezeGuard() {
    for (std::size_t i = 0; i < saved_.size(); ++i) set_.items()[i].node->requires_grad = saved_[i];
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  const ParamSet<T>& set_;
  std::vector<bool> saved_;
};

template <typename T>
Tensor<T> he_normal(std::vector<int> shape, int fan_in, Rng& rng, double gain = 1.0) {
  Tensor<T> t(std::move(shape));
  const double std = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.values()) v = static_cast<T>(std * rng.normal());
  return t;
}

template <typename T>
struct Conv2d {
  Parameter<T> weight;
  Parameter<T> bias;
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(ParamSet<T>& set, const std::string& name, int cin, int cout, int kernel, int stride_,
         int pad_, Rng& rng, double gain = 1.0)
      : stride(stride_), pad(pad_) {
    weight = set.add(name + ".weight",
                     he_normal<T>({cout, cin, kernel, kernel}, cin * kernel * kernel, rng, gain));
    bias = set.add(name + ".bias", Tensor<T>({cout}));
  }

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight.var(), bias.var(), stride, pad); }
};

template <typename T>
struct Linear {
  Parameter<T> weight;
  Parameter<T> bias;

  Linear() = default;
  Linear(ParamSet<T>& set, const std::string& name, int in, int out, Rng& rng, double gain = 1.0) {
    weight = set.add(name + ".weight", he_normal<T>({out, in}, in, rng, gain));
    bias = set.add(name + ".bias", Tensor<T>({out}));
  }

  Var<T> operator()(const Var<T>& x) const { return linear(x, weight.var(), bias.var()); }
};

}  // namespace artflow::nn
