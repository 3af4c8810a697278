// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "artflow/nn/autograd.hpp"
#include "artflow/nn/layers.hpp"

namespace artflow::nn {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of parameters. Moment buffers are kept in double
/// so float and double networks follow the same update arithmetic.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter<T>> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
    for (const auto& p : params_) {
      m_.emplace_back(p.value().size(), 0.0);
      v_.emplace_back(p.value().size(), 0.0);
    }
  }
  Adam(const ParamSet<T>& set, AdamOptions opts) : Adam(set.items(), opts) {}

  void zero_grad() {
    for (auto& p : params_) p.node->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      if (p.node->grad.empty()) continue;
      Tensor<T>& w = p.value();
      const Tensor<T>& g = p.node->grad;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * gi;
        v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] = static_cast<T>(static_cast<double>(w[i]) - opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps));
      }
    }
  }

  std::int64_t steps() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

  void restore(std::int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("Adam: state size mismatch");
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k].size() != m_[k].size() || v[k].size() != v_[k].size()) {
        throw std::invalid_argument("Adam: state tensor size mismatch");
      }
    }
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  std::vector<Parameter<T>> params_;
  AdamOptions opts_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Adam on a plain vector (used for the regularizer weights).
class VectorAdam {
 public:
  VectorAdam() = default;
  VectorAdam(std::size_t n, AdamOptions opts) : opts_(opts), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::vector<double>& x, const std::vector<double>& g) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g[i];
      v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      x[i] -= opts_.lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + opts_.eps);
    }
  }

  std::int64_t steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(std::int64_t t, std::vector<double> m, std::vector<double> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("VectorAdam: state size mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  AdamOptions opts_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace artflow::nn
