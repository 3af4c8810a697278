// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "artflow/adain_optimization.hpp"
#include "artflow/nn/adam.hpp"

namespace artflow {

/// (x_i, x_{i+1}, x'_i): an aligned pair plus an unrelated same-stage image
/// standing in for a user edit.
struct L2RTriple {
  StageImage x;
  StageImage x_next;
  StageImage x_edit;
};

struct L2RTrainState {
  RegularizerWeights reg;
  int outer_step = 0;
  std::vector<std::pair<double, double>> loss_history;  // (L_Ada part, L_GAN part)
  std::vector<int> skipped_steps;
  nn::VectorAdam optimizer;

  static L2RTrainState start(int stage, int adain_channels, const HyperParams& hyper);
};

struct L2ROptions {
  int warmup_steps = 5;
  std::string optimizer = "adam";  // "adam" or "sgd"

  static L2ROptions from(const RuntimeOptions& o) { return {o.l2r_warmup_steps, o.l2r_optimizer}; }
};

struct MetaGradient {
  double loss = 0.0;
  double ada_part = 0.0;
  double gan_part = 0.0;
  std::vector<double> grad_w;
};

/// The regularizer's outer objective for one triple:
///   L2R(w) = L_Ada(G(x, base + d~), x_next) + lambda_gan * L_GAN(G(x_edit, base + d~)),
///   d~ = d0 - alpha * (grad L_Ada(d0) + w * d0),
/// with base encoded from x_next and G, D frozen.
template <typename T>
class L2RObjective {
 public:
  L2RObjective(const GenerationNet<T>& net, const L2RTriple& triple, const HyperParams& hyper,
               const FeatureExtractor<T>& features);

  const std::vector<double>& base() const { return base_; }
  /// d0 after `steps` plain (non-differentiated) decayed steps from zero.
  std::vector<double> warm_start(std::span<const double> w, int steps) const;
  MetaGradient evaluate(std::span<const double> delta_start, std::span<const double> w, bool need_grad) const;

 private:
  const GenerationNet<T>& net_;
  HyperParams hyper_;
  const FeatureExtractor<T>& features_;
  std::vector<double> base_;
  AdaINObjective<T> inner_;
  Var<T> x_;
  Var<T> x_next_;
  Var<T> x_edit_;
};

/// One meta-update of w; never touches network parameters.
template <typename T>
void l2r_train_step(const GenerationNet<T>& net, L2RTrainState& state, const L2RTriple& triple,
                    const HyperParams& hyper, const FeatureExtractor<T>& features, const L2ROptions& options = {});

/// Draws the triple used at outer step `step` from examples (aligned stages 1..N).
L2RTriple sample_l2r_triple(std::span<const StagedExample> examples, int stage_index, std::uint64_t seed, int step);

using L2RProgress = std::function<void(const L2RTrainState&)>;

/// Runs T_reg outer steps (continuing from `state` when resuming).
template <typename T>
RegularizerWeights train_regularizer(const GenerationNet<T>& net, std::span<const StagedExample> examples,
                                     const HyperParams& hyper, std::uint64_t seed,
                                     const FeatureExtractor<T>& features, const L2ROptions& options = {},
                                     L2RTrainState* state = nullptr, const L2RProgress& progress = {});

}  // namespace artflow
