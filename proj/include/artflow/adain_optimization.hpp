// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "artflow/features.hpp"
#include "artflow/nets.hpp"

namespace artflow {

/// Result of optimizing one stage's AdaIN increment.
struct OptState {
  int stage_index = 0;
  AdaINParams ada;
  std::vector<double> loss_trace;  // L_Ada before each step plus the final value
  std::optional<RegularizerWeights> reg_weights;
  std::optional<LatentCode> latent;  // the encoded (or optimized) code behind ada.base
  bool failed = false;
  std::string failure;
};

void to_json(nlohmann::json& j, const OptState& s);
void from_json(const nlohmann::json& j, OptState& s);

/// Differentiable objective over a flat parameter vector.
struct Objective {
  virtual ~Objective() = default;
  /// Loss value; fills `grad` (same length as x) when non-null.
  virtual double evaluate(std::span<const double> x, std::vector<double>* grad) const = 0;
};

/// L(d) = 0.5 * |d - target|^2.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(std::vector<double> target) : target_(std::move(target)) {}
  double evaluate(std::span<const double> x, std::vector<double>* grad) const override;

 private:
  std::vector<double> target_;
};

struct DescentResult {
  std::vector<double> x;
  std::vector<double> trace;
  bool failed = false;
  std::string failure;
};

/// delta - alpha * (grad + w * delta), entrywise. Empty `w` means no decay.
std::vector<double> inner_update(std::span<const double> delta, std::span<const double> grad,
                                 std::span<const double> w, double alpha);

/// `iterations` steps of x <- inner_update(x, grad L(x), w, alpha). The trace
/// holds L at every visited point; a non-finite loss or gradient stops the
/// loop and keeps the last finite iterate.
DescentResult gradient_descent(const Objective& f, std::vector<double> x0, double alpha, int iterations,
                               std::span<const double> w = {});

/// l1(candidate, reference) + lambda_p * perceptual distance.
template <typename T>
Var<T> ada_loss(const Var<T>& candidate, const Var<T>& reference, const HyperParams& hyper,
                const FeatureExtractor<T>& features);
double ada_loss(const StageImage& candidate, const StageImage& reference, const HyperParams& hyper,
                const FeatureExtractor<float>& features);

/// L_Ada(G(input, base + delta), reference) as a function of delta, with all
/// network parameters frozen.
template <typename T>
class AdaINObjective final : public Objective {
 public:
  AdaINObjective(const GenerationNet<T>& net, const StageImage& input, const StageImage& reference,
                 std::vector<double> base, const HyperParams& hyper, const FeatureExtractor<T>& features);
  double evaluate(std::span<const double> delta, std::vector<double>* grad) const override;

 private:
  const GenerationNet<T>& net_;
  Var<T> input_;
  Var<T> reference_;
  nn::Tensor<T> base_;
  HyperParams hyper_;
  const FeatureExtractor<T>& features_;
};

/// Same loss as a function of the latent code z (base recomputed from z).
template <typename T>
class LatentObjective final : public Objective {
 public:
  LatentObjective(const GenerationNet<T>& net, const StageImage& input, const StageImage& reference,
                  const HyperParams& hyper, const FeatureExtractor<T>& features);
  double evaluate(std::span<const double> z, std::vector<double>* grad) const override;

 private:
  const GenerationNet<T>& net_;
  Var<T> input_;
  Var<T> reference_;
  HyperParams hyper_;
  const FeatureExtractor<T>& features_;
};

/// AdaIN optimization at one stage: encode the reference, then T decayed gradient
/// steps on delta.
template <typename T>
OptState adain_optimize(const GenerationNet<T>& net, const StageImage& input_image, const StageImage& reference,
                        const HyperParams& hyper, const std::optional<RegularizerWeights>& reg,
                        const FeatureExtractor<T>& features);

struct Reconstruction {
  std::vector<OptState> states;     // stages 1..N-1
  std::vector<StageImage> images;   // stage 1 input followed by generated stages 2..N
};

/// Sequential reconstruction from inferred stages [x_1 .. x_N]. `regs[k]`
/// applies to stage k+1; an empty vector means no decay. With
/// `alg1_input == "inferred"` each stage starts from the inferred image
/// rather than the previous stage's optimized output.
template <typename T>
Reconstruction reconstruct_sequential(const std::vector<GenerationNet<T>>& gen_nets,
                                      const std::vector<StageImage>& inferred, const HyperParams& hyper,
                                      const std::vector<std::optional<RegularizerWeights>>& regs,
                                      const FeatureExtractor<T>& features,
                                      const std::string& alg1_input = "optimized",
                                      const std::function<void(const OptState&)>& on_stage = {});

/// Forward-generates stages 2..N from a stage-1 image and per-stage AdaIN
/// parameters; returns stages 1..N.
template <typename T>
std::vector<StageImage> replay_generation(const std::vector<GenerationNet<T>>& gen_nets, const StageImage& first,
                                          const std::vector<AdaINParams>& params);

}  // namespace artflow
