// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "artflow/nets.hpp"
#include "artflow/nn/adam.hpp"

namespace artflow {

struct LossTerm {
  std::string name;
  double value = 0.0;
  double weight = 1.0;
};

/// Loss components of one step. `total` is the weighted sum of `terms`;
/// `extras` (discriminator loss and the like) are reported but not summed.
struct LossBreakdown {
  std::vector<LossTerm> terms;
  std::vector<LossTerm> extras;
  double total = 0.0;

  double value(const std::string& name) const;
  double weighted_sum() const;
  bool finite() const;
  std::string describe() const;
};

class non_finite_loss : public std::runtime_error {
 public:
  non_finite_loss(const std::string& where, LossBreakdown b)
      : std::runtime_error(where + ": non-finite loss (" + b.describe() + ")"), breakdown(std::move(b)) {}
  LossBreakdown breakdown;
};

/// z ~ N(0, I) for each batch element.
std::vector<LatentCode> draw_prior(Rng& rng, int count, int stage_index, int latent_dim);

/// Bicycle objective on aligned pairs (xs[b], ys[b]): hinge GAN terms on the
/// cVAE and cLR outputs, l1 of the cVAE output, latent regression on the cLR
/// output and KL of the encoder posterior. `rng` supplies the
/// reparameterization noise.
template <typename T>
LossBreakdown bicycle_loss(const GenerationNet<T>& net, std::span<const StageImage> xs,
                           std::span<const StageImage> ys, std::span<const LatentCode> z_sampled, Rng& rng,
                           const HyperParams& hyper);
template <typename T>
LossBreakdown bicycle_loss(const GenerationNet<T>& net, const StageImage& x, const StageImage& y,
                           const LatentCode& z_sampled, Rng& rng, const HyperParams& hyper) {
  return bicycle_loss(net, std::span<const StageImage>(&x, 1), std::span<const StageImage>(&y, 1),
                      std::span<const LatentCode>(&z_sampled, 1), rng, hyper);
}

/// Mean |G_I(G(x, map(z))) - x|.
template <typename T>
double cycle_loss(const GenerationNet<T>& net, const InferenceNet<T>& inference, const StageImage& x,
                  const LatentCode& z);

/// GAN term plus lambda_1 * l1 of the inferred stage-i image.
template <typename T>
LossBreakdown inference_loss(const InferenceNet<T>& net, std::span<const StageImage> xs,
                             std::span<const StageImage> ys, const HyperParams& hyper);
template <typename T>
LossBreakdown inference_loss(const InferenceNet<T>& net, const StageImage& x, const StageImage& y,
                             const HyperParams& hyper) {
  return inference_loss(net, std::span<const StageImage>(&x, 1), std::span<const StageImage>(&y, 1), hyper);
}

/// Owns the Adam states of one generation network.
template <typename T>
class GenerationTrainer {
 public:
  GenerationTrainer(GenerationNet<T>& net, const HyperParams& hyper);

  /// One encoder+generator step followed by one discriminator step. Prior
  /// samples, then reparameterization noise, are drawn from `rng`. The cycle
  /// term is added when lambda_c > 0 and `inference` is given (frozen).
  LossBreakdown step(std::span<const StageImage> xs, std::span<const StageImage> ys, Rng& rng,
                     const InferenceNet<T>* inference);

  nn::Adam<T>& eg_optimizer() { return eg_opt_; }
  nn::Adam<T>& d_optimizer() { return d_opt_; }

 private:
  GenerationNet<T>& net_;
  HyperParams hyper_;
  nn::Adam<T> eg_opt_;
  nn::Adam<T> d_opt_;
};

template <typename T>
class InferenceTrainer {
 public:
  InferenceTrainer(InferenceNet<T>& net, const HyperParams& hyper);

  /// xs are stage-i targets, ys the stage-(i+1) inputs.
  LossBreakdown step(std::span<const StageImage> xs, std::span<const StageImage> ys);

  nn::Adam<T>& g_optimizer() { return g_opt_; }
  nn::Adam<T>& d_optimizer() { return d_opt_; }

 private:
  InferenceNet<T>& net_;
  HyperParams hyper_;
  nn::Adam<T> g_opt_;
  nn::Adam<T> d_opt_;
};

}  // namespace artflow
