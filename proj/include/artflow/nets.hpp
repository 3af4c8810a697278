// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "artflow/config.hpp"
#include "artflow/nn/layers.hpp"
#include "artflow/rng.hpp"
#include "artflow/types.hpp"

namespace artflow {

using nn::Var;

/// Two-scale hinge patch discriminator. The second scale sees a 2x
/// average-pooled copy of the input.
template <typename T>
class PatchDiscriminator {
 public:
  PatchDiscriminator() = default;
  PatchDiscriminator(nn::ParamSet<T>& params, const std::string& prefix, int channels, int width, Rng& rng);

  /// One patch-logit map per scale.
  std::vector<Var<T>> operator()(const Var<T>& x) const;

 private:
  struct Scale {
    nn::Conv2d<T> c0, c1, out;
  };
  std::vector<Scale> scales_;
};

/// Generator-side hinge term: mean over scales of -mean(D(x)).
template <typename T>
Var<T> adversarial_term(const std::vector<Var<T>>& logits);
/// Discriminator hinge loss on one real and one fake batch, averaged over scales.
template <typename T>
Var<T> discriminator_hinge(const std::vector<Var<T>>& real_logits, const std::vector<Var<T>>& fake_logits);

/// Stage-i artwork generation network: latent encoder E, AdaIN-modulated
/// generator G (content encoder, four AdaIN residual blocks, decoder and
/// latent-to-AdaIN mapping) and the stage discriminator D.
template <typename T>
class GenerationNet {
 public:
  struct Encoded {
    Var<T> mu;
    Var<T> logvar;
  };

  GenerationNet(const WorkflowConfig& cfg, int stage_index, std::uint64_t seed);

  int stage_index() const { return stage_index_; }
  int adain_channels() const { return adain_channels_; }
  int adain_dim() const { return 8 * adain_channels_; }
  int latent_dim() const { return latent_dim_; }
  static constexpr int kAdaINLayers = 4;

  Encoded encode(const Var<T>& next_stage) const;
  /// z[B, latent_dim] -> AdaIN parameters [B, 8c].
  Var<T> map_latent(const Var<T>& z) const;
  /// x[B, C, H, W] with AdaIN parameters [B or 1, 8c] -> next-stage image.
  Var<T> generate(const Var<T>& x, const Var<T>& ada) const;
  std::vector<Var<T>> discriminate(const Var<T>& x) const { return disc_(x); }

  nn::ParamSet<T>& encoder_params() { return encoder_params_; }
  nn::ParamSet<T>& generator_params() { return generator_params_; }
  nn::ParamSet<T>& discriminator_params() { return discriminator_params_; }
  const nn::ParamSet<T>& encoder_params() const { return encoder_params_; }
  const nn::ParamSet<T>& generator_params() const { return generator_params_; }
  const nn::ParamSet<T>& discriminator_params() const { return discriminator_params_; }
  std::vector<nn::ParamSet<T>*> groups() { return {&encoder_params_, &generator_params_, &discriminator_params_}; }
  void set_trainable(bool on);
  std::uint64_t checksum() const;

 private:
  int stage_index_;
  int channels_;
  int latent_dim_;
  int adain_channels_;
  nn::ParamSet<T> encoder_params_;
  nn::ParamSet<T> generator_params_;
  nn::ParamSet<T> discriminator_params_;

  nn::Conv2d<T> enc0_, enc1_, enc2_;
  nn::Linear<T> enc_fc_;

  nn::Conv2d<T> stem_, down1_, down2_;
  struct ResBlock {
    nn::Conv2d<T> conv_a, conv_b;
  };
  std::vector<ResBlock> res_;
  nn::Conv2d<T> up1_, up2_, out_;
  nn::Linear<T> map0_, map1_, map2_;

  PatchDiscriminator<T> disc_;
};

/// Stage-i workflow inference network: maps a stage i+1 image back to stage i.
template <typename T>
class InferenceNet {
 public:
  InferenceNet(const WorkflowConfig& cfg, int stage_index, std::uint64_t seed);

  int stage_index() const { return stage_index_; }
  Var<T> infer(const Var<T>& next_stage) const;
  std::vector<Var<T>> discriminate(const Var<T>& x) const { return disc_(x); }

  nn::ParamSet<T>& generator_params() { return generator_params_; }
  nn::ParamSet<T>& discriminator_params() { return discriminator_params_; }
  const nn::ParamSet<T>& generator_params() const { return generator_params_; }
  const nn::ParamSet<T>& discriminator_params() const { return discriminator_params_; }
  std::vector<nn::ParamSet<T>*> groups() { return {&generator_params_, &discriminator_params_}; }
  void set_trainable(bool on);
  std::uint64_t checksum() const;

 private:
  int stage_index_;
  nn::ParamSet<T> generator_params_;
  nn::ParamSet<T> discriminator_params_;
  nn::Conv2d<T> e0_, e1_, e2_, r_a_, r_b_, u1_, u1_merge_, u2_, u2_merge_, out_;
  PatchDiscriminator<T> disc_;
};

// Stage-level operations on StageImage values.

/// E(next_image): the mean when `rng` is null, otherwise mu + eps * exp(logvar / 2).
template <typename T>
LatentCode encode_latent(const GenerationNet<T>& net, const StageImage& next_image, Rng* rng = nullptr);
template <typename T>
AdaINParams latent_to_adain(const GenerationNet<T>& net, const LatentCode& z);
/// G(current, base + delta); returns the stage i+1 image.
template <typename T>
StageImage generate_next(const GenerationNet<T>& net, const StageImage& current, const AdaINParams& ada);

template <typename T>
StageImage infer_prev(const InferenceNet<T>& net, const StageImage& next_image);
/// Runs the inference chain from the final artwork; returns stages 1..N.
/// `nets[k]` is the stage k+1 network.
template <typename T>
std::vector<StageImage> infer_all_stages(const std::vector<InferenceNet<T>>& nets, const StageImage& artwork);

}  // namespace artflow
