// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/nets.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace artflow {

using nn::Tensor;

namespace {

constexpr double kLeakySlope = 0.2;

int widen(int v) { return std::max(v, 2); }

void require_divisible(const WorkflowConfig& cfg) {
  if (cfg.image_size.height % 4 || cfg.image_size.width % 4 || cfg.image_size.height < 8 ||
      cfg.image_size.width < 8) {
    throw std::invalid_argument("network geometry needs image sides divisible by 4 and >= 8");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PatchDiscriminator

template <typename T>
PatchDiscriminator<T>::PatchDiscriminator(nn::ParamSet<T>& params, const std::string& prefix, int channels,
                                          int width, Rng& rng) {
  for (int s = 0; s < 2; ++s) {
    const std::string p = prefix + ".scale" + std::to_string(s);
    scales_.push_back(Scale{nn::Conv2d<T>(params, p + ".c0", channels, width, 4, 2, 1, rng),
                            nn::Conv2d<T>(params, p + ".c1", width, 2 * width, 4, 2, 1, rng),
                            nn::Conv2d<T>(params, p + ".out", 2 * width, 1, 3, 1, 1, rng)});
  }
}

template <typename T>
std::vector<Var<T>> PatchDiscriminator<T>::operator()(const Var<T>& x) const {
  std::vector<Var<T>> out;
  Var<T> input = x;
  for (std::size_t s = 0; s < scales_.size(); ++s) {
    if (s > 0) input = nn::avg_pool2x(input);
    const Scale& sc = scales_[s];
    Var<T> h = nn::leaky_relu(sc.c0(input), T(kLeakySlope));
    h = nn::leaky_relu(sc.c1(h), T(kLeakySlope));
    out.push_back(sc.out(h));
  }
  return out;
}

template <typename T>
Var<T> adversarial_term(const std::vector<Var<T>>& logits) {
  Var<T> total;
  for (const auto& l : logits) {
    Var<T> term = nn::scale(nn::mean(l), T(-1));
    total = total.defined() ? nn::add(total, term) : term;
  }
  return nn::scale(total, T(1) / static_cast<T>(logits.size()));
}

template <typename T>
Var<T> discriminator_hinge(const std::vector<Var<T>>& real_logits, const std::vector<Var<T>>& fake_logits) {
  Var<T> total;
  for (std::size_t s = 0; s < real_logits.size(); ++s) {
    Var<T> term = nn::add(nn::hinge_real(real_logits[s]), nn::hinge_fake(fake_logits[s]));
    total = total.defined() ? nn::add(total, term) : term;
  }
  return nn::scale(total, T(1) / static_cast<T>(real_logits.size()));
}

// ---------------------------------------------------------------------------
// GenerationNet

template <typename T>
GenerationNet<T>::GenerationNet(const WorkflowConfig& cfg, int stage_index, std::uint64_t seed)
    : stage_index_(stage_index),
      channels_(cfg.channels),
      latent_dim_(cfg.latent_dim),
      adain_channels_(cfg.adain_channels) {
  if (stage_index < 1 || stage_index > cfg.num_stages - 1) {
    throw stage_error("generation net stage " + std::to_string(stage_index) + " out of range");
  }
  require_divisible(cfg);
  Rng rng(Rng::derive(seed, {0x6e6e47ULL, static_cast<std::uint64_t>(stage_index)}));
  const int c = cfg.adain_channels;
  const int w0 = widen(c / 4), w1 = widen(c / 2);
  const int ec = cfg.arch.encoder_channels;
  const int C = cfg.channels;

  enc0_ = nn::Conv2d<T>(encoder_params_, "enc.c0", C, ec, 4, 2, 1, rng);
  enc1_ = nn::Conv2d<T>(encoder_params_, "enc.c1", ec, 2 * ec, 4, 2, 1, rng);
  enc2_ = nn::Conv2d<T>(encoder_params_, "enc.c2", 2 * ec, 2 * ec, 4, 2, 1, rng);
  enc_fc_ = nn::Linear<T>(encoder_params_, "enc.fc", 2 * ec, 2 * cfg.latent_dim, rng, 0.1);

  stem_ = nn::Conv2d<T>(generator_params_, "gen.stem", C, w0, 3, 1, 1, rng);
  down1_ = nn::Conv2d<T>(generator_params_, "gen.down1", w0, w1, 4, 2, 1, rng);
  down2_ = nn::Conv2d<T>(generator_params_, "gen.down2", w1, c, 4, 2, 1, rng);
  for (int k = 0; k < kAdaINLayers; ++k) {
    const std::string p = "gen.res" + std::to_string(k);
    res_.push_back(ResBlock{nn::Conv2d<T>(generator_params_, p + ".a", c, c, 3, 1, 1, rng),
                            nn::Conv2d<T>(generator_params_, p + ".b", c, c, 3, 1, 1, rng, 0.5)});
  }
  up1_ = nn::Conv2d<T>(generator_params_, "gen.up1", c, w1, 3, 1, 1, rng);
  up2_ = nn::Conv2d<T>(generator_params_, "gen.up2", w1, w0, 3, 1, 1, rng);
  out_ = nn::Conv2d<T>(generator_params_, "gen.out", w0, C, 3, 1, 1, rng, 0.5);

  const int hidden = cfg.arch.mapping_hidden;
  map0_ = nn::Linear<T>(generator_params_, "gen.map0", cfg.latent_dim, hidden, rng);
  map1_ = nn::Linear<T>(generator_params_, "gen.map1", hidden, hidden, rng);
  map2_ = nn::Linear<T>(generator_params_, "gen.map2", hidden, 8 * c, rng, 0.1);
  // Start from identity modulation: scales 1, biases 0.
  for (int k = 0; k < kAdaINLayers; ++k)
    for (int j = 0; j < c; ++j) map2_.bias.value()[2 * c * k + j] = T(1);

  disc_ = PatchDiscriminator<T>(discriminator_params_, "disc", C, cfg.arch.discriminator_channels, rng);
}

template <typename T>
typename GenerationNet<T>::Encoded GenerationNet<T>::encode(const Var<T>& next_stage) const {
  Var<T> h = nn::leaky_relu(enc0_(next_stage), T(kLeakySlope));
  h = nn::leaky_relu(enc1_(h), T(kLeakySlope));
  h = nn::leaky_relu(enc2_(h), T(kLeakySlope));
  Var<T> stats = enc_fc_(nn::global_avg_pool(h));
  return {nn::slice_cols(stats, 0, latent_dim_), nn::slice_cols(stats, latent_dim_, latent_dim_)};
}

template <typename T>
Var<T> GenerationNet<T>::map_latent(const Var<T>& z) const {
  Var<T> h = nn::relu(map0_(z));
  h = nn::relu(map1_(h));
  return map2_(h);
}

template <typename T>
Var<T> GenerationNet<T>::generate(const Var<T>& x, const Var<T>& ada) const {
  if (ada.value().rank() != 2 || ada.dim(1) != adain_dim()) {
    throw std::invalid_argument("generate: AdaIN parameters must have 8c = " + std::to_string(adain_dim()) +
                                " columns");
  }
  if (x.value().rank() != 4 || x.dim(1) != channels_) throw std::invalid_argument("generate: bad input shape");
  const int c = adain_channels_;
  Var<T> h = nn::relu(nn::instance_norm(stem_(x)));
  h = nn::relu(nn::instance_norm(down1_(h)));
  h = nn::relu(nn::instance_norm(down2_(h)));
  for (int k = 0; k < kAdaINLayers; ++k) {
    Var<T> r = nn::relu(nn::adain(res_[k].conv_a(h), ada, 2 * c * k));
    h = nn::add(h, res_[k].conv_b(r));
  }
  h = nn::relu(up1_(nn::upsample_nearest2x(h)));
  h = nn::relu(up2_(nn::upsample_nearest2x(h)));
  return nn::tanh(out_(h));
}

template <typename T>
void GenerationNet<T>::set_trainable(bool on) {
  encoder_params_.set_trainable(on);
  generator_params_.set_trainable(on);
  discriminator_params_.set_trainable(on);
}

template <typename T>
std::uint64_t GenerationNet<T>::checksum() const {
  return encoder_params_.checksum() ^ (generator_params_.checksum() * 3) ^ (discriminator_params_.checksum() * 7);
}

// ---------------------------------------------------------------------------
// InferenceNet

template <typename T>
InferenceNet<T>::InferenceNet(const WorkflowConfig& cfg, int stage_index, std::uint64_t seed)
    : stage_index_(stage_index) {
  if (stage_index < 1 || stage_index > cfg.num_stages - 1) {
    throw stage_error("inference net stage " + std::to_string(stage_index) + " out of range");
  }
  require_divisible(cfg);
  Rng rng(Rng::derive(seed, {0x1f1f49ULL, static_cast<std::uint64_t>(stage_index)}));
  const int f = cfg.arch.inference_channels;
  const int C = cfg.channels;
  auto& g = generator_params_;
  e0_ = nn::Conv2d<T>(g, "inf.e0", C, f, 3, 1, 1, rng);
  e1_ = nn::Conv2d<T>(g, "inf.e1", f, 2 * f, 4, 2, 1, rng);
  e2_ = nn::Conv2d<T>(g, "inf.e2", 2 * f, 4 * f, 4, 2, 1, rng);
  r_a_ = nn::Conv2d<T>(g, "inf.res.a", 4 * f, 4 * f, 3, 1, 1, rng);
  r_b_ = nn::Conv2d<T>(g, "inf.res.b", 4 * f, 4 * f, 3, 1, 1, rng, 0.5);
  u1_ = nn::Conv2d<T>(g, "inf.u1", 4 * f, 2 * f, 3, 1, 1, rng);
  u1_merge_ = nn::Conv2d<T>(g, "inf.u1m", 4 * f, 2 * f, 3, 1, 1, rng);
  u2_ = nn::Conv2d<T>(g, "inf.u2", 2 * f, f, 3, 1, 1, rng);
  u2_merge_ = nn::Conv2d<T>(g, "inf.u2m", 2 * f, f, 3, 1, 1, rng);
  out_ = nn::Conv2d<T>(g, "inf.out", f, C, 3, 1, 1, rng, 0.5);
  disc_ = PatchDiscriminator<T>(discriminator_params_, "disc", C, cfg.arch.discriminator_channels, rng);
}

template <typename T>
Var<T> InferenceNet<T>::infer(const Var<T>& next_stage) const {
  Var<T> s0 = nn::relu(e0_(next_stage));
  Var<T> s1 = nn::relu(nn::instance_norm(e1_(s0)));
  Var<T> h = nn::relu(nn::instance_norm(e2_(s1)));
  h = nn::add(h, r_b_(nn::relu(nn::instance_norm(r_a_(h)))));
  h = nn::relu(nn::instance_norm(u1_(nn::upsample_nearest2x(h))));
  h = nn::relu(u1_merge_(nn::concat_channels(h, s1)));
  h = nn::relu(nn::instance_norm(u2_(nn::upsample_nearest2x(h))));
  h = nn::relu(u2_merge_(nn::concat_channels(h, s0)));
  return nn::tanh(out_(h));
}

template <typename T>
void InferenceNet<T>::set_trainable(bool on) {
  generator_params_.set_trainable(on);
  discriminator_params_.set_trainable(on);
}

template <typename T>
std::uint64_t InferenceNet<T>::checksum() const {
  return generator_params_.checksum() ^ (discriminator_params_.checksum() * 7);
}

// ---------------------------------------------------------------------------
// Stage-level operations

template <typename T>
LatentCode encode_latent(const GenerationNet<T>& net, const StageImage& next_image, Rng* rng) {
  if (next_image.stage_index != net.stage_index() + 1) {
    throw stage_error("encode_latent: expected a stage " + std::to_string(net.stage_index() + 1) + " image, got stage " +
                      std::to_string(next_image.stage_index));
  }
  auto enc = net.encode(Var<T>::constant(to_batch<T>(next_image)));
  LatentCode z{net.stage_index(), std::vector<double>(static_cast<std::size_t>(net.latent_dim()))};
  for (int j = 0; j < net.latent_dim(); ++j) {
    const double mu = static_cast<double>(enc.mu.value()[j]);
    if (rng) {
      const double logvar = static_cast<double>(enc.logvar.value()[j]);
      z.values[j] = mu + rng->normal() * std::exp(0.5 * logvar);
    } else {
      z.values[j] = mu;
    }
  }
  return z;
}

template <typename T>
AdaINParams latent_to_adain(const GenerationNet<T>& net, const LatentCode& z) {
  if (z.stage_index != net.stage_index()) {
    throw stage_error("latent_to_adain: latent for stage " + std::to_string(z.stage_index) + " given to stage " +
                      std::to_string(net.stage_index()) + " network");
  }
  if (static_cast<int>(z.values.size()) != net.latent_dim()) {
    throw std::invalid_argument("latent_to_adain: latent length mismatch");
  }
  Var<T> ada = net.map_latent(Var<T>::constant(row_tensor<T>(z.values)));
  std::vector<double> base(ada.value().size());
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = static_cast<double>(ada.value()[i]);
  return AdaINParams(net.stage_index(), std::move(base));
}

template <typename T>
StageImage generate_next(const GenerationNet<T>& net, const StageImage& current, const AdaINParams& ada) {
  if (current.stage_index != net.stage_index()) {
    throw stage_error("generate_next: stage " + std::to_string(current.stage_index) + " image given to stage " +
                      std::to_string(net.stage_index()) + " network");
  }
  if (static_cast<int>(ada.base.size()) != net.adain_dim() || ada.delta.size() != ada.base.size()) {
    throw std::invalid_argument("generate_next: AdaIN parameter length must be " + std::to_string(net.adain_dim()));
  }
  const auto eff = ada.effective();
  Var<T> out = net.generate(Var<T>::constant(to_batch<T>(current)), Var<T>::constant(row_tensor<T>(eff)));
  return from_batch(out.value(), 0, net.stage_index() + 1);
}

template <typename T>
StageImage infer_prev(const InferenceNet<T>& net, const StageImage& next_image) {
  if (next_image.stage_index != net.stage_index() + 1) {
    throw stage_error("infer_prev: expected a stage " + std::to_string(net.stage_index() + 1) + " image, got stage " +
                      std::to_string(next_image.stage_index));
  }
  Var<T> out = net.infer(Var<T>::constant(to_batch<T>(next_image)));
  return from_batch(out.value(), 0, net.stage_index());
}

template <typename T>
std::vector<StageImage> infer_all_stages(const std::vector<InferenceNet<T>>& nets, const StageImage& artwork) {
  const int n = static_cast<int>(nets.size()) + 1;
  if (nets.empty()) throw std::invalid_argument("infer_all_stages: no inference networks");
  if (artwork.stage_index != n) {
    throw stage_error("infer_all_stages: artwork must be stage " + std::to_string(n) + ", got " +
                      std::to_string(artwork.stage_index));
  }
  for (int k = 0; k < n - 1; ++k) {
    if (nets[k].stage_index() != k + 1) throw std::invalid_argument("infer_all_stages: networks out of order");
  }
  std::vector<StageImage> stages(static_cast<std::size_t>(n));
  stages[n - 1] = artwork;
  for (int i = n - 1; i >= 1; --i) stages[i - 1] = infer_prev(nets[i - 1], stages[i]);
  return stages;
}

#define ARTFLOW_INSTANTIATE_NETS(T)                                                                     \
  template class PatchDiscriminator<T>;                                                                 \
  template class GenerationNet<T>;                                                                      \
  template class InferenceNet<T>;                                                                       \
  template Var<T> adversarial_term(const std::vector<Var<T>>&);                                         \
  template Var<T> discriminator_hinge(const std::vector<Var<T>>&, const std::vector<Var<T>>&);          \
  template LatentCode encode_latent(const GenerationNet<T>&, const StageImage&, Rng*);                  \
  template AdaINParams latent_to_adain(const GenerationNet<T>&, const LatentCode&);                     \
  template StageImage generate_next(const GenerationNet<T>&, const StageImage&, const AdaINParams&);    \
  template StageImage infer_prev(const InferenceNet<T>&, const StageImage&);                            \
  template std::vector<StageImage> infer_all_stages(const std::vector<InferenceNet<T>>&, const StageImage&);

ARTFLOW_INSTANTIATE_NETS(float)
ARTFLOW_INSTANTIATE_NETS(double)

}  // namespace artflow
