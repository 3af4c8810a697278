// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/training.hpp"

#include <cmath>
#include <sstream>

namespace artflow {
namespace {

template <typename T>
nn::Tensor<T> latent_batch(std::span<const LatentCode> z, int latent_dim) {
  nn::Tensor<T> t({static_cast<int>(z.size()), latent_dim});
  for (std::size_t b = 0; b < z.size(); ++b) {
    if (static_cast<int>(z[b].values.size()) != latent_dim) throw std::invalid_argument("latent length mismatch");
    for (int j = 0; j < latent_dim; ++j) t[b * latent_dim + j] = static_cast<T>(z[b].values[j]);
  }
  return t;
}

void check_pairs(std::span<const StageImage> xs, std::span<const StageImage> ys, int stage, const char* what) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument(std::string(what) + ": misaligned batch");
  for (std::size_t b = 0; b < xs.size(); ++b) {
    if (xs[b].stage_index != stage || ys[b].stage_index != stage + 1) {
      throw stage_error(std::string(what) + ": pair must be stages (" + std::to_string(stage) + ", " +
                        std::to_string(stage + 1) + ")");
    }
    if (!xs[b].same_geometry(ys[b]) || !xs[b].same_geometry(xs[0])) {
      throw std::invalid_argument(std::string(what) + ": misaligned pair geometry");
    }
  }
}

template <typename T>
struct BicycleGraph {
  Var<T> gan_vae, gan_lr, l1, latent, kl, cycle;
  Var<T> fake_vae, fake_lr;
  Var<T> total;
  LossBreakdown breakdown;
};

template <typename T>
BicycleGraph<T> bicycle_forward(const GenerationNet<T>& net, std::span<const StageImage> xs,
                                std::span<const StageImage> ys, std::span<const LatentCode> z_sampled, Rng& rng,
                                const HyperParams& hyper, const InferenceNet<T>* inference) {
  check_pairs(xs, ys, net.stage_index(), "bicycle_loss");
  if (z_sampled.size() != xs.size()) throw std::invalid_argument("bicycle_loss: one prior sample per pair");
  const int B = static_cast<int>(xs.size());
  const int L = net.latent_dim();
  Var<T> x = Var<T>::constant(to_batch<T>(xs));
  Var<T> y = Var<T>::constant(to_batch<T>(ys));

  BicycleGraph<T> g;
  auto enc = net.encode(y);
  nn::Tensor<T> eps({B, L});
  for (auto& v : eps.values()) v = static_cast<T>(rng.normal());
  Var<T> z_enc = nn::add(enc.mu, nn::mul(Var<T>::constant(eps), nn::exp(nn::scale(enc.logvar, T(0.5)))));
  g.fake_vae = net.generate(x, net.map_latent(z_enc));

  Var<T> z_lr = Var<T>::constant(latent_batch<T>(z_sampled, L));
  g.fake_lr = net.generate(x, net.map_latent(z_lr));

  g.gan_vae = adversarial_term(net.discriminate(g.fake_vae));
  g.gan_lr = adversarial_term(net.discriminate(g.fake_lr));
  g.l1 = nn::l1_loss(g.fake_vae, y);
  {
    // Latent regression trains the generator only.
    nn::FreezeGuard<T> freeze(net.encoder_params());
    g.latent = nn::l1_loss(net.encode(g.fake_lr).mu, z_lr);
  }
  g.kl = nn::kl_divergence(enc.mu, enc.logvar);

  g.total = nn::add(nn::add(g.gan_vae, g.gan_lr),
                    nn::add(nn::add(nn::scale(g.l1, static_cast<T>(hyper.lambda_1)),
                                    nn::scale(g.latent, static_cast<T>(hyper.lambda_latent))),
                            nn::scale(g.kl, static_cast<T>(hyper.lambda_kl))));
  auto& terms = g.breakdown.terms;
  terms = {{"gan_vae", static_cast<double>(g.gan_vae.item()), 1.0},
           {"gan_lr", static_cast<double>(g.gan_lr.item()), 1.0},
           {"l1", static_cast<double>(g.l1.item()), hyper.lambda_1},
           {"latent", static_cast<double>(g.latent.item()), hyper.lambda_latent},
           {"kl", static_cast<double>(g.kl.item()), hyper.lambda_kl}};

  if (inference && hyper.lambda_c > 0.0) {
    if (inference->stage_index() != net.stage_index()) throw stage_error("cycle loss: inference stage mismatch");
    nn::FreezeGuard<T> freeze(inference->generator_params());
    g.cycle = nn::l1_loss(inference->infer(g.fake_lr), x);
    g.total = nn::add(g.total, nn::scale(g.cycle, static_cast<T>(hyper.lambda_c)));
    terms.push_back({"cycle", static_cast<double>(g.cycle.item()), hyper.lambda_c});
  }
  g.breakdown.total = static_cast<double>(g.total.item());
  return g;
}

}  // namespace

double LossBreakdown::value(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return t.value;
  for (const auto& t : extras)
    if (t.name == name) return t.value;
  throw std::out_of_range("no loss component named " + name);
}

double LossBreakdown::weighted_sum() const {
  double s = 0.0;
  for (const auto& t : terms) s += t.weight * t.value;
  return s;
}

bool LossBreakdown::finite() const {
  if (!std::isfinite(total)) return false;
  for (const auto& t : terms)
    if (!std::isfinite(t.value)) return false;
  for (const auto& t : extras)
    if (!std::isfinite(t.value)) return false;
  return true;
}

std::string LossBreakdown::describe() const {
  std::ostringstream os;
  os << "total=" << total;
  for (const auto& t : terms) os << ' ' << t.name << '=' << t.value;
  for (const auto& t : extras) os << ' ' << t.name << '=' << t.value;
  return os.str();
}

std::vector<LatentCode> draw_prior(Rng& rng, int count, int stage_index, int latent_dim) {
  std::vector<LatentCode> out(static_cast<std::size_t>(count));
  for (auto& z : out) {
    z.stage_index = stage_index;
    z.values.resize(static_cast<std::size_t>(latent_dim));
    for (auto& v : z.values) v = rng.normal();
  }
  return out;
}

template <typename T>
LossBreakdown bicycle_loss(const GenerationNet<T>& net, std::span<const StageImage> xs,
                           std::span<const StageImage> ys, std::span<const LatentCode> z_sampled, Rng& rng,
                           const HyperParams& hyper) {
  return bicycle_forward<T>(net, xs, ys, z_sampled, rng, hyper, nullptr).breakdown;
}

template <typename T>
double cycle_loss(const GenerationNet<T>& net, const InferenceNet<T>& inference, const StageImage& x,
                  const LatentCode& z) {
  if (x.stage_index != net.stage_index() || inference.stage_index() != net.stage_index() ||
      z.stage_index != net.stage_index()) {
    throw stage_error("cycle_loss: stage mismatch");
  }
  Var<T> xv = Var<T>::constant(to_batch<T>(x));
  Var<T> fake = net.generate(xv, net.map_latent(Var<T>::constant(row_tensor<T>(z.values))));
  return static_cast<double>(nn::l1_loss(inference.infer(fake), xv).item());
}

template <typename T>
LossBreakdown inference_loss(const InferenceNet<T>& net, std::span<const StageImage> xs,
                             std::span<const StageImage> ys, const HyperParams& hyper) {
  check_pairs(xs, ys, net.stage_index(), "inference_loss");
  Var<T> pred = net.infer(Var<T>::constant(to_batch<T>(ys)));
  const double gan = static_cast<double>(adversarial_term(net.discriminate(pred)).item());
  const double l1 = static_cast<double>(nn::l1_loss(pred, Var<T>::constant(to_batch<T>(xs))).item());
  LossBreakdown b;
  b.terms = {{"gan", gan, 1.0}, {"l1", l1, hyper.lambda_1}};
  b.total = b.weighted_sum();
  return b;
}

template <typename T>
GenerationTrainer<T>::GenerationTrainer(GenerationNet<T>& net, const HyperParams& hyper)
    : net_(net), hyper_(hyper) {
  nn::ParamSet<T> eg;
  eg.append(net.encoder_params());
  eg.append(net.generator_params());
  const nn::AdamOptions opts{hyper.lr, hyper.adam_beta1, hyper.adam_beta2, 1e-8};
  eg_opt_ = nn::Adam<T>(eg, opts);
  d_opt_ = nn::Adam<T>(net.discriminator_params(), opts);
}

template <typename T>
LossBreakdown GenerationTrainer<T>::step(std::span<const StageImage> xs, std::span<const StageImage> ys, Rng& rng,
                                         const InferenceNet<T>* inference) {
  const auto z = draw_prior(rng, static_cast<int>(xs.size()), net_.stage_index(), net_.latent_dim());
  net_.encoder_params().set_trainable(true);
  net_.generator_params().set_trainable(true);
  net_.discriminator_params().set_trainable(false);
  BicycleGraph<T> g = bicycle_forward<T>(net_, xs, ys, z, rng, hyper_, inference);

  net_.discriminator_params().set_trainable(true);
  Var<T> real = Var<T>::constant(to_batch<T>(ys));
  auto real_logits = net_.discriminate(real);
  Var<T> d_loss = nn::add(discriminator_hinge(real_logits, net_.discriminate(g.fake_vae.detach())),
                          discriminator_hinge(real_logits, net_.discriminate(g.fake_lr.detach())));
  g.breakdown.extras.push_back({"disc", static_cast<double>(d_loss.item()), 1.0});
  if (!g.breakdown.finite()) {
    net_.set_trainable(false);
    throw non_finite_loss("generation stage " + std::to_string(net_.stage_index()), g.breakdown);
  }

  eg_opt_.zero_grad();
  nn::backward(g.total);
  eg_opt_.step();
  d_opt_.zero_grad();
  nn::backward(d_loss);
  d_opt_.step();
  net_.set_trainable(false);
  return g.breakdown;
}

template <typename T>
InferenceTrainer<T>::InferenceTrainer(InferenceNet<T>& net, const HyperParams& hyper) : net_(net), hyper_(hyper) {
  const nn::AdamOptions opts{hyper.lr, hyper.adam_beta1, hyper.adam_beta2, 1e-8};
  g_opt_ = nn::Adam<T>(net.generator_params(), opts);
  d_opt_ = nn::Adam<T>(net.discriminator_params(), opts);
}

template <typename T>
LossBreakdown InferenceTrainer<T>::step(std::span<const StageImage> xs, std::span<const StageImage> ys) {
  check_pairs(xs, ys, net_.stage_index(), "inference_train_step");
  net_.generator_params().set_trainable(true);
  net_.discriminator_params().set_trainable(false);
  Var<T> target = Var<T>::constant(to_batch<T>(xs));
  Var<T> pred = net_.infer(Var<T>::constant(to_batch<T>(ys)));
  Var<T> gan = adversarial_term(net_.discriminate(pred));
  Var<T> l1 = nn::l1_loss(pred, target);
  Var<T> total = nn::add(gan, nn::scale(l1, static_cast<T>(hyper_.lambda_1)));

  net_.discriminator_params().set_trainable(true);
  Var<T> d_loss = discriminator_hinge(net_.discriminate(target), net_.discriminate(pred.detach()));

  LossBreakdown b;
  b.terms = {{"gan", static_cast<double>(gan.item()), 1.0}, {"l1", static_cast<double>(l1.item()), hyper_.lambda_1}};
  b.extras = {{"disc", static_cast<double>(d_loss.item()), 1.0}};
  b.total = static_cast<double>(total.item());
  if (!b.finite()) {
    net_.set_trainable(false);
    throw non_finite_loss("inference stage " + std::to_string(net_.stage_index()), b);
  }
  g_opt_.zero_grad();
  nn::backward(total);
  g_opt_.step();
  d_opt_.zero_grad();
  nn::backward(d_loss);
  d_opt_.step();
  net_.set_trainable(false);
  return b;
}

#define ARTFLOW_INSTANTIATE_TRAINING(T)                                                                          \
  template LossBreakdown bicycle_loss(const GenerationNet<T>&, std::span<const StageImage>,                      \
                                      std::span<const StageImage>, std::span<const LatentCode>, Rng&,            \
                                      const HyperParams&);                                                       \
  template double cycle_loss(const GenerationNet<T>&, const InferenceNet<T>&, const StageImage&,                 \
                             const LatentCode&);                                                                 \
  template LossBreakdown inference_loss(const InferenceNet<T>&, std::span<const StageImage>,                     \
                                        std::span<const StageImage>, const HyperParams&);                        \
  template class GenerationTrainer<T>;                                                                           \
  template class InferenceTrainer<T>;

ARTFLOW_INSTANTIATE_TRAINING(float)
ARTFLOW_INSTANTIATE_TRAINING(double)

}  // namespace artflow
