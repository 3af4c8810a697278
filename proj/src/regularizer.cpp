// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace artflow {
namespace {

template <typename T>
std::vector<double> encoded_base(const GenerationNet<T>& net, const StageImage& x_next) {
  return latent_to_adain(net, encode_latent(net, x_next)).base;
}

}  // namespace

L2RTrainState L2RTrainState::start(int stage, int adain_channels, const HyperParams& hyper) {
  L2RTrainState s;
  s.reg = RegularizerWeights::initial(stage, adain_channels);
  s.optimizer = nn::VectorAdam(s.reg.w.size(), {hyper.eta, hyper.adam_beta1, hyper.adam_beta2, 1e-8});
  return s;
}

template <typename T>
L2RObjective<T>::L2RObjective(const GenerationNet<T>& net, const L2RTriple& triple, const HyperParams& hyper,
                              const FeatureExtractor<T>& features)
    : net_(net),
      hyper_(hyper),
      features_(features),
      base_(encoded_base(net, triple.x_next)),
      inner_(net, triple.x, triple.x_next, base_, hyper, features),
      x_(Var<T>::constant(to_batch<T>(triple.x))),
      x_next_(Var<T>::constant(to_batch<T>(triple.x_next))),
      x_edit_(Var<T>::constant(to_batch<T>(triple.x_edit))) {
  if (triple.x_edit.stage_index != triple.x.stage_index || !triple.x_edit.same_geometry(triple.x)) {
    throw std::invalid_argument("L2R: edit proxy must be a same-stage image of the same geometry");
  }
}

template <typename T>
std::vector<double> L2RObjective<T>::warm_start(std::span<const double> w, int steps) const {
  std::vector<double> delta(base_.size(), 0.0);
  std::vector<double> grad;
  for (int t = 0; t < steps; ++t) {
    inner_.evaluate(delta, &grad);
    delta = inner_update(delta, grad, w, hyper_.alpha);
  }
  return delta;
}

template <typename T>
MetaGradient L2RObjective<T>::evaluate(std::span<const double> delta_start, std::span<const double> w,
                                       bool need_grad) const {
  if (w.size() != base_.size()) throw std::invalid_argument("L2R: weight length mismatch");
  std::vector<double> g;
  inner_.evaluate(delta_start, &g);
  const std::vector<double> stepped = inner_update(delta_start, g, w, hyper_.alpha);

  nn::FreezeGuard<T> freeze_g(net_.generator_params());
  nn::FreezeGuard<T> freeze_d(net_.discriminator_params());
  Var<T> d = Var<T>::leaf(row_tensor<T>(stepped), need_grad);
  Var<T> ada = nn::add(Var<T>::constant(row_tensor<T>(base_)), d);
  Var<T> ada_part = ada_loss(net_.generate(x_, ada), x_next_, hyper_, features_);
  Var<T> gan_part = adversarial_term(net_.discriminate(net_.generate(x_edit_, ada)));
  Var<T> total = nn::add(ada_part, nn::scale(gan_part, static_cast<T>(hyper_.lambda_gan)));

  MetaGradient out;
  out.loss = static_cast<double>(total.item());
  out.ada_part = static_cast<double>(ada_part.item());
  out.gan_part = static_cast<double>(gan_part.item());
  if (need_grad) {
    nn::backward(total);
    const auto& dg = d.grad();
    out.grad_w.resize(w.size());
    // d(stepped_k)/d(w_k) = -alpha * delta_start_k
    for (std::size_t k = 0; k < w.size(); ++k) {
      out.grad_w[k] = static_cast<double>(dg[k]) * (-hyper_.alpha * delta_start[k]);
    }
  }
  return out;
}

template <typename T>
void l2r_train_step(const GenerationNet<T>& net, L2RTrainState& state, const L2RTriple& triple,
                    const HyperParams& hyper, const FeatureExtractor<T>& features, const L2ROptions& options) {
  if (static_cast<int>(state.reg.w.size()) != net.adain_dim()) {
    throw std::invalid_argument("l2r_train_step: regularizer length must be " + std::to_string(net.adain_dim()));
  }
  if (options.optimizer != "adam" && options.optimizer != "sgd") {
    throw std::invalid_argument("l2r_train_step: optimizer must be 'adam' or 'sgd'");
  }
  L2RObjective<T> objective(net, triple, hyper, features);
  const auto start = objective.warm_start(state.reg.w, options.warmup_steps);
  MetaGradient mg = objective.evaluate(start, state.reg.w, true);
  const bool finite = std::isfinite(mg.loss) &&
                      std::all_of(mg.grad_w.begin(), mg.grad_w.end(), [](double v) { return std::isfinite(v); });
  ++state.outer_step;
  if (!finite) {
    state.skipped_steps.push_back(state.outer_step);
    return;
  }
  auto& w = state.reg.w;
  if (options.optimizer == "sgd") {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= hyper.eta * mg.grad_w[k];
  } else {
    state.optimizer.step(w, mg.grad_w);
  }
  for (auto& v : w) v = std::max(v, 0.0);
  state.loss_history.emplace_back(mg.ada_part, mg.gan_part);
}

L2RTriple sample_l2r_triple(std::span<const StagedExample> examples, int stage_index, std::uint64_t seed, int step) {
  if (examples.size() < 2) throw std::invalid_argument("regularizer training needs at least two examples");
  Rng rng(Rng::derive(seed, {0x4c3252ULL, static_cast<std::uint64_t>(stage_index), static_cast<std::uint64_t>(step)}));
  const int n = static_cast<int>(examples.size());
  const int a = rng.uniform_int(0, n - 1);
  int b = rng.uniform_int(0, n - 2);
  if (b >= a) ++b;
  const auto& ea = examples[a].images;
  const auto& eb = examples[b].images;
  if (static_cast<int>(ea.size()) <= stage_index || static_cast<int>(eb.size()) <= stage_index) {
    throw stage_error("regularizer training: example lacks stage " + std::to_string(stage_index + 1));
  }
  return {ea[stage_index - 1], ea[stage_index], eb[stage_index - 1]};
}

template <typename T>
RegularizerWeights train_regularizer(const GenerationNet<T>& net, std::span<const StagedExample> examples,
                                     const HyperParams& hyper, std::uint64_t seed,
                                     const FeatureExtractor<T>& features, const L2ROptions& options,
                                     L2RTrainState* state, const L2RProgress& progress) {
  L2RTrainState local = L2RTrainState::start(net.stage_index(), net.adain_channels(), hyper);
  L2RTrainState& s = state ? *state : local;
  if (state && s.reg.w.empty()) s = L2RTrainState::start(net.stage_index(), net.adain_channels(), hyper);
  while (s.outer_step < hyper.T_reg) {
    const L2RTriple triple = sample_l2r_triple(examples, net.stage_index(), seed, s.outer_step);
    l2r_train_step(net, s, triple, hyper, features, options);
    if (progress) progress(s);
  }
  return s.reg;
}

#define ARTFLOW_INSTANTIATE_L2R(T)                                                                           \
  template class L2RObjective<T>;                                                                            \
  template void l2r_train_step(const GenerationNet<T>&, L2RTrainState&, const L2RTriple&, const HyperParams&, \
                               const FeatureExtractor<T>&, const L2ROptions&);                               \
  template RegularizerWeights train_regularizer(const GenerationNet<T>&, std::span<const StagedExample>,     \
                                                const HyperParams&, std::uint64_t, const FeatureExtractor<T>&, \
                                                const L2ROptions&, L2RTrainState*, const L2RProgress&);

ARTFLOW_INSTANTIATE_L2R(float)
ARTFLOW_INSTANTIATE_L2R(double)

}  // namespace artflow
