// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/adain_optimization.hpp"

#include <cmath>
#include <stdexcept>

namespace artflow {
namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void require_same_geometry(const StageImage& a, const StageImage& b, const char* what) {
  if (!a.same_geometry(b)) {
    throw std::invalid_argument(std::string(what) + ": image geometry mismatch (" + nn::Tensor<float>::shape_string(a.pixels.shape()) +
                                " vs " + nn::Tensor<float>::shape_string(b.pixels.shape()) + ")");
  }
}

template <typename T>
std::vector<double> to_vector(const nn::Tensor<T>& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

}  // namespace

void to_json(nlohmann::json& j, const OptState& s) {
  j = {{"stage_index", s.stage_index},
       {"base", s.ada.base},
       {"delta", s.ada.delta},
       {"loss_trace", s.loss_trace},
       {"failed", s.failed}};
  if (!s.failure.empty()) j["failure"] = s.failure;
  if (s.reg_weights) j["reg_weights"] = s.reg_weights->w;
  if (s.latent) j["latent"] = s.latent->values;
}

void from_json(const nlohmann::json& j, OptState& s) {
  s.stage_index = j.at("stage_index").get<int>();
  s.ada.stage_index = s.stage_index;
  s.ada.base = j.at("base").get<std::vector<double>>();
  s.ada.delta = j.at("delta").get<std::vector<double>>();
  if (s.ada.base.size() != s.ada.delta.size()) throw std::invalid_argument("OptState: base/delta length mismatch");
  s.loss_trace = j.value("loss_trace", std::vector<double>{});
  s.failed = j.value("failed", false);
  s.failure = j.value("failure", std::string{});
  s.reg_weights.reset();
  s.latent.reset();
  if (j.contains("reg_weights")) s.reg_weights = RegularizerWeights{s.stage_index, j["reg_weights"].get<std::vector<double>>()};
  if (j.contains("latent")) s.latent = LatentCode{s.stage_index, j["latent"].get<std::vector<double>>()};
}

double QuadraticObjective::evaluate(std::span<const double> x, std::vector<double>* grad) const {
  if (x.size() != target_.size()) throw std::invalid_argument("QuadraticObjective: length mismatch");
  double loss = 0.0;
  if (grad) grad->assign(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - target_[i];
    loss += 0.5 * d * d;
    if (grad) (*grad)[i] = d;
  }
  return loss;
}

std::vector<double> inner_update(std::span<const double> delta, std::span<const double> grad,
                                 std::span<const double> w, double alpha) {
  if (grad.size() != delta.size() || (!w.empty() && w.size() != delta.size())) {
    throw std::invalid_argument("inner_update: length mismatch (delta " + std::to_string(delta.size()) + ", grad " +
                                std::to_string(grad.size()) + ", w " + std::to_string(w.size()) + ")");
  }
  std::vector<double> out(delta.size());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const double decay = w.empty() ? 0.0 : w[k] * delta[k];
    out[k] = delta[k] - alpha * (grad[k] + decay);
  }
  return out;
}

DescentResult gradient_descent(const Objective& f, std::vector<double> x0, double alpha, int iterations,
                               std::span<const double> w) {
  DescentResult r;
  r.x = std::move(x0);
  std::vector<double> prev = r.x;
  std::vector<double> grad;
  for (int t = 0; t < iterations; ++t) {
    const double loss = f.evaluate(r.x, &grad);
    if (!std::isfinite(loss) || !all_finite(grad)) {
      r.failed = true;
      r.failure = "non-finite loss or gradient at iteration " + std::to_string(t);
      if (t > 0) r.x = prev;
      return r;
    }
    r.trace.push_back(loss);
    prev = r.x;
    r.x = inner_update(r.x, grad, w, alpha);
  }
  const double final_loss = f.evaluate(r.x, nullptr);
  if (std::isfinite(final_loss) && all_finite(r.x)) {
    r.trace.push_back(final_loss);
  } else {
    r.failed = true;
    r.failure = "non-finite loss after the final step";
    r.x = prev;
  }
  return r;
}

template <typename T>
Var<T> ada_loss(const Var<T>& candidate, const Var<T>& reference, const HyperParams& hyper,
                const FeatureExtractor<T>& features) {
  Var<T> loss = nn::l1_loss(candidate, reference);
  if (hyper.lambda_p != 0.0) {
    loss = nn::add(loss, nn::scale(perceptual_distance(candidate, reference, features), static_cast<T>(hyper.lambda_p)));
  }
  return loss;
}

double ada_loss(const StageImage& candidate, const StageImage& reference, const HyperParams& hyper,
                const FeatureExtractor<float>& features) {
  require_same_geometry(candidate, reference, "ada_loss");
  return static_cast<double>(ada_loss(Var<float>::constant(to_batch<float>(candidate)),
                                      Var<float>::constant(to_batch<float>(reference)), hyper, features)
                                 .item());
}

template <typename T>
AdaINObjective<T>::AdaINObjective(const GenerationNet<T>& net, const StageImage& input, const StageImage& reference,
                                  std::vector<double> base, const HyperParams& hyper,
                                  const FeatureExtractor<T>& features)
    : net_(net),
      input_(Var<T>::constant(to_batch<T>(input))),
      reference_(Var<T>::constant(to_batch<T>(reference))),
      base_(row_tensor<T>(base)),
      hyper_(hyper),
      features_(features) {
  require_same_geometry(input, reference, "AdaIN objective");
  if (static_cast<int>(base.size()) != net.adain_dim()) throw std::invalid_argument("AdaIN objective: bad base length");
}

template <typename T>
double AdaINObjective<T>::evaluate(std::span<const double> delta, std::vector<double>* grad) const {
  if (delta.size() != base_.size()) throw std::invalid_argument("AdaIN objective: delta length mismatch");
  nn::FreezeGuard<T> freeze(net_.generator_params());
  Var<T> d = Var<T>::leaf(row_tensor<T>(delta), grad != nullptr);
  Var<T> out = net_.generate(input_, nn::add(Var<T>::constant(base_), d));
  Var<T> loss = ada_loss(out, reference_, hyper_, features_);
  if (grad) {
    nn::backward(loss);
    *grad = to_vector(d.grad());
  }
  return static_cast<double>(loss.item());
}

template <typename T>
LatentObjective<T>::LatentObjective(const GenerationNet<T>& net, const StageImage& input, const StageImage& reference,
                                    const HyperParams& hyper, const FeatureExtractor<T>& features)
    : net_(net),
      input_(Var<T>::constant(to_batch<T>(input))),
      reference_(Var<T>::constant(to_batch<T>(reference))),
      hyper_(hyper),
      features_(features) {
  require_same_geometry(input, reference, "latent objective");
}

template <typename T>
double LatentObjective<T>::evaluate(std::span<const double> z, std::vector<double>* grad) const {
  if (static_cast<int>(z.size()) != net_.latent_dim()) throw std::invalid_argument("latent objective: bad length");
  nn::FreezeGuard<T> freeze(net_.generator_params());
  Var<T> zv = Var<T>::leaf(row_tensor<T>(z), grad != nullptr);
  Var<T> out = net_.generate(input_, net_.map_latent(zv));
  Var<T> loss = ada_loss(out, reference_, hyper_, features_);
  if (grad) {
    nn::backward(loss);
    *grad = to_vector(zv.grad());
  }
  return static_cast<double>(loss.item());
}

template <typename T>
OptState adain_optimize(const GenerationNet<T>& net, const StageImage& input_image, const StageImage& reference,
                        const HyperParams& hyper, const std::optional<RegularizerWeights>& reg,
                        const FeatureExtractor<T>& features) {
  if (input_image.stage_index != net.stage_index() || reference.stage_index != net.stage_index() + 1) {
    throw stage_error("adain_optimize: stage " + std::to_string(net.stage_index()) + " expects input stage " +
                      std::to_string(net.stage_index()) + " and reference stage " +
                      std::to_string(net.stage_index() + 1));
  }
  if (reg && static_cast<int>(reg->w.size()) != net.adain_dim()) {
    throw std::invalid_argument("adain_optimize: regularizer length must be " + std::to_string(net.adain_dim()));
  }
  OptState state;
  state.stage_index = net.stage_index();
  state.latent = encode_latent(net, reference);
  state.ada = latent_to_adain(net, *state.latent);
  state.reg_weights = reg;

  AdaINObjective<T> objective(net, input_image, reference, state.ada.base, hyper, features);
  std::span<const double> w;
  if (reg) w = reg->w;
  DescentResult r = gradient_descent(objective, state.ada.delta, hyper.alpha, hyper.T, w);
  state.ada.delta = std::move(r.x);
  state.loss_trace = std::move(r.trace);
  state.failed = r.failed;
  state.failure = std::move(r.failure);
  return state;
}

template <typename T>
Reconstruction reconstruct_sequential(const std::vector<GenerationNet<T>>& gen_nets,
                                      const std::vector<StageImage>& inferred, const HyperParams& hyper,
                                      const std::vector<std::optional<RegularizerWeights>>& regs,
                                      const FeatureExtractor<T>& features, const std::string& alg1_input,
                                      const std::function<void(const OptState&)>& on_stage) {
  const std::size_t n = inferred.size();
  if (n < 2 || gen_nets.size() != n - 1) {
    throw std::invalid_argument("reconstruct_sequential: need N stage images and N-1 generation networks");
  }
  if (!regs.empty() && regs.size() != n - 1) {
    throw std::invalid_argument("reconstruct_sequential: need one regularizer slot per stage");
  }
  if (alg1_input != "optimized" && alg1_input != "inferred") {
    throw std::invalid_argument("reconstruct_sequential: alg1_input must be 'optimized' or 'inferred'");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (inferred[k].stage_index != static_cast<int>(k) + 1) {
      throw stage_error("reconstruct_sequential: inferred images must be stages 1..N in order");
    }
  }
  Reconstruction rec;
  rec.images.push_back(inferred[0]);
  StageImage input = inferred[0];
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& net = gen_nets[k];
    std::optional<RegularizerWeights> reg;
    if (!regs.empty()) reg = regs[k];
    OptState st = adain_optimize(net, input, inferred[k + 1], hyper, reg, features);
    StageImage out = generate_next(net, input, st.ada);
    if (on_stage) on_stage(st);
    rec.states.push_back(std::move(st));
    rec.images.push_back(out);
    input = alg1_input == "inferred" ? inferred[k + 1] : std::move(out);
  }
  return rec;
}

template <typename T>
std::vector<StageImage> replay_generation(const std::vector<GenerationNet<T>>& gen_nets, const StageImage& first,
                                          const std::vector<AdaINParams>& params) {
  if (params.size() != gen_nets.size()) throw std::invalid_argument("replay_generation: one AdaIN set per stage");
  std::vector<StageImage> out{first};
  for (std::size_t k = 0; k < gen_nets.size(); ++k) out.push_back(generate_next(gen_nets[k], out.back(), params[k]));
  return out;
}

#define ARTFLOW_INSTANTIATE_ADAIN(T)                                                                              \
  template Var<T> ada_loss(const Var<T>&, const Var<T>&, const HyperParams&, const FeatureExtractor<T>&);         \
  template class AdaINObjective<T>;                                                                               \
  template class LatentObjective<T>;                                                                              \
  template OptState adain_optimize(const GenerationNet<T>&, const StageImage&, const StageImage&,                 \
                                   const HyperParams&, const std::optional<RegularizerWeights>&,                  \
                                   const FeatureExtractor<T>&);                                                   \
  template Reconstruction reconstruct_sequential(const std::vector<GenerationNet<T>>&,                            \
                                                 const std::vector<StageImage>&, const HyperParams&,              \
                                                 const std::vector<std::optional<RegularizerWeights>>&,           \
                                                 const FeatureExtractor<T>&, const std::string&,                  \
                                                 const std::function<void(const OptState&)>&);                    \
  template std::vector<StageImage> replay_generation(const std::vector<GenerationNet<T>>&, const StageImage&,     \
                                                     const std::vector<AdaINParams>&);

ARTFLOW_INSTANTIATE_ADAIN(float)
ARTFLOW_INSTANTIATE_ADAIN(double)

}  // namespace artflow
