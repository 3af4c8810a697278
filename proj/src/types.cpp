// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/types.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "artflow/rng.hpp"

namespace artflow {

bool identical(const StageImage& a, const StageImage& b) {
  return a.stage_index == b.stage_index && a.same_geometry(b) &&
         std::memcmp(a.pixels.data(), b.pixels.data(), a.pixels.size() * sizeof(float)) == 0;
}

void StageImage::clamp() {
  for (float& v : pixels.values()) v = std::clamp(v, -1.0f, 1.0f);
}

std::vector<double> AdaINParams::effective() const {
  if (base.size() != delta.size()) throw std::invalid_argument("AdaINParams: base/delta length mismatch");
  std::vector<double> e(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) e[i] = base[i] + delta[i];
  return e;
}

LatentCode sample_latent(std::uint64_t rng_seed, int stage_index, const WorkflowConfig& cfg) {
  if (stage_index < 1 || stage_index > cfg.num_stages - 1) {
    throw stage_error("latent stage index " + std::to_string(stage_index) + " outside [1, " +
                      std::to_string(cfg.num_stages - 1) + "]");
  }
  Rng rng(Rng::derive(rng_seed, {0x1a7e47ULL, static_cast<std::uint64_t>(stage_index)}));
  LatentCode z{stage_index, std::vector<double>(static_cast<std::size_t>(cfg.latent_dim))};
  for (double& v : z.values) v = rng.normal();
  return z;
}

template <typename T>
nn::Tensor<T> to_batch(std::span<const StageImage> images) {
  if (images.empty()) throw std::invalid_argument("to_batch: no images");
  const auto& shape = images.front().pixels.shape();
  nn::Tensor<T> out({static_cast<int>(images.size()), shape[0], shape[1], shape[2]});
  const std::size_t per = images.front().pixels.size();
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].pixels.shape() != shape) throw std::invalid_argument("to_batch: geometry mismatch");
    std::copy(images[n].pixels.data(), images[n].pixels.data() + per, out.data() + n * per);
  }
  return out;
}

template <typename T>
StageImage from_batch(const nn::Tensor<T>& batch, int n, int stage_index) {
  const int c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  StageImage img(stage_index, c, h, w);
  const std::size_t per = img.pixels.size();
  const T* src = batch.data() + static_cast<std::size_t>(n) * per;
  for (std::size_t i = 0; i < per; ++i) img.pixels[i] = static_cast<float>(src[i]);
  img.clamp();
  return img;
}

template nn::Tensor<float> to_batch<float>(std::span<const StageImage>);
template nn::Tensor<double> to_batch<double>(std::span<const StageImage>);
template StageImage from_batch<float>(const nn::Tensor<float>&, int, int);
template StageImage from_batch<double>(const nn::Tensor<double>&, int, int);

}  // namespace artflow
