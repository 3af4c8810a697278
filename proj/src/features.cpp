// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/features.hpp"

#include <algorithm>
#include <mutex>
#include <tuple>
#include <stdexcept>

#include "artflow/checkpoint.hpp"

#ifndef ARTFLOW_ASSETS_DIR
#define ARTFLOW_ASSETS_DIR ""
#endif

namespace artflow {
namespace {

constexpr int kWidths[RandomConvFeatures<float>::kLayers] = {16, 32, 32, 64};
constexpr int kStrides[RandomConvFeatures<float>::kLayers] = {1, 2, 2, 2};

void check_layers(const std::vector<int>& layers) {
  if (layers.empty()) throw std::invalid_argument("feature extractor needs at least one layer");
  for (int l : layers)
    if (l < 0 || l >= RandomConvFeatures<float>::kLayers) throw std::invalid_argument("feature layer out of range");
}

}  // namespace

template <typename T>
void RandomConvFeatures<T>::build(int channels, Rng& rng) {
  channels_ = channels;
  int cin = channels;
  for (int l = 0; l < kLayers; ++l) {
    nn::Conv2d<T> conv;
    conv.stride = kStrides[l];
    conv.pad = 1;
    // Draw in float so float and double extractors carry identical weights.
    auto w = nn::he_normal<float>({kWidths[l], cin, 3, 3}, cin * 9, rng);
    conv.weight = params_.add("features.c" + std::to_string(l) + ".weight", w.template cast<T>());
    conv.bias = params_.add("features.c" + std::to_string(l) + ".bias", nn::Tensor<T>({kWidths[l]}));
    convs_.push_back(conv);
    cin = kWidths[l];
  }
  params_.set_trainable(false);
}

template <typename T>
RandomConvFeatures<T>::RandomConvFeatures(int channels, std::uint64_t seed, std::vector<int> layers)
    : layers_(std::move(layers)) {
  check_layers(layers_);
  Rng rng(seed);
  build(channels, rng);
}

template <typename T>
RandomConvFeatures<T> RandomConvFeatures<T>::load(const std::filesystem::path& path, std::vector<int> layers) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != "features") throw checkpoint_error(path.string() + " is not a feature extractor file");
  RandomConvFeatures out;
  out.layers_ = std::move(layers);
  check_layers(out.layers_);
  Rng rng(0);
  out.build(ckpt.meta.value("channels", 3), rng);
  import_params(out.params_, ckpt);
  return out;
}

template <typename T>
void RandomConvFeatures<T>::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.kind = "features";
  ckpt.meta = {{"channels", channels_}, {"widths", std::vector<int>(std::begin(kWidths), std::end(kWidths))}};
  export_params(params_, ckpt.tensors);
  write_checkpoint(path, ckpt);
}

template <typename T>
std::vector<Var<T>> RandomConvFeatures<T>::feature_maps(const Var<T>& images) const {
  std::vector<Var<T>> out;
  Var<T> h = images;
  const int last = *std::max_element(layers_.begin(), layers_.end());
  for (int l = 0; l <= last; ++l) {
    h = nn::relu(convs_[l](h));
    if (std::find(layers_.begin(), layers_.end(), l) != layers_.end()) out.push_back(h);
  }
  return out;
}

template <typename T>
std::vector<std::vector<double>> embed_images(const FeatureExtractor<T>& features, std::span<const StageImage> images,
                                              int batch) {
  std::vector<std::vector<double>> rows;
  rows.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(batch), images.size() - start);
    const auto maps = features.feature_maps(Var<T>::constant(to_batch<T>(images.subspan(start, n))));
    std::vector<Var<T>> pooled;
    for (const auto& m : maps) pooled.push_back(nn::global_avg_pool(m));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row;
      for (const auto& p : pooled) {
        const int d = p.dim(1);
        for (int j = 0; j < d; ++j) row.push_back(static_cast<double>(p.value()[i * d + j]));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

template <typename T>
Var<T> perceptual_distance(const Var<T>& a, const Var<T>& b, const FeatureExtractor<T>& features) {
  const auto fa = features.feature_maps(a);
  const auto fb = features.feature_maps(b);
  Var<T> total;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    Var<T> d = nn::l1_loss(fa[l], fb[l]);
    total = total.defined() ? nn::add(total, d) : d;
  }
  return nn::scale(total, T(1) / static_cast<T>(fa.size()));
}

namespace {

template <typename T>
std::shared_ptr<const RandomConvFeatures<T>> cached_extractor(int channels, std::uint64_t seed,
                                                              const std::filesystem::path& assets_dir,
                                                              const char* file, const std::vector<int>& layers) {
  static std::mutex mu;
  static std::vector<std::tuple<int, std::uint64_t, std::string, std::shared_ptr<const RandomConvFeatures<T>>>> cache;
  std::lock_guard lock(mu);
  const std::filesystem::path dir = assets_dir.empty() ? std::filesystem::path(ARTFLOW_ASSETS_DIR) : assets_dir;
  for (const auto& [c, s, d, ptr] : cache)
    if (c == channels && s == seed && d == dir.string()) return ptr;
  std::shared_ptr<const RandomConvFeatures<T>> ptr;
  const auto path = dir / file;
  if (channels == 3 && !dir.empty() && std::filesystem::exists(path)) {
    ptr = std::make_shared<const RandomConvFeatures<T>>(RandomConvFeatures<T>::load(path, layers));
  } else {
    ptr = std::make_shared<const RandomConvFeatures<T>>(channels, seed, layers);
  }
  cache.emplace_back(channels, seed, dir.string(), ptr);
  return ptr;
}

}  // namespace

template <typename T>
std::shared_ptr<const RandomConvFeatures<T>> default_perceptual_features(int channels,
                                                                          const std::filesystem::path& assets_dir) {
  return cached_extractor<T>(channels, kPerceptualFeatureSeed, assets_dir, "perceptual_features.ckpt", {0, 1, 2, 3});
}

template <typename T>
std::shared_ptr<const RandomConvFeatures<T>> default_fid_features(int channels,
                                                                   const std::filesystem::path& assets_dir) {
  return cached_extractor<T>(channels, kFidFeatureSeed, assets_dir, "fid_features.ckpt", {1, 2, 3});
}

template class RandomConvFeatures<float>;
template class RandomConvFeatures<double>;
template std::vector<std::vector<double>> embed_images(const FeatureExtractor<float>&, std::span<const StageImage>,
                                                       int);
template std::vector<std::vector<double>> embed_images(const FeatureExtractor<double>&, std::span<const StageImage>,
                                                       int);
template Var<float> perceptual_distance(const Var<float>&, const Var<float>&, const FeatureExtractor<float>&);
template Var<double> perceptual_distance(const Var<double>&, const Var<double>&, const FeatureExtractor<double>&);
template std::shared_ptr<const RandomConvFeatures<float>> default_perceptual_features<float>(
    int, const std::filesystem::path&);
template std::shared_ptr<const RandomConvFeatures<double>> default_perceptual_features<double>(
    int, const std::filesystem::path&);
template std::shared_ptr<const RandomConvFeatures<float>> default_fid_features<float>(int,
                                                                                      const std::filesystem::path&);
template std::shared_ptr<const RandomConvFeatures<double>> default_fid_features<double>(
    int, const std::filesystem::path&);

}  // namespace artflow
