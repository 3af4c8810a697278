// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "artflow/nn/layers.hpp"
#include "artflow/types.hpp"

namespace artflow {

using nn::Var;

/// Frozen image feature extractor used by the perceptual loss and FID.
template <typename T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  /// Feature maps at the configured layers for images[B, C, H, W].
  virtual std::vector<Var<T>> feature_maps(const Var<T>& images) const = 0;
};

/// Fixed, randomly initialized four-layer conv stack (3x3 kernels, ReLU,
/// widths 16/32/32/64, strides 1/2/2/2). Weights come from a seed or a file.
template <typename T>
class RandomConvFeatures final : public FeatureExtractor<T> {
 public:
  static constexpr int kLayers = 4;

  RandomConvFeatures(int channels, std::uint64_t seed, std::vector<int> layers = {0, 1, 2, 3});
  static RandomConvFeatures load(const std::filesystem::path& path, std::vector<int> layers = {0, 1, 2, 3});
  void save(const std::filesystem::path& path) const;

  std::vector<Var<T>> feature_maps(const Var<T>& images) const override;
  const std::vector<int>& layers() const { return layers_; }
  std::uint64_t checksum() const { return params_.checksum(); }

 private:
  RandomConvFeatures() = default;
  void build(int channels, Rng& rng);

  nn::ParamSet<T> params_;
  std::vector<nn::Conv2d<T>> convs_;
  std::vector<int> layers_;
  int channels_ = 3;
};

/// Seeds of the two shipped extractors.
inline constexpr std::uint64_t kPerceptualFeatureSeed = 0x5eed0001ULL;
inline constexpr std::uint64_t kFidFeatureSeed = 0x5eed0002ULL;

/// Per-image embedding: channel means of every feature map, concatenated.
template <typename T>
std::vector<std::vector<double>> embed_images(const FeatureExtractor<T>& features, std::span<const StageImage> images,
                                              int batch = 32);

/// Mean over layers of the mean absolute feature difference.
template <typename T>
Var<T> perceptual_distance(const Var<T>& a, const Var<T>& b, const FeatureExtractor<T>& features);

/// Default extractors: loaded from `assets_dir` when the files exist,
/// otherwise regenerated from the fixed seeds (identical weights). The
/// perceptual extractor reads all four layers, the FID extractor layers 1..3
/// (a 128-dimensional embedding).
template <typename T>
std::shared_ptr<const RandomConvFeatures<T>> default_perceptual_features(int channels,
                                                                          const std::filesystem::path& assets_dir = {});
template <typename T>
std::shared_ptr<const RandomConvFeatures<T>> default_fid_features(int channels,
                                                                   const std::filesystem::path& assets_dir = {});

}  // namespace artflow
