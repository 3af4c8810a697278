// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "artflow/config.hpp"
#include "artflow/nn/tensor.hpp"

namespace artflow {

/// Image bound to a workflow stage (1-based). Pixels are CHW floats in [-1, 1].
struct StageImage {
  int stage_index = 0;
  nn::Tensor<float> pixels;

  StageImage() = default;
  StageImage(int stage, int channels, int height, int width, float fill = 0.0f)
      : stage_index(stage), pixels({channels, height, width}, fill) {}
  StageImage(int stage, nn::Tensor<float> chw) : stage_index(stage), pixels(std::move(chw)) {}

  int channels() const { return pixels.dim(0); }
  int height() const { return pixels.dim(1); }
  int width() const { return pixels.dim(2); }
  float& at(int c, int y, int x) {
    return pixels[(static_cast<std::size_t>(c) * height() + y) * width() + x];
  }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height() + y) * width() + x];
  }
  bool same_geometry(const StageImage& o) const { return pixels.shape() == o.pixels.shape(); }
  void clamp();
};

/// Stage-specific variation vector z_i.
struct LatentCode {
  int stage_index = 0;
  std::vector<double> values;
};

/// AdaIN transformation parameters of one stage: the encoded base and the
/// optimized increment. Layout per layer k (0..3): c scales then c biases.
struct AdaINParams {
  int stage_index = 0;
  std::vector<double> base;
  std::vector<double> delta;

  AdaINParams() = default;
  AdaINParams(int stage, std::vector<double> b)
      : stage_index(stage), base(std::move(b)), delta(base.size(), 0.0) {}

  std::vector<double> effective() const;
};

/// Per-entry weight-decay strengths for the AdaIN increment.
struct RegularizerWeights {
  int stage_index = 0;
  std::vector<double> w;

  static constexpr double kInitialValue = 0.001;
  static RegularizerWeights initial(int stage, int adain_channels) {
    return {stage, std::vector<double>(static_cast<std::size_t>(8 * adain_channels), kInitialValue)};
  }
  static RegularizerWeights constant(int stage, int adain_channels, double value) {
    return {stage, std::vector<double>(static_cast<std::size_t>(8 * adain_channels), value)};
  }
};

/// One aligned workflow sample: images for stages 1..N.
struct StagedExample {
  std::string id;
  std::vector<StageImage> images;
};

/// Same stage, shape and bit pattern.
bool identical(const StageImage& a, const StageImage& b);

class stage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Draws z_i ~ N(0, I) deterministically from (seed, stage).
LatentCode sample_latent(std::uint64_t rng_seed, int stage_index, const WorkflowConfig& cfg);

/// Stacks images into an NCHW tensor of scalar type T.
template <typename T>
nn::Tensor<T> to_batch(std::span<const StageImage> images);
template <typename T>
nn::Tensor<T> to_batch(const StageImage& image) {
  return to_batch<T>(std::span<const StageImage>(&image, 1));
}
/// Extracts batch element n as a stage image, clamped to [-1, 1].
template <typename T>
StageImage from_batch(const nn::Tensor<T>& batch, int n, int stage_index);

template <typename T>
nn::Tensor<T> row_tensor(std::span<const double> values) {
  nn::Tensor<T> t({1, static_cast<int>(values.size())});
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = static_cast<T>(values[i]);
  return t;
}

}  // namespace artflow
