// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "artflow/config.hpp"
#include "artflow/types.hpp"

namespace artflow {

class dataset_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-pixel segment ids, row-major.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> labels;

  int at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  int count() const;  // number of distinct labels
};

/// Line drawing: gray -> Sobel magnitude (normalized so a unit step edge
/// scores 1) -> threshold -> dark lines (-1) on white (+1).
StageImage stage_sketch(const StageImage& image, double threshold = 0.15);

/// Per-channel median of each segment (mean of the middle pair for even counts).
StageImage stage_flat_color(const StageImage& image, const LabelMap& segments);

/// CIELAB of an RGB pixel given in [-1, 1].
void rgb_to_lab(double r, double g, double b, double& L, double& A, double& B);

struct SlicResult {
  LabelMap labels;
  std::vector<std::array<double, 5>> centers;  // (L, a, b, y, x)
  double grid_step = 0.0;
};

/// SLIC superpixels on (L, a, b, y, x) with distance
/// sqrt(d_lab^2 + (d_xy / S)^2 * m^2); labels are compacted to 0..k-1.
SlicResult slic(const StageImage& image, int num_superpixels, double compactness = 10.0, int iterations = 10);

/// k x k vector-median filter (L1): each output pixel is the window pixel
/// with the least summed L1 distance to the others, so no new colors appear.
/// Edges replicate.
StageImage median_filter(const StageImage& image, int kernel);

/// SLIC -> per-superpixel median fill -> median filter.
StageImage stage_rough_color(const StageImage& image, int num_superpixels, const StagingConfig& staging = {});

/// Procedural stages of one artwork: sketch, then (N = 3) rough color, then
/// the artwork itself, resized to the workflow geometry.
StagedExample stage_artwork(std::string id, const StageImage& artwork, const WorkflowConfig& cfg,
                            int num_superpixels);

/// Procedural multi-stage scenes. N = 2 (sketch, detail), N = 3 (sketch,
/// flat, detail) or N = 4 (sketch, flat, shaded, lit). Pixels sit on the
/// 8-bit grid so PNG export is lossless.
std::vector<StagedExample> make_synthetic_workflow_dataset(int count, const WorkflowConfig& cfg, std::uint64_t seed);

/// `<root>/<stage_name>/<id>.png` plus `<root>/manifest.json`.
void export_dataset(const std::filesystem::path& root, std::span<const StagedExample> examples,
                    const WorkflowConfig& cfg);

struct Corpus {
  WorkflowConfig config;
  std::vector<StagedExample> examples;
};

Corpus load_dataset(const std::filesystem::path& root);

/// Splits off the last `test_count` examples.
std::pair<std::vector<StagedExample>, std::vector<StagedExample>> split_dataset(std::vector<StagedExample> all,
                                                                               int test_count);

}  // namespace artflow
