// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "artflow/types.hpp"

namespace artflow {

class image_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit code <-> [-1, 1] float. The pair round-trips every code exactly.
float from_u8(std::uint8_t q);
std::uint8_t to_u8(float v);

/// Snaps every pixel to the nearest 8-bit level.
void quantize8(StageImage& image);

/// Decodes PNG bytes (any color type) to an RGB or gray image.
StageImage decode_png(std::span<const std::uint8_t> bytes, int stage_index, int channels = 3);
std::vector<std::uint8_t> encode_png(const StageImage& image);
StageImage read_png(const std::filesystem::path& path, int stage_index, int channels = 3);
void write_png(const std::filesystem::path& path, const StageImage& image);

/// Bilinear resampling (pixel-center aligned).
StageImage resize_bilinear(const StageImage& image, int height, int width);

}  // namespace artflow
