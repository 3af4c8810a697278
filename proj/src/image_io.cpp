// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace artflow {

float from_u8(std::uint8_t q) { return static_cast<float>(static_cast<double>(q) / 255.0 * 2.0 - 1.0); }

std::uint8_t to_u8(float v) {
  const double x = std::clamp((static_cast<double>(v) + 1.0) * 127.5, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::lround(x));
}

void quantize8(StageImage& image) {
  for (auto& v : image.pixels.values()) v = from_u8(to_u8(v));
}

StageImage decode_png(std::span<const std::uint8_t> bytes, int stage_index, int channels) {
  if (channels != 1 && channels != 3) throw image_error("decode_png: channels must be 1 or 3");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw image_error(std::string("cannot decode PNG: ") + img.message);
  }
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw image_error(std::string("cannot decode PNG: ") + img.message);
  }
  const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
  StageImage out(stage_index, channels, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        out.at(c, y, x) = from_u8(buf[(static_cast<std::size_t>(y) * w + x) * channels + c]);
  return out;
}

std::vector<std::uint8_t> encode_png(const StageImage& image) {
  const int C = image.channels(), h = image.height(), w = image.width();
  if (C != 1 && C != 3) throw image_error("encode_png: channels must be 1 or 3");
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(C) * h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < C; ++c) buf[(static_cast<std::size_t>(y) * w + x) * C + c] = to_u8(image.at(c, y, x));
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = C == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, buf.data(), 0, nullptr)) {
    throw image_error(std::string("cannot encode PNG: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, buf.data(), 0, nullptr)) {
    throw image_error(std::string("cannot encode PNG: ") + img.message);
  }
  out.resize(size);
  return out;
}

StageImage read_png(const std::filesystem::path& path, int stage_index, int channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw image_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes, stage_index, channels);
  } catch (const image_error& e) {
    throw image_error(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const StageImage& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw image_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw image_error("failed writing " + path.string());
}

StageImage resize_bilinear(const StageImage& image, int height, int width) {
  if (height <= 0 || width <= 0) throw image_error("resize: target size must be positive");
  if (image.height() == height && image.width() == width) return image;
  const int C = image.channels(), H = image.height(), W = image.width();
  StageImage out(image.stage_index, C, height, width);
  const double sy = static_cast<double>(H) / height, sx = static_cast<double>(W) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(H - 1));
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, H - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(W - 1));
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, W - 1);
      const double tx = fx - x0;
      for (int c = 0; c < C; ++c) {
        const double top = image.at(c, y0, x0) * (1 - tx) + image.at(c, y0, x1) * tx;
        const double bot = image.at(c, y1, x0) * (1 - tx) + image.at(c, y1, x1) * tx;
        out.at(c, y, x) = static_cast<float>(top * (1 - ty) + bot * ty);
      }
    }
  }
  return out;
}

}  // namespace artflow
