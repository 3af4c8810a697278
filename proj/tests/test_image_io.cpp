// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "test_util.hpp"
#include "artflow/image_io.hpp"

using namespace artflow;

TEST_CASE("8-bit conversions are inverse on the grid") {
  for (int q = 0; q < 256; ++q) CHECK(to_u8(from_u8(static_cast<std::uint8_t>(q))) == q);
  CHECK(from_u8(0) == -1.0f);
  CHECK(from_u8(255) == 1.0f);
  CHECK(to_u8(5.0f) == 255);
  CHECK(to_u8(-5.0f) == 0);
}

TEST_CASE("png roundtrip is exact after quantization") {
  StageImage img = testing::random_image(2, 12, 20, 3);
  quantize8(img);
  const auto bytes = encode_png(img);
  const StageImage back = decode_png(bytes, 2);
  CHECK(identical(img, back));
  CHECK(back.height() == 12);
  CHECK(back.width() == 20);

  StageImage gray = testing::random_image(1, 8, 8, 4, 1);
  quantize8(gray);
  CHECK(identical(decode_png(encode_png(gray), 1, 1), gray));

  const auto dir = testing::temp_dir("image_io");
  write_png(dir / "a.png", img);
  CHECK(identical(read_png(dir / "a.png", 2), img));
}

TEST_CASE("corrupt input raises image_error") {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  CHECK_THROWS_AS(decode_png(junk, 1), image_error);
  CHECK_THROWS_AS(read_png("/nonexistent/x.png", 1), image_error);
}

TEST_CASE("bilinear resize") {
  StageImage flat(3, 3, 8, 8, 0.25f);
  const StageImage small = resize_bilinear(flat, 4, 4);
  CHECK(small.height() == 4);
  for (float v : small.pixels.values()) CHECK(v == doctest::Approx(0.25f));
  StageImage same = testing::random_image(1, 6, 6, 9);
  CHECK(identical(resize_bilinear(same, 6, 6), same));
}
