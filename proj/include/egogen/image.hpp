// Copyright 2026 The egogen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace egogen {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit interleaved RGB image, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t height, std::size_t width, Rgb fill = {})
      : height_(height), width_(width), pixels_(3 * height * width) {
    if (fill != Rgb{}) {
      for (std::size_t i = 0; i < height * width; ++i) set(i % width, i / width, fill);
    }
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  Rgb get(std::size_t x, std::size_t y) const {
    const std::size_t o = 3 * (y * width_ + x);
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
  }
  void set(std::size_t x, std::size_t y, Rgb c) {
    const std::size_t o = 3 * (y * width_ + x);
    pixels_[o] = c.r;
    pixels_[o + 1] = c.g;
    pixels_[o + 2] = c.b;
  }

  std::uint8_t channel(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels_[3 * (y * width_ + x) + c];
  }

  const std::vector<std::uint8_t>& bytes() const { return pixels_; }
  std::vector<std::uint8_t>& bytes() { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t height_ = 0, width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// 8-bit RGB PNG, no ancillary chunks, fixed compression settings so the
/// same image always produces the same bytes.
void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

}  // namespace egogen
