#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lus/tensor.hpp"

namespace lus {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

/// 8-bit RGB image, interleaved row-major.
struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool operator==(const RgbImage&) const = default;
};

/// BT.601 luma: round-half-up of 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const RgbImage& rgb);

/// Bilinear resize with half-pixel-center sampling; output intensities
/// rounded half-up. The canonical call is 512x512 -> 224x224.
GrayImage resize_bilinear(const GrayImage& img, int target_w, int target_h);

/// Nearest-neighbor resize; used for masks so values stay binary.
GrayImage resize_nearest(const GrayImage& img, int target_w, int target_h);

/// Scales intensities to [0,1] as a (1,1,H,W) tensor. Channel replication
/// for 3-channel backbones happens at the classifier adapter, not here.
Tensor normalize(const GrayImage& img);

/// Inverse of normalize up to rounding (exact on normalize output).
GrayImage denormalize(const Tensor& t);

/// Replicates a single-channel tensor to `channels` identical channels.
Tensor replicate_channels(const Tensor& t, int channels);

// Binary PGM (P5, maxval 255) is the mandatory interchange format; masks
// use values {0, 255}. Overlays are written as binary PPM (P6).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

/// Header-only readability check used by manifest validation; throws
/// DataError with the reason (missing, not PGM, PNG unsupported, short file).
void check_pgm_readable(const std::filesystem::path& path);

}  // namespace lus
