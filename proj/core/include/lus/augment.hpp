#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lus/image.hpp"

namespace lus {

/// One entry of the augmentation plan. Transforms apply in a fixed order:
/// shift, horizontal flip, vertical flip, then noise (image only). Geometry
/// therefore always precedes noise.
struct VariantSpec {
  int shift_x = 0;  // -1 / 0 / +1 multiples of the configured shift
  int shift_y = 0;
  bool hflip = false;
  bool vflip = false;
  bool noise = false;

  bool identity() const { return !shift_x && !shift_y && !hflip && !vflip && !noise; }
};

/// The fixed enumerated plan: original, flips, cardinal shifts, shift+flip
/// and noise variants -- 11 entries, so every sample expands at least
/// tenfold with exact accounting.
std::vector<VariantSpec> default_augment_plan();

struct AugmentConfig {
  double shift_fraction = 0.10;  // of each dimension
  double noise_sigma = 0.05;     // of the 255 dynamic range
  std::vector<VariantSpec> plan = default_augment_plan();
};

struct AugmentedSample {
  GrayImage image;
  std::optional<GrayImage> mask;
};

/// Expands one sample into cfg.plan.size() variants, deterministically for
/// a given (seed, cfg). Geometric transforms hit image and mask alike
/// (zero fill at shift borders); Gaussian noise (PCG32 + Box-Muller,
/// clamped to [0,255]) touches the image only, one independent stream per
/// variant: Pcg32(splitmix64(seed), variant_index). Callers derive the
/// per-sample seed as splitmix64(global_seed ^ fnv1a64(sample_id)).
std::vector<AugmentedSample> augment(const GrayImage& image,
                                     const std::optional<GrayImage>& mask,
                                     const AugmentConfig& cfg, std::uint64_t seed);

GrayImage hflip(const GrayImage& img);
GrayImage vflip(const GrayImage& img);
GrayImage shift(const GrayImage& img, int dx, int dy);  // zero fill

}  // namespace lus
