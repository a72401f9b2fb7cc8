#include "lus/augment.hpp"

#include <algorithm>
#include <cmath>

#include "lus/error.hpp"
#include "lus/rng.hpp"

namespace lus {

std::vector<VariantSpec> default_augment_plan() {
  std::vector<VariantSpec> plan;
  plan.push_back({});                                             // original
  plan.push_back({.hflip = true});
  plan.push_back({.vflip = true});
  plan.push_back({.hflip = true, .vflip = true});
  plan.push_back({.shift_x = 1});
  plan.push_back({.shift_x = -1});
  plan.push_back({.shift_y = 1});
  plan.push_back({.shift_y = -1});
  plan.push_back({.shift_x = 1, .shift_y = 1, .hflip = true});    // shift+flip
  plan.push_back({.noise = true});
  plan.push_back({.hflip = true, .noise = true});
  return plan;
}

GrayImage hflip(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
  return out;
}

GrayImage vflip(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, img.height - 1 - y);
  return out;
}

GrayImage shift(const GrayImage& img, int dx, int dy) {
  GrayImage out(img.width, img.height, 0);
  for (int y = 0; y < img.height; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= img.height) continue;
    for (int x = 0; x < img.width; ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= img.width) continue;
      out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

namespace {

GrayImage apply_geometry(const GrayImage& img, const VariantSpec& v, int dx, int dy) {
  GrayImage out = img;
  if (v.shift_x != 0 || v.shift_y != 0) out = shift(out, v.shift_x * dx, v.shift_y * dy);
  if (v.hflip) out = hflip(out);
  if (v.vflip) out = vflip(out);
  return out;
}

void add_noise(GrayImage& img, double sigma, Pcg32& rng) {
  for (auto& p : img.pixels) {
    const double noisy = p + sigma * rng.next_gaussian();
    const long r = std::lround(noisy);
    p = static_cast<std::uint8_t>(std::clamp<long>(r, 0, 255));
  }
}

}  // namespace

std::vector<AugmentedSample> augment(const GrayImage& image,
                                     const std::optional<GrayImage>& mask,
                                     const AugmentConfig& cfg, std::uint64_t seed) {
  if (cfg.plan.size() < 10) {
    throw DataError("augment: plan must hold at least 10 variants, has " +
                    std::to_string(cfg.plan.size()));
  }
  if (!cfg.plan.front().identity()) {
    throw DataError("augment: first plan entry must be the untouched original");
  }
  if (mask && (mask->width != image.width || mask->height != image.height)) {
    throw DataError("augment: mask dims do not match image dims");
  }

  const int dx = static_cast<int>(std::lround(cfg.shift_fraction * image.width));
  const int dy = static_cast<int>(std::lround(cfg.shift_fraction * image.height));
  const double sigma = cfg.noise_sigma * 255.0;

  std::vector<AugmentedSample> out;
  out.reserve(cfg.plan.size());
  for (std::size_t i = 0; i < cfg.plan.size(); ++i) {
    const VariantSpec& v = cfg.plan[i];
    AugmentedSample sample;
    sample.image = apply_geometry(image, v, dx, dy);
    if (mask) sample.mask = apply_geometry(*mask, v, dx, dy);
    if (v.noise) {
      Pcg32 rng(splitmix64(seed), i);
      add_noise(sample.image, sigma, rng);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace lus
