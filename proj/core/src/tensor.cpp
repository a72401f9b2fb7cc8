#include "lus/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "lus/rng.hpp"

namespace lus {

Tensor::Tensor(int n_, int c_, int h_, int w_, float fill) : n(n_), c(c_), h(h_), w(w_) {
  if (n < 0 || c < 0 || h < 0 || w < 0) {
    throw std::invalid_argument("Tensor dims must be non-negative");
  }
  data.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

bool Tensor::all_finite() const {
  for (float v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed, float lo, float hi) {
  Tensor t(n, c, h, w);
  Pcg32 rng(splitmix64(seed), 0x7475ULL);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

}  // namespace lus
