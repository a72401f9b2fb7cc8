#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lus {

/// Rank-4 single-precision array in N-major NCHW layout. The lingua franca
/// of every kernel: images, feature maps and convolution weights all live
/// here. Invariant: data.size() == n*c*h*w.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f);

  static Tensor zeros(int n, int c, int h, int w) { return Tensor(n, c, h, w); }
  static Tensor full(int n, int c, int h, int w, float v) { return Tensor(n, c, h, w, v); }

  std::size_t size() const { return data.size(); }

  std::size_t offset(int in, int ic, int iy, int ix) const {
    return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
  }
  float at(int in, int ic, int iy, int ix) const { return data[offset(in, ic, iy, ix)]; }
  float& at(int in, int ic, int iy, int ix) { return data[offset(in, ic, iy, ix)]; }

  const float* plane(int in, int ic) const { return data.data() + offset(in, ic, 0, 0); }
  float* plane(int in, int ic) { return data.data() + offset(in, ic, 0, 0); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  bool all_finite() const;
};

/// Fills with uniform values in [lo, hi) from a PCG32 stream; test/bench helper.
Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed,
                     float lo = -1.0f, float hi = 1.0f);

}  // namespace lus
