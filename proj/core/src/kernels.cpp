#include "lus/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lus/error.hpp"

namespace lus {

namespace {

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.n) + "," + std::to_string(t.c) + "," + std::to_string(t.h) +
         "," + std::to_string(t.w) + ")";
}

// Zero-padded copy of one input image (C, H+2p, W+2p). Materializing the
// border keeps the inner conv loops branch-free.
void pad_image(const Tensor& in, int n, int pad, float* dst, int hp, int wp) {
  std::fill(dst, dst + static_cast<std::size_t>(in.c) * hp * wp, 0.0f);
  for (int ci = 0; ci < in.c; ++ci) {
    const float* src_plane = in.plane(n, ci);
    float* dst_plane = dst + static_cast<std::size_t>(ci) * hp * wp;
    for (int y = 0; y < in.h; ++y) {
      std::copy(src_plane + static_cast<std::size_t>(y) * in.w,
                src_plane + static_cast<std::size_t>(y + 1) * in.w,
                dst_plane + static_cast<std::size_t>(y + pad) * wp + pad);
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Conv2dParams& params) {
  const Tensor& w = params.weights;
  const int oc_n = w.n, ic_n = w.c, kh_n = w.h, kw_n = w.w;
  if (input.c != ic_n) {
    throw ModelError("conv2d: input has " + std::to_string(input.c) + " channels, weights expect " +
                     std::to_string(ic_n));
  }
  if (static_cast<int>(params.bias.size()) != oc_n) {
    throw ModelError("conv2d: bias length " + std::to_string(params.bias.size()) +
                     " != out channels " + std::to_string(oc_n));
  }
  if (params.stride < 1 || params.padding < 0 || kh_n < 1 || kw_n < 1) {
    throw ModelError("conv2d: invalid stride/padding/kernel");
  }
  const int stride = params.stride, pad = params.padding;
  const int h_out = (input.h + 2 * pad - kh_n) / stride + 1;
  const int w_out = (input.w + 2 * pad - kw_n) / stride + 1;
  if (h_out < 1 || w_out < 1) {
    throw ModelError("conv2d: non-positive output dims for input " + shape_str(input));
  }

  Tensor out(input.n, oc_n, h_out, w_out);
  const int hp = input.h + 2 * pad;
  const int wp = input.w + 2 * pad;

  std::vector<float> padded;
  const std::size_t plane_sz = static_cast<std::size_t>(hp) * wp;
  if (pad > 0) padded.resize(static_cast<std::size_t>(input.c) * plane_sz);

  for (int n = 0; n < input.n; ++n) {
    const float* x = input.data.data() + input.offset(n, 0, 0, 0);
    if (pad > 0) {
      pad_image(input, n, pad, padded.data(), hp, wp);
      x = padded.data();
    }
    for (int ho = 0; ho < h_out; ++ho) {
      for (int oc = 0; oc < oc_n; ++oc) {
        float* out_row = out.plane(n, oc) + static_cast<std::size_t>(ho) * w_out;
        const float bias = params.bias[oc];
        for (int wo = 0; wo < w_out; ++wo) out_row[wo] = bias;
        for (int kh = 0; kh < kh_n; ++kh) {
          const int iy = ho * stride + kh;
          const std::size_t row_off = static_cast<std::size_t>(iy) * wp;
          for (int kw = 0; kw < kw_n; ++kw) {
            const float* w_tap = w.data.data() + w.offset(oc, 0, kh, kw);
            const std::size_t w_step = static_cast<std::size_t>(kh_n) * kw_n;
            int ci = 0;
            if (stride == 1) {
              // Four channels per pass over the row; each output element
              // still receives its taps in ascending-ci order.
              for (; ci + 3 < ic_n; ci += 4) {
                const float w0 = w_tap[(ci + 0) * w_step];
                const float w1 = w_tap[(ci + 1) * w_step];
                const float w2 = w_tap[(ci + 2) * w_step];
                const float w3 = w_tap[(ci + 3) * w_step];
                const float* x0 = x + (ci + 0) * plane_sz + row_off + kw;
                const float* x1 = x + (ci + 1) * plane_sz + row_off + kw;
                const float* x2 = x + (ci + 2) * plane_sz + row_off + kw;
                const float* x3 = x + (ci + 3) * plane_sz + row_off + kw;
                for (int wo = 0; wo < w_out; ++wo) {
                  float acc = out_row[wo];
                  acc += w0 * x0[wo];
                  acc += w1 * x1[wo];
                  acc += w2 * x2[wo];
                  acc += w3 * x3[wo];
                  out_row[wo] = acc;
                }
              }
            }
            for (; ci < ic_n; ++ci) {
              const float wv = w_tap[ci * w_step];
              const float* x_row = x + ci * plane_sz + row_off + kw;
              if (stride == 1) {
                for (int wo = 0; wo < w_out; ++wo) out_row[wo] += wv * x_row[wo];
              } else {
                for (int wo = 0; wo < w_out; ++wo) out_row[wo] += wv * x_row[wo * stride];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor maxpool2x2(const Tensor& input) {
  if (input.h % 2 != 0 || input.w % 2 != 0) {
    throw ModelError("maxpool2x2: spatial dims must be even, got " + shape_str(input));
  }
  Tensor out(input.n, input.c, input.h / 2, input.w / 2);
  for (int n = 0; n < input.n; ++n) {
    for (int c = 0; c < input.c; ++c) {
      const float* src = input.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < out.h; ++y) {
        const float* r0 = src + static_cast<std::size_t>(2 * y) * input.w;
        const float* r1 = r0 + input.w;
        float* d = dst + static_cast<std::size_t>(y) * out.w;
        for (int x = 0; x < out.w; ++x) {
          d[x] = std::max(std::max(r0[2 * x], r0[2 * x + 1]), std::max(r1[2 * x], r1[2 * x + 1]));
        }
      }
    }
  }
  return out;
}

Tensor transposed_conv2x2(const Tensor& input, const Conv2dParams& params) {
  const Tensor& w = params.weights;
  if (w.h != 2 || w.w != 2 || params.stride != 2 || params.padding != 0) {
    throw ModelError("transposed_conv2x2: requires 2x2 kernel, stride 2, padding 0");
  }
  if (input.c != w.c) {
    throw ModelError("transposed_conv2x2: input has " + std::to_string(input.c) +
                     " channels, weights expect " + std::to_string(w.c));
  }
  if (static_cast<int>(params.bias.size()) != w.n) {
    throw ModelError("transposed_conv2x2: bias length mismatch");
  }
  const int oc_n = w.n, ic_n = w.c;
  Tensor out(input.n, oc_n, input.h * 2, input.w * 2);
  for (int n = 0; n < input.n; ++n) {
    for (int oc = 0; oc < oc_n; ++oc) {
      float* dst = out.plane(n, oc);
      const float bias = params.bias[oc];
      std::fill(dst, dst + static_cast<std::size_t>(out.h) * out.w, bias);
      for (int iy = 0; iy < input.h; ++iy) {
        for (int ky = 0; ky < 2; ++ky) {
          float* out_row = dst + static_cast<std::size_t>(2 * iy + ky) * out.w;
          for (int kx = 0; kx < 2; ++kx) {
            for (int ci = 0; ci < ic_n; ++ci) {
              const float wv = w.at(oc, ci, ky, kx);
              const float* x_row = input.plane(n, ci) + static_cast<std::size_t>(iy) * input.w;
              for (int x = 0; x < input.w; ++x) out_row[2 * x + kx] += wv * x_row[x];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw ModelError("concat_channels: batch/spatial mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  Tensor out(a.n, a.c + b.c, a.h, a.w);
  const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
  for (int n = 0; n < a.n; ++n) {
    float* dst = out.data.data() + out.offset(n, 0, 0, 0);
    if (a.c > 0) {
      const float* pa = a.data.data() + a.offset(n, 0, 0, 0);
      std::copy(pa, pa + plane * a.c, dst);
    }
    if (b.c > 0) {
      const float* pb = b.data.data() + b.offset(n, 0, 0, 0);
      std::copy(pb, pb + plane * b.c, dst + plane * a.c);
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.data) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.data) v = 1.0f / (1.0f + std::exp(-v));
  return out;
}

std::vector<float> dense(std::span<const float> input, const DenseParams& params) {
  if (params.out < 0 || params.in < 0 ||
      params.weights.size() != static_cast<std::size_t>(params.out) * params.in ||
      static_cast<int>(params.bias.size()) != params.out) {
    throw ModelError("dense: inconsistent parameter shapes");
  }
  if (input.size() != static_cast<std::size_t>(params.in)) {
    throw ModelError("dense: input length " + std::to_string(input.size()) + " != weight columns " +
                     std::to_string(params.in));
  }
  std::vector<float> out(params.out);
  for (int o = 0; o < params.out; ++o) {
    const float* w_row = params.weights.data() + static_cast<std::size_t>(o) * params.in;
    float acc = params.bias[o];
    for (int j = 0; j < params.in; ++j) acc += w_row[j] * input[j];
    out[o] = acc;
  }
  return out;
}

std::vector<float> softmax(std::span<const float> logits) {
  if (logits.empty()) throw ModelError("softmax: empty input");
  float m = logits[0];
  for (float v : logits) m = std::max(m, v);
  std::vector<float> out(logits.size());
  float sum = 0.0f;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace lus
