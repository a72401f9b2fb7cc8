#pragma once

#include <span>
#include <vector>

#include "lus/tensor.hpp"

namespace lus {

/// Convolution parameters. weights is (outC, inC, kH, kW); bias has outC
/// entries. Convolution is cross-correlation (no kernel flip) with zero
/// padding.
struct Conv2dParams {
  Tensor weights;
  std::vector<float> bias;
  int stride = 1;
  int padding = 0;
};

struct DenseParams {
  int out = 0;
  int in = 0;
  std::vector<float> weights;  // row-major (out, in)
  std::vector<float> bias;     // length out
};

/// 2-D cross-correlation with zero padding.
///
/// Every output element accumulates bias first, then taps in fixed
/// kH -> kW -> inC order (inC fastest). That order is a contract: results
/// are bit-identical across runs and thread counts, and no reduction is
/// ever reassociated.
Tensor conv2d(const Tensor& input, const Conv2dParams& params);

/// Non-overlapping 2x2 max pooling; requires even H and W.
Tensor maxpool2x2(const Tensor& input);

/// 2x2/stride-2 transposed convolution (the U-Net up-sampling step).
/// weights must be (outC, inC, 2, 2), stride 2, padding 0. Each output
/// element receives exactly one tap per input channel, accumulated in
/// ascending inC order after the bias.
Tensor transposed_conv2x2(const Tensor& input, const Conv2dParams& params);

/// Channel concatenation; a's channels first. Batch and spatial dims must match.
Tensor concat_channels(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& input);

/// Elementwise logistic sigmoid; outputs in (0, 1).
Tensor sigmoid(const Tensor& input);

/// Fully-connected layer: out[o] = bias[o] + sum_j weights[o][j] * x[j],
/// j ascending (fixed accumulation order).
std::vector<float> dense(std::span<const float> input, const DenseParams& params);

/// Numerically stable softmax (max subtraction); sums to 1 within 1e-6.
std::vector<float> softmax(std::span<const float> logits);

}  // namespace lus
