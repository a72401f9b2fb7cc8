#pragma once

#include "lus/graph.hpp"

namespace lus {

/// U-Net segmenter: a contracting path of double 3x3 same-padded
/// convolutions with 2x2 max pooling, a bottleneck, and an expansive path
/// of 2x2 transposed convolutions with skip concatenation, closed by a 1x1
/// convolution and a sigmoid. At the defaults the graph has exactly 23
/// conv-type layers (18 3x3 convs + 4 up-convs + the final 1x1) and maps a
/// 64-channel feature map to the mask classes.
struct UnetConfig {
  int in_channels = 1;     // ultrasound frames are grayscale
  int input_hw = 224;      // must be divisible by 2^depth
  int depth = 4;
  int base_channels = 64;  // doubles per level; bottleneck = base * 2^depth
  int num_mask_classes = 1;
};

/// Slot names: unet.down{i}.conv{j}.*, unet.bottleneck.conv{j}.*,
/// unet.up{i}.upconv.*, unet.up{i}.conv{j}.*, unet.final.*.
ModelGraph build_unet(const UnetConfig& cfg = {});

/// Conv-type rows (conv + upconv) in the built graph; 23 at the defaults.
int conv_layer_count(const ModelGraph& graph);

}  // namespace lus
