#pragma once

#include "lus/graph.hpp"

namespace lus {

/// VGG-16 classifier: 13 convolutions in blocks (2,2,3,3,3) with channels
/// (64,128,256,512,512), each block closed by a 2x2 max pool, then a small
/// fully-connected head. Input is fixed at (3, 224, 224); grayscale frames
/// are replicated to 3 channels by the caller so pretrained 3-channel
/// backbones stay slot-compatible.
struct Vgg16Config {
  int head_width = 64;
  int num_classes = 2;
  bool frozen_backbone = true;
};

/// Slot names: block{i}.conv{j}.weight|bias and head.fc{k}.weight|bias.
/// With frozen_backbone only the head.* slots are trainable; the flag never
/// changes the forward output.
ModelGraph build_vgg16(const Vgg16Config& cfg = {});

constexpr int kVgg16InputHw = 224;
constexpr int kVgg16InputChannels = 3;
constexpr int kVgg16FeatureLen = 512 * 7 * 7;

}  // namespace lus
