#include "lus/vgg16.hpp"

#include "lus/error.hpp"

namespace lus {

namespace {

LayerSpec plain(LayerKind kind) {
  LayerSpec spec;
  spec.kind = kind;
  return spec;
}

}  // namespace

ModelGraph build_vgg16(const Vgg16Config& cfg) {
  if (cfg.head_width < 1 || cfg.num_classes < 2) {
    throw ModelError("vgg16: head_width must be >= 1 and num_classes >= 2");
  }
  constexpr int block_convs[5] = {2, 2, 3, 3, 3};
  constexpr int block_channels[5] = {64, 128, 256, 512, 512};

  std::vector<LayerSpec> layers;
  for (int b = 0; b < 5; ++b) {
    for (int j = 0; j < block_convs[b]; ++j) {
      LayerSpec conv;
      conv.kind = LayerKind::Conv;
      conv.name = "block" + std::to_string(b + 1) + ".conv" + std::to_string(j + 1);
      conv.out_channels = block_channels[b];
      conv.kernel = 3;
      conv.padding = 1;
      layers.push_back(conv);
      layers.push_back(plain(LayerKind::Relu));
    }
    layers.push_back(plain(LayerKind::MaxPool));
  }

  const int head_start = static_cast<int>(layers.size());
  layers.push_back(plain(LayerKind::Flatten));
  LayerSpec fc1;
  fc1.kind = LayerKind::Dense;
  fc1.name = "head.fc1";
  fc1.units = cfg.head_width;
  layers.push_back(fc1);
  layers.push_back(plain(LayerKind::Relu));
  LayerSpec fc2;
  fc2.kind = LayerKind::Dense;
  fc2.name = "head.fc2";
  fc2.units = cfg.num_classes;
  layers.push_back(fc2);
  layers.push_back(plain(LayerKind::Softmax));

  ModelGraph g = make_graph("vgg16", {kVgg16InputChannels, kVgg16InputHw, kVgg16InputHw},
                            HeadKind::ClassProbabilities, std::move(layers), head_start);
  for (const auto& layer : g.layers) {
    if (!layer_has_params(layer.kind)) continue;
    if (!cfg.frozen_backbone || layer.name.starts_with("head.")) {
      g.trainable.push_back(layer.weight_slot());
      g.trainable.push_back(layer.bias_slot());
    }
  }
  return g;
}

}  // namespace lus
