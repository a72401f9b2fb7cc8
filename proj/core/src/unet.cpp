#include "lus/unet.hpp"

#include "lus/error.hpp"

namespace lus {

namespace {

LayerSpec plain(LayerKind kind) {
  LayerSpec spec;
  spec.kind = kind;
  return spec;
}

LayerSpec conv3x3(const std::string& name, int channels) {
  LayerSpec spec;
  spec.kind = LayerKind::Conv;
  spec.name = name;
  spec.out_channels = channels;
  spec.kernel = 3;
  spec.padding = 1;
  return spec;
}

}  // namespace

ModelGraph build_unet(const UnetConfig& cfg) {
  if (cfg.depth < 1 || cfg.base_channels < 1 || cfg.num_mask_classes < 1 || cfg.in_channels < 1) {
    throw ModelError("unet: invalid configuration");
  }
  if (cfg.input_hw % (1 << cfg.depth) != 0) {
    throw ModelError("unet: input size " + std::to_string(cfg.input_hw) +
                     " not divisible by 2^depth = " + std::to_string(1 << cfg.depth));
  }

  std::vector<LayerSpec> layers;
  std::vector<int> skip_layer(cfg.depth + 1);  // index of each level's last relu

  for (int level = 1; level <= cfg.depth; ++level) {
    const int ch = cfg.base_channels << (level - 1);
    const std::string prefix = "unet.down" + std::to_string(level);
    layers.push_back(conv3x3(prefix + ".conv1", ch));
    layers.push_back(plain(LayerKind::Relu));
    layers.push_back(conv3x3(prefix + ".conv2", ch));
    layers.push_back(plain(LayerKind::Relu));
    skip_layer[level] = static_cast<int>(layers.size()) - 1;
    layers.push_back(plain(LayerKind::MaxPool));
  }

  const int bottleneck_ch = cfg.base_channels << cfg.depth;
  layers.push_back(conv3x3("unet.bottleneck.conv1", bottleneck_ch));
  layers.push_back(plain(LayerKind::Relu));
  layers.push_back(conv3x3("unet.bottleneck.conv2", bottleneck_ch));
  layers.push_back(plain(LayerKind::Relu));

  for (int level = cfg.depth; level >= 1; --level) {
    const int ch = cfg.base_channels << (level - 1);
    const std::string prefix = "unet.up" + std::to_string(level);
    LayerSpec up;
    up.kind = LayerKind::UpConv;
    up.name = prefix + ".upconv";
    up.out_channels = ch;
    layers.push_back(up);
    LayerSpec cat;
    cat.kind = LayerKind::Concat;
    cat.concat_with = skip_layer[level];
    layers.push_back(cat);
    layers.push_back(conv3x3(prefix + ".conv1", ch));
    layers.push_back(plain(LayerKind::Relu));
    layers.push_back(conv3x3(prefix + ".conv2", ch));
    layers.push_back(plain(LayerKind::Relu));
  }

  LayerSpec final_conv;
  final_conv.kind = LayerKind::Conv;
  final_conv.name = "unet.final";
  final_conv.out_channels = cfg.num_mask_classes;
  final_conv.kernel = 1;
  layers.push_back(final_conv);
  layers.push_back(plain(LayerKind::Sigmoid));

  ModelGraph g = make_graph("unet", {cfg.in_channels, cfg.input_hw, cfg.input_hw},
                            HeadKind::MaskProbabilities, std::move(layers));
  for (const auto& layer : g.layers) {
    if (layer_has_params(layer.kind)) {
      g.trainable.push_back(layer.weight_slot());
      g.trainable.push_back(layer.bias_slot());
    }
  }
  return g;
}

int conv_layer_count(const ModelGraph& graph) {
  int count = 0;
  for (const auto& layer : graph.layers) {
    if (layer.kind == LayerKind::Conv || layer.kind == LayerKind::UpConv) ++count;
  }
  return count;
}

}  // namespace lus
