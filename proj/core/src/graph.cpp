#include "lus/graph.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lus/error.hpp"
#include "lus/rng.hpp"

namespace lus {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::UpConv: return "upconv";
    case LayerKind::Concat: return "concat";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Sigmoid: return "sigmoid";
  }
  return "?";
}

bool layer_has_params(LayerKind kind) {
  return kind == LayerKind::Conv || kind == LayerKind::UpConv || kind == LayerKind::Dense;
}

namespace {

Shape3 propagate(const std::string& graph_name, const LayerSpec& layer, std::size_t index,
                 const Shape3& in, const std::vector<Shape3>& shapes) {
  auto fail = [&](const std::string& why) {
    throw ModelError(graph_name + ": layer " + std::to_string(index) + " (" +
                     layer_kind_name(layer.kind) + (layer.name.empty() ? "" : " " + layer.name) +
                     "): " + why);
  };
  switch (layer.kind) {
    case LayerKind::Conv: {
      if (layer.out_channels < 1 || layer.kernel < 1 || layer.stride < 1 || layer.padding < 0)
        fail("invalid conv hyperparameters");
      const int h = (in.h + 2 * layer.padding - layer.kernel) / layer.stride + 1;
      const int w = (in.w + 2 * layer.padding - layer.kernel) / layer.stride + 1;
      if (h < 1 || w < 1) fail("non-positive output dims");
      return {layer.out_channels, h, w};
    }
    case LayerKind::UpConv:
      if (layer.out_channels < 1) fail("invalid upconv channels");
      return {layer.out_channels, in.h * 2, in.w * 2};
    case LayerKind::MaxPool:
      if (in.h % 2 != 0 || in.w % 2 != 0) fail("maxpool needs even spatial dims");
      return {in.c, in.h / 2, in.w / 2};
    case LayerKind::Concat: {
      if (layer.concat_with < 0 || layer.concat_with >= static_cast<int>(index))
        fail("concat source must be an earlier layer");
      const Shape3& other = shapes[layer.concat_with];
      if (other.h != in.h || other.w != in.w) fail("concat spatial mismatch");
      return {in.c + other.c, in.h, in.w};
    }
    case LayerKind::Flatten:
      return {in.c * in.h * in.w, 1, 1};
    case LayerKind::Dense:
      if (in.h != 1 || in.w != 1) fail("dense expects a flattened input");
      if (layer.units < 1) fail("invalid dense units");
      return {layer.units, 1, 1};
    case LayerKind::Softmax:
      if (in.h != 1 || in.w != 1) fail("softmax expects a flattened input");
      return in;
    case LayerKind::Relu:
    case LayerKind::Sigmoid:
      return in;
  }
  fail("unknown layer kind");
  return {};
}

}  // namespace

ModelGraph make_graph(std::string name, Shape3 input, HeadKind head,
                      std::vector<LayerSpec> layers, int head_start) {
  ModelGraph g;
  g.name = std::move(name);
  g.input = input;
  g.head = head;
  g.layers = std::move(layers);
  g.head_start = head_start;
  g.shapes.reserve(g.layers.size());
  Shape3 cur = input;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    cur = propagate(g.name, g.layers[i], i, cur, g.shapes);
    g.shapes.push_back(cur);
  }
  if (head_start > static_cast<int>(g.layers.size())) {
    throw ModelError(g.name + ": head_start out of range");
  }
  return g;
}

std::vector<std::string> parameter_slots(const ModelGraph& graph) {
  std::vector<std::string> slots;
  for (const auto& layer : graph.layers) {
    if (layer_has_params(layer.kind)) {
      slots.push_back(layer.weight_slot());
      slots.push_back(layer.bias_slot());
    }
  }
  return slots;
}

std::vector<std::uint32_t> expected_weight_dims(const ModelGraph& graph, std::size_t layer) {
  const LayerSpec& spec = graph.layers[layer];
  const Shape3 in = layer == 0 ? graph.input : graph.shapes[layer - 1];
  switch (spec.kind) {
    case LayerKind::Conv:
      return {static_cast<std::uint32_t>(spec.out_channels), static_cast<std::uint32_t>(in.c),
              static_cast<std::uint32_t>(spec.kernel), static_cast<std::uint32_t>(spec.kernel)};
    case LayerKind::UpConv:
      return {static_cast<std::uint32_t>(spec.out_channels), static_cast<std::uint32_t>(in.c), 2, 2};
    case LayerKind::Dense:
      return {static_cast<std::uint32_t>(spec.units), static_cast<std::uint32_t>(in.c)};
    default:
      throw ModelError("layer has no parameters");
  }
}

std::vector<std::uint32_t> expected_bias_dims(const ModelGraph& graph, std::size_t layer) {
  const LayerSpec& spec = graph.layers[layer];
  switch (spec.kind) {
    case LayerKind::Conv:
    case LayerKind::UpConv:
      return {static_cast<std::uint32_t>(spec.out_channels)};
    case LayerKind::Dense:
      return {static_cast<std::uint32_t>(spec.units)};
    default:
      throw ModelError("layer has no parameters");
  }
}

void validate_weights(const ModelGraph& graph, const WeightArchive& weights) {
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    if (!layer_has_params(layer.kind)) continue;
    for (bool is_weight : {true, false}) {
      const std::string slot = is_weight ? layer.weight_slot() : layer.bias_slot();
      if (!weights.contains(slot)) {
        throw ModelError(graph.name + ": missing parameter slot '" + slot + "'");
      }
      const auto want = is_weight ? expected_weight_dims(graph, i) : expected_bias_dims(graph, i);
      const auto& got = weights.at(slot).dims;
      if (got != want) {
        std::ostringstream os;
        os << graph.name << ": slot '" << slot << "' dims (";
        for (std::size_t k = 0; k < got.size(); ++k) os << (k ? "," : "") << got[k];
        os << ") do not match expected (";
        for (std::size_t k = 0; k < want.size(); ++k) os << (k ? "," : "") << want[k];
        os << ")";
        throw ModelError(os.str());
      }
    }
  }
}

BoundModel::BoundModel(const ModelGraph& graph, const WeightArchive& weights) : graph_(&graph) {
  validate_weights(graph, weights);
  bound_.resize(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    if (!layer_has_params(layer.kind)) continue;
    const WeightEntry& w = weights.at(layer.weight_slot());
    const WeightEntry& b = weights.at(layer.bias_slot());
    if (layer.kind == LayerKind::Dense) {
      DenseParams& d = bound_[i].dense;
      d.out = static_cast<int>(w.dims[0]);
      d.in = static_cast<int>(w.dims[1]);
      d.weights = w.values;
      d.bias = b.values;
    } else {
      Conv2dParams& c = bound_[i].conv;
      c.weights = Tensor(static_cast<int>(w.dims[0]), static_cast<int>(w.dims[1]),
                         static_cast<int>(w.dims[2]), static_cast<int>(w.dims[3]));
      c.weights.data = w.values;
      c.bias = b.values;
      c.stride = layer.kind == LayerKind::UpConv ? 2 : layer.stride;
      c.padding = layer.kind == LayerKind::UpConv ? 0 : layer.padding;
    }
  }
  // Last layer index that still reads each output; -1 keeps it forever.
  last_use_.assign(graph.layers.size(), 0);
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (i > 0) last_use_[i - 1] = static_cast<int>(i);
    if (graph.layers[i].kind == LayerKind::Concat) {
      last_use_[graph.layers[i].concat_with] =
          std::max(last_use_[graph.layers[i].concat_with], static_cast<int>(i));
    }
  }
}

Tensor BoundModel::run_timed(const Tensor& input, std::vector<LayerTiming>& timings) const {
  return run_range(input, 0, graph_->layers.size(), &timings);
}

Tensor BoundModel::run_backbone(const Tensor& input) const {
  if (graph_->head_start < 0) throw ModelError(graph_->name + ": graph has no head boundary");
  return run_range(input, 0, static_cast<std::size_t>(graph_->head_start), nullptr);
}

Tensor BoundModel::run_range(const Tensor& input, std::size_t first, std::size_t last,
                             std::vector<LayerTiming>* timings) const {
  const ModelGraph& g = *graph_;
  if (input.c != g.input.c || input.h != g.input.h || input.w != g.input.w) {
    throw ModelError(g.name + ": input shape (" + std::to_string(input.c) + "," +
                     std::to_string(input.h) + "," + std::to_string(input.w) +
                     ") does not match input spec (" + std::to_string(g.input.c) + "," +
                     std::to_string(g.input.h) + "," + std::to_string(g.input.w) + ")");
  }
  if (first != 0) throw ModelError("run_range must start at layer 0");
  if (last == 0) return input;

  std::vector<std::optional<Tensor>> outputs(last);
  const Tensor* prev = &input;
  for (std::size_t i = 0; i < last; ++i) {
    const LayerSpec& layer = g.layers[i];
    const auto t0 = std::chrono::steady_clock::now();
    Tensor out;
    switch (layer.kind) {
      case LayerKind::Conv:
        out = conv2d(*prev, bound_[i].conv);
        break;
      case LayerKind::UpConv:
        out = transposed_conv2x2(*prev, bound_[i].conv);
        break;
      case LayerKind::MaxPool:
        out = maxpool2x2(*prev);
        break;
      case LayerKind::Relu:
        out = relu(*prev);
        break;
      case LayerKind::Sigmoid:
        out = sigmoid(*prev);
        break;
      case LayerKind::Concat:
        out = concat_channels(*prev, *outputs[layer.concat_with]);
        break;
      case LayerKind::Flatten: {
        out = *prev;
        out.c = prev->c * prev->h * prev->w;
        out.h = 1;
        out.w = 1;
        break;
      }
      case LayerKind::Dense: {
        out = Tensor(prev->n, layer.units, 1, 1);
        for (int n = 0; n < prev->n; ++n) {
          auto row = dense(std::span<const float>(prev->data.data() +
                                                      static_cast<std::size_t>(n) * prev->c,
                                                  static_cast<std::size_t>(prev->c)),
                           bound_[i].dense);
          std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::size_t>(n) * out.c);
        }
        break;
      }
      case LayerKind::Softmax: {
        out = *prev;
        for (int n = 0; n < prev->n; ++n) {
          auto row = softmax(std::span<const float>(prev->data.data() +
                                                        static_cast<std::size_t>(n) * prev->c,
                                                    static_cast<std::size_t>(prev->c)));
          std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::size_t>(n) * out.c);
        }
        break;
      }
    }
    if (timings) {
      const auto t1 = std::chrono::steady_clock::now();
      timings->push_back({layer.name.empty() ? layer_kind_name(layer.kind) : layer.name,
                          layer_kind_name(layer.kind),
                          std::chrono::duration<double, std::milli>(t1 - t0).count(),
                          layer_has_params(layer.kind)});
    }
    outputs[i] = std::move(out);
    prev = &*outputs[i];
    // Release tensors no longer needed by any later layer.
    for (std::size_t k = 0; k < i; ++k) {
      if (outputs[k] && last_use_[k] <= static_cast<int>(i)) outputs[k].reset();
    }
  }
  return std::move(*outputs[last - 1]);
}

Tensor forward(const ModelGraph& graph, const WeightArchive& weights, const Tensor& input) {
  return BoundModel(graph, weights).run(input);
}

std::vector<SummaryRow> summarize_rows(const ModelGraph& graph) {
  std::vector<SummaryRow> rows;
  rows.reserve(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    SummaryRow row;
    row.name = layer.name.empty() ? layer_kind_name(layer.kind) : layer.name;
    row.kind = layer_kind_name(layer.kind);
    row.out = graph.shapes[i];
    if (layer_has_params(layer.kind)) {
      const auto w = expected_weight_dims(graph, i);
      const auto b = expected_bias_dims(graph, i);
      std::size_t pw = 1, pb = 1;
      for (auto d : w) pw *= d;
      for (auto d : b) pb *= d;
      row.params = pw + pb;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t parameter_count(const ModelGraph& graph) {
  std::size_t total = 0;
  for (const auto& row : summarize_rows(graph)) total += row.params;
  return total;
}

std::string summarize(const ModelGraph& graph) {
  std::ostringstream os;
  os << graph.name << "  input (" << graph.input.c << "," << graph.input.h << "," << graph.input.w
     << ")\n";
  os << "layer                     kind      output (C,H,W)        params\n";
  os << "-----                     ----      --------------        ------\n";
  std::size_t total = 0;
  for (const auto& row : summarize_rows(graph)) {
    std::ostringstream shape;
    shape << "(" << row.out.c << "," << row.out.h << "," << row.out.w << ")";
    os << row.name;
    for (std::size_t p = row.name.size(); p < 26; ++p) os << ' ';
    os << row.kind;
    for (std::size_t p = std::string(row.kind).size(); p < 10; ++p) os << ' ';
    os << shape.str();
    for (std::size_t p = shape.str().size(); p < 22; ++p) os << ' ';
    os << row.params << "\n";
    total += row.params;
  }
  os << "total parameters: " << total << "\n";
  return os.str();
}

WeightArchive he_uniform_init(const ModelGraph& graph, std::uint64_t seed) {
  WeightArchive archive;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    if (!layer_has_params(layer.kind)) continue;
    const auto wd = expected_weight_dims(graph, i);
    std::size_t fan_in = 1;
    for (std::size_t k = 1; k < wd.size(); ++k) fan_in *= wd[k];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::size_t count = 1;
    for (auto d : wd) count *= d;
    std::vector<float> values(count);
    Pcg32 rng(splitmix64(seed ^ fnv1a64(layer.weight_slot())), i);
    for (auto& v : values) v = static_cast<float>(rng.uniform(-limit, limit));
    archive.add(layer.weight_slot(), wd, std::move(values));

    const auto bd = expected_bias_dims(graph, i);
    archive.add(layer.bias_slot(), bd, std::vector<float>(bd[0], 0.0f));
  }
  return archive;
}

WeightArchive zero_init(const ModelGraph& graph) {
  WeightArchive archive;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    if (!layer_has_params(layer.kind)) continue;
    const auto wd = expected_weight_dims(graph, i);
    std::size_t count = 1;
    for (auto d : wd) count *= d;
    archive.add(layer.weight_slot(), wd, std::vector<float>(count, 0.0f));
    const auto bd = expected_bias_dims(graph, i);
    archive.add(layer.bias_slot(), bd, std::vector<float>(bd[0], 0.0f));
  }
  return archive;
}

}  // namespace lus
