#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lus/kernels.hpp"
#include "lus/tensor.hpp"
#include "lus/weights.hpp"

namespace lus {

enum class LayerKind { Conv, Relu, MaxPool, UpConv, Concat, Flatten, Dense, Softmax, Sigmoid };

const char* layer_kind_name(LayerKind kind);
bool layer_has_params(LayerKind kind);

/// One layer of an immutable feed-forward graph. Layers consume the
/// previous layer's output; Concat additionally appends the output of an
/// earlier layer (concat_with), previous-first.
struct LayerSpec {
  LayerKind kind{};
  std::string name;       // parameter-slot prefix, e.g. "block1.conv1"
  int out_channels = 0;   // conv / upconv
  int kernel = 0;         // conv
  int stride = 1;
  int padding = 0;
  int units = 0;          // dense
  int concat_with = -1;   // layer index; Concat only

  std::string weight_slot() const { return name + ".weight"; }
  std::string bias_slot() const { return name + ".bias"; }
};

struct Shape3 {
  int c = 0, h = 0, w = 0;
  bool operator==(const Shape3&) const = default;
};

enum class HeadKind { ClassProbabilities, MaskProbabilities };

/// Ordered layer graph with propagated shapes. Built once by a builder,
/// validated at construction, then shared freely across threads.
struct ModelGraph {
  std::string name;
  Shape3 input{};
  HeadKind head = HeadKind::ClassProbabilities;
  std::vector<LayerSpec> layers;
  std::vector<Shape3> shapes;            // per-layer output shape
  std::vector<std::string> trainable;    // slot names updated by training
  int head_start = -1;                   // first classifier-head layer, -1 if none

  Shape3 output_shape() const { return layers.empty() ? input : shapes.back(); }
};

/// Propagates shapes and validates layer-to-layer consistency.
ModelGraph make_graph(std::string name, Shape3 input, HeadKind head,
                      std::vector<LayerSpec> layers, int head_start = -1);

/// Parameter slot names in layer order (weight before bias per layer).
std::vector<std::string> parameter_slots(const ModelGraph& graph);

/// Dims each parameter slot must have, given the propagated shapes.
std::vector<std::uint32_t> expected_weight_dims(const ModelGraph& graph, std::size_t layer);
std::vector<std::uint32_t> expected_bias_dims(const ModelGraph& graph, std::size_t layer);

/// Checks that every slot exists with matching dims; throws ModelError
/// before any kernel runs. Extra archive entries are ignored.
void validate_weights(const ModelGraph& graph, const WeightArchive& weights);

struct LayerTiming {
  std::string name;
  std::string kind;
  double ms = 0.0;
  bool parameterized = false;
};

/// A graph bound to a validated weight archive; parameters are copied once
/// so repeated forward passes do no per-call weight work. Reentrant.
class BoundModel {
 public:
  BoundModel(const ModelGraph& graph, const WeightArchive& weights);

  const ModelGraph& graph() const { return *graph_; }

  Tensor run(const Tensor& input) const { return run_range(input, 0, graph_->layers.size(), nullptr); }
  Tensor run_timed(const Tensor& input, std::vector<LayerTiming>& timings) const;

  /// Backbone output for classifier graphs: layers before head_start.
  Tensor run_backbone(const Tensor& input) const;

 private:
  Tensor run_range(const Tensor& input, std::size_t first, std::size_t last,
                   std::vector<LayerTiming>* timings) const;

  const ModelGraph* graph_;
  struct BoundLayer {
    Conv2dParams conv;    // Conv / UpConv
    DenseParams dense;    // Dense
  };
  std::vector<BoundLayer> bound_;
  std::vector<int> last_use_;  // frees intermediates as soon as possible
};

/// One-shot execution: binds, validates, runs.
Tensor forward(const ModelGraph& graph, const WeightArchive& weights, const Tensor& input);

struct SummaryRow {
  std::string name;
  std::string kind;
  Shape3 out{};
  std::size_t params = 0;
};

std::vector<SummaryRow> summarize_rows(const ModelGraph& graph);
std::size_t parameter_count(const ModelGraph& graph);

/// Plain-text table: layer kind, output shape, parameter count, and a
/// total line.
std::string summarize(const ModelGraph& graph);

/// Deterministic He-uniform initialization (bias zero) for every parameter
/// slot; each slot gets an independent stream derived from the seed and the
/// slot name.
WeightArchive he_uniform_init(const ModelGraph& graph, std::uint64_t seed);
WeightArchive zero_init(const ModelGraph& graph);

}  // namespace lus
