#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lus/augment.hpp"
#include "lus/dataset.hpp"
#include "lus/error.hpp"
#include "lus/graph.hpp"
#include "lus/image.hpp"
#include "lus/metrics.hpp"
#include "lus/rng.hpp"

namespace lus {

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 16;
  std::uint64_t seed = 0;
  bool use_augmentation = true;  // expand training folds with the augment plan
  AugmentConfig augment;
};

/// Classifier head: dense(in -> hidden) + relu + dense(hidden -> classes)
/// + softmax. Templated so gradient checks can run the identical math in
/// double precision; training itself stays in single precision.
template <typename T>
struct HeadParams {
  int in = 0, hidden = 0, classes = 0;
  std::vector<T> w1, b1;  // (hidden, in), (hidden)
  std::vector<T> w2, b2;  // (classes, hidden), (classes)

  static HeadParams he_init(int in, int hidden, int classes, std::uint64_t seed) {
    HeadParams p;
    p.in = in;
    p.hidden = hidden;
    p.classes = classes;
    p.w1.resize(static_cast<std::size_t>(hidden) * in);
    p.b1.assign(hidden, T(0));
    p.w2.resize(static_cast<std::size_t>(classes) * hidden);
    p.b2.assign(classes, T(0));
    Pcg32 rng1(splitmix64(seed ^ 0x68656164u), 1);
    const double lim1 = std::sqrt(6.0 / in);
    for (auto& v : p.w1) v = static_cast<T>(rng1.uniform(-lim1, lim1));
    Pcg32 rng2(splitmix64(seed ^ 0x68656164u), 2);
    const double lim2 = std::sqrt(6.0 / hidden);
    for (auto& v : p.w2) v = static_cast<T>(rng2.uniform(-lim2, lim2));
    return p;
  }

  template <typename U>
  HeadParams<U> cast() const {
    HeadParams<U> out;
    out.in = in;
    out.hidden = hidden;
    out.classes = classes;
    auto conv = [](const std::vector<T>& src, std::vector<U>& dst) {
      dst.resize(src.size());
      std::transform(src.begin(), src.end(), dst.begin(),
                     [](T v) { return static_cast<U>(v); });
    };
    conv(w1, out.w1);
    conv(b1, out.b1);
    conv(w2, out.w2);
    conv(b2, out.b2);
    return out;
  }

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

template <typename T>
struct HeadGradients {
  std::vector<T> w1, b1, w2, b2;
};

/// -log(p_true); probabilities clamped at 1e-12.
template <typename T>
T cross_entropy(std::span<const T> probs, int true_class) {
  if (true_class < 0 || true_class >= static_cast<int>(probs.size())) {
    throw ModelError("cross_entropy: class index out of range");
  }
  const T clamped = std::max(probs[true_class], static_cast<T>(1e-12));
  return -std::log(clamped);
}

/// Returns class probabilities (softmax with max subtraction).
template <typename T>
std::vector<T> head_forward(const HeadParams<T>& p, std::span<const T> features) {
  if (features.size() != static_cast<std::size_t>(p.in)) {
    throw ModelError("head_forward: feature length mismatch");
  }
  std::vector<T> hidden(p.hidden);
  for (int h = 0; h < p.hidden; ++h) {
    T acc = p.b1[h];
    const T* row = p.w1.data() + static_cast<std::size_t>(h) * p.in;
    for (int j = 0; j < p.in; ++j) acc += row[j] * features[j];
    hidden[h] = acc > T(0) ? acc : T(0);
  }
  std::vector<T> logits(p.classes);
  for (int c = 0; c < p.classes; ++c) {
    T acc = p.b2[c];
    const T* row = p.w2.data() + static_cast<std::size_t>(c) * p.hidden;
    for (int h = 0; h < p.hidden; ++h) acc += row[h] * hidden[h];
    logits[c] = acc;
  }
  T m = logits[0];
  for (T v : logits) m = std::max(m, v);
  T sum = T(0);
  std::vector<T> probs(p.classes);
  for (int c = 0; c < p.classes; ++c) {
    probs[c] = std::exp(logits[c] - m);
    sum += probs[c];
  }
  for (auto& v : probs) v /= sum;
  return probs;
}

/// Exact softmax-cross-entropy gradients: (softmax - one-hot) at the output
/// layer, back-propagated through dense -> relu -> dense.
template <typename T>
HeadGradients<T> head_gradients(const HeadParams<T>& p, std::span<const T> features,
                                int true_class) {
  if (features.size() != static_cast<std::size_t>(p.in)) {
    throw ModelError("head_gradients: feature length mismatch");
  }
  if (true_class < 0 || true_class >= p.classes) {
    throw ModelError("head_gradients: class index out of range");
  }
  // Forward, keeping pre-activations for the relu derivative.
  std::vector<T> z1(p.hidden), a1(p.hidden);
  for (int h = 0; h < p.hidden; ++h) {
    T acc = p.b1[h];
    const T* row = p.w1.data() + static_cast<std::size_t>(h) * p.in;
    for (int j = 0; j < p.in; ++j) acc += row[j] * features[j];
    z1[h] = acc;
    a1[h] = acc > T(0) ? acc : T(0);
  }
  std::vector<T> logits(p.classes);
  for (int c = 0; c < p.classes; ++c) {
    T acc = p.b2[c];
    const T* row = p.w2.data() + static_cast<std::size_t>(c) * p.hidden;
    for (int h = 0; h < p.hidden; ++h) acc += row[h] * a1[h];
    logits[c] = acc;
  }
  T m = logits[0];
  for (T v : logits) m = std::max(m, v);
  std::vector<T> probs(p.classes);
  T sum = T(0);
  for (int c = 0; c < p.classes; ++c) {
    probs[c] = std::exp(logits[c] - m);
    sum += probs[c];
  }
  for (auto& v : probs) v /= sum;

  HeadGradients<T> g;
  g.w1.assign(p.w1.size(), T(0));
  g.b1.assign(p.b1.size(), T(0));
  g.w2.assign(p.w2.size(), T(0));
  g.b2.assign(p.b2.size(), T(0));

  std::vector<T> dz2(p.classes);
  for (int c = 0; c < p.classes; ++c) dz2[c] = probs[c] - (c == true_class ? T(1) : T(0));

  for (int c = 0; c < p.classes; ++c) {
    g.b2[c] = dz2[c];
    T* row = g.w2.data() + static_cast<std::size_t>(c) * p.hidden;
    for (int h = 0; h < p.hidden; ++h) row[h] = dz2[c] * a1[h];
  }
  for (int h = 0; h < p.hidden; ++h) {
    if (z1[h] <= T(0)) continue;  // dead relu unit
    T da1 = T(0);
    for (int c = 0; c < p.classes; ++c) da1 += p.w2[static_cast<std::size_t>(c) * p.hidden + h] * dz2[c];
    g.b1[h] = da1;
    T* row = g.w1.data() + static_cast<std::size_t>(h) * p.in;
    for (int j = 0; j < p.in; ++j) row[j] = da1 * features[j];
  }
  return g;
}

template <typename T>
struct SgdState {
  std::vector<T> w1, b1, w2, b2;  // velocities

  static SgdState zeros_like(const HeadParams<T>& p) {
    SgdState s;
    s.w1.assign(p.w1.size(), T(0));
    s.b1.assign(p.b1.size(), T(0));
    s.w2.assign(p.w2.size(), T(0));
    s.b2.assign(p.b2.size(), T(0));
    return s;
  }
};

/// velocity = momentum * velocity - lr * grad; param += velocity.
template <typename T>
void sgd_step(HeadParams<T>& params, const HeadGradients<T>& grads, SgdState<T>& state,
              double learning_rate, double momentum) {
  auto update = [&](std::vector<T>& p, const std::vector<T>& g, std::vector<T>& v) {
    if (p.size() != g.size() || p.size() != v.size()) {
      throw ModelError("sgd_step: parameter/gradient/state shape mismatch");
    }
    const T lr = static_cast<T>(learning_rate);
    const T mu = static_cast<T>(momentum);
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = mu * v[i] - lr * g[i];
      p[i] += v[i];
    }
  };
  update(params.w1, grads.w1, state.w1);
  update(params.b1, grads.b1, state.b1);
  update(params.w2, grads.w2, state.w2);
  update(params.b2, grads.b2, state.b2);
}

/// Features for one preprocessed (grayscale, model-sized) frame.
using ImageFeatureFn = std::function<std::vector<float>(const GrayImage&)>;

struct TrainedHead {
  int fold = 0;
  HeadParams<float> params;
  double train_accuracy = 0.0;
  std::vector<std::string> trained_on_ids;  // fold-tag bookkeeping
};

struct TrainOutcome {
  std::vector<TrainedHead> heads;
  EvalReport report;
  std::vector<std::vector<double>> loss_per_epoch;  // [fold][epoch] mean loss
  // Unaugmented per-sample features in manifest order; the backbone is
  // frozen, so downstream evaluation can reuse them instead of re-running it.
  std::vector<std::vector<float>> original_features;
};

/// Per-fold head fine-tuning on frozen features: for each fold, trains on
/// the other k-1 folds (augmented when configured; variants inherit the
/// source frame's fold) and evaluates on the held-out fold. Deterministic
/// for a fixed config; features are computed once per distinct image.
TrainOutcome train_head_on_features(const DatasetManifest& manifest, const FoldPlan& folds,
                                    int feature_len, int head_width, int num_classes,
                                    const ImageFeatureFn& features, const TrainConfig& cfg,
                                    int image_hw = 224);

/// The production path: features come from the frozen classifier backbone
/// (layers before the head), flattened. The backbone weight entries are
/// never touched.
TrainOutcome train_head(const DatasetManifest& manifest, const FoldPlan& folds,
                        const ModelGraph& classifier, const WeightArchive& weights,
                        const TrainConfig& cfg);

/// Trained head as an LSW1-ready archive holding only head.* slots.
WeightArchive head_to_archive(const HeadParams<float>& head);
HeadParams<float> head_from_archive(const WeightArchive& archive);

/// Replaces head.fc*.{weight,bias} entries in a full classifier archive.
WeightArchive with_head(const WeightArchive& base, const HeadParams<float>& head);

}  // namespace lus
