#include "lus/training.hpp"

#include <numeric>

#include "lus/parallel.hpp"

namespace lus {

namespace {

// Class indices are fixed: covid = 0, healthy = 1 (probability vectors and
// reports follow the same order).
int class_index(Label label) { return label == Label::Covid ? 0 : 1; }

struct Example {
  std::size_t sample = 0;   // index into manifest.records
  std::size_t variant = 0;  // index into that sample's feature rows
};

void accumulate(HeadGradients<float>& sum, const HeadGradients<float>& g) {
  auto add = [](std::vector<float>& a, const std::vector<float>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(sum.w1, g.w1);
  add(sum.b1, g.b1);
  add(sum.w2, g.w2);
  add(sum.b2, g.b2);
}

void scale(HeadGradients<float>& g, float factor) {
  for (auto* v : {&g.w1, &g.b1, &g.w2, &g.b2}) {
    for (auto& x : *v) x *= factor;
  }
}

}  // namespace

TrainOutcome train_head_on_features(const DatasetManifest& manifest, const FoldPlan& folds,
                                    int feature_len, int head_width, int num_classes,
                                    const ImageFeatureFn& features, const TrainConfig& cfg,
                                    int image_hw) {
  if (manifest.records.empty()) throw DataError("train_head: empty manifest");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate < 0 || cfg.momentum < 0 ||
      cfg.momentum >= 1) {
    throw DataError("train_head: invalid training configuration");
  }
  if (num_classes != 2) throw ModelError("train_head: the classifier head is two-class");

  const std::size_t n_samples = manifest.records.size();

  // Feature table: [sample][variant] with variant 0 the untouched original.
  // Frozen backbone means features are constants; compute each exactly once.
  std::vector<std::vector<std::vector<float>>> table(n_samples);
  parallel_for(n_samples, [&](std::size_t i) {
    const SampleRecord& r = manifest.records[i];
    GrayImage img = read_pgm(r.image_path);
    if (img.width != image_hw || img.height != image_hw) {
      img = resize_bilinear(img, image_hw, image_hw);
    }
    std::vector<GrayImage> variants;
    if (cfg.use_augmentation) {
      const std::uint64_t sample_seed = splitmix64(cfg.seed ^ fnv1a64(r.id));
      for (auto& v : augment(img, std::nullopt, cfg.augment, sample_seed)) {
        variants.push_back(std::move(v.image));
      }
    } else {
      variants.push_back(std::move(img));
    }
    auto& rows = table[i];
    rows.reserve(variants.size());
    for (const auto& v : variants) {
      std::vector<float> f = features(v);
      if (static_cast<int>(f.size()) != feature_len) {
        throw ModelError("train_head: extractor returned " + std::to_string(f.size()) +
                         " features, expected " + std::to_string(feature_len));
      }
      rows.push_back(std::move(f));
    }
  });

  TrainOutcome outcome;
  std::vector<FoldMetrics> fold_metrics;

  for (int fold = 0; fold < folds.k; ++fold) {
    std::vector<Example> train_set;
    std::vector<std::size_t> train_originals, test_set;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const int f = folds.fold_of(manifest.records[i].video_id);
      if (f == fold) {
        test_set.push_back(i);
      } else {
        train_originals.push_back(i);
        for (std::size_t v = 0; v < table[i].size(); ++v) train_set.push_back({i, v});
      }
    }
    if (train_set.empty()) {
      throw DataError("train_head: empty training fold " + std::to_string(fold));
    }

    HeadParams<float> head = HeadParams<float>::he_init(feature_len, head_width, num_classes,
                                                        splitmix64(cfg.seed ^ (0xF01D + fold)));
    SgdState<float> state = SgdState<float>::zeros_like(head);
    std::vector<double> losses;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Pcg32 shuffle_rng(splitmix64(cfg.seed ^ (static_cast<std::uint64_t>(fold) << 32)),
                        static_cast<std::uint64_t>(epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.bounded(static_cast<std::uint32_t>(i))]);
      }

      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        HeadGradients<float> batch_grad;
        batch_grad.w1.assign(head.w1.size(), 0.0f);
        batch_grad.b1.assign(head.b1.size(), 0.0f);
        batch_grad.w2.assign(head.w2.size(), 0.0f);
        batch_grad.b2.assign(head.b2.size(), 0.0f);
        for (std::size_t k = start; k < end; ++k) {
          const Example& ex = train_set[order[k]];
          const auto& f = table[ex.sample][ex.variant];
          const int y = class_index(manifest.records[ex.sample].label);
          accumulate(batch_grad, head_gradients<float>(head, f, y));
          epoch_loss += cross_entropy<float>(head_forward<float>(head, f), y);
        }
        scale(batch_grad, 1.0f / static_cast<float>(end - start));
        sgd_step(head, batch_grad, state, cfg.learning_rate, cfg.momentum);
      }
      losses.push_back(epoch_loss / static_cast<double>(order.size()));
    }

    // Training accuracy on the untouched originals of the training folds.
    std::size_t correct = 0;
    for (auto i : train_originals) {
      const auto probs = head_forward<float>(head, table[i][0]);
      const int pred = probs[0] >= probs[1] ? 0 : 1;
      correct += pred == class_index(manifest.records[i].label) ? 1 : 0;
    }
    const double train_acc =
        train_originals.empty() ? 0.0 : static_cast<double>(correct) / train_originals.size();

    TrainedHead trained;
    trained.fold = fold;
    trained.params = head;
    trained.train_accuracy = train_acc;
    for (auto i : train_originals) trained.trained_on_ids.push_back(manifest.records[i].id);

    FoldMetrics fm;
    fm.fold = fold;
    fm.test_samples = test_set.size();
    fm.train_accuracy = train_acc;
    if (!test_set.empty()) {
      std::vector<Label> preds, truths;
      for (auto i : test_set) {
        const auto probs = head_forward<float>(head, table[i][0]);
        preds.push_back(probs[0] >= probs[1] ? Label::Covid : Label::Healthy);
        truths.push_back(manifest.records[i].label);
      }
      fm.classification = classification_metrics(preds, truths);
    }
    fold_metrics.push_back(std::move(fm));
    outcome.heads.push_back(std::move(trained));
    outcome.loss_per_epoch.push_back(std::move(losses));
  }

  outcome.report = aggregate(std::move(fold_metrics));
  outcome.original_features.reserve(n_samples);
  for (auto& rows : table) outcome.original_features.push_back(std::move(rows[0]));
  return outcome;
}

TrainOutcome train_head(const DatasetManifest& manifest, const FoldPlan& folds,
                        const ModelGraph& classifier, const WeightArchive& weights,
                        const TrainConfig& cfg) {
  if (classifier.head_start < 0) throw ModelError("train_head: classifier graph has no head");
  const BoundModel bound(classifier, weights);

  int head_width = 0, num_classes = 0;
  for (const auto& layer : classifier.layers) {
    if (layer.name == "head.fc1") head_width = layer.units;
    if (layer.name == "head.fc2") num_classes = layer.units;
  }
  if (head_width == 0 || num_classes == 0) {
    throw ModelError("train_head: classifier graph is missing head.fc1/head.fc2");
  }
  const int feature_len = classifier.shapes[classifier.head_start].c;

  ImageFeatureFn features = [&bound, &classifier](const GrayImage& img) {
    Tensor x = normalize(img);
    if (classifier.input.c > 1) x = replicate_channels(x, classifier.input.c);
    Tensor f = bound.run_backbone(x);
    return f.data;
  };
  return train_head_on_features(manifest, folds, feature_len, head_width, num_classes, features,
                                cfg, classifier.input.h);
}

WeightArchive head_to_archive(const HeadParams<float>& head) {
  WeightArchive a;
  a.add("head.fc1.weight",
        {static_cast<std::uint32_t>(head.hidden), static_cast<std::uint32_t>(head.in)}, head.w1);
  a.add("head.fc1.bias", {static_cast<std::uint32_t>(head.hidden)}, head.b1);
  a.add("head.fc2.weight",
        {static_cast<std::uint32_t>(head.classes), static_cast<std::uint32_t>(head.hidden)},
        head.w2);
  a.add("head.fc2.bias", {static_cast<std::uint32_t>(head.classes)}, head.b2);
  return a;
}

HeadParams<float> head_from_archive(const WeightArchive& archive) {
  const WeightEntry& w1 = archive.at("head.fc1.weight");
  const WeightEntry& b1 = archive.at("head.fc1.bias");
  const WeightEntry& w2 = archive.at("head.fc2.weight");
  const WeightEntry& b2 = archive.at("head.fc2.bias");
  if (w1.dims.size() != 2 || w2.dims.size() != 2) {
    throw ModelError("head archive: fc weights must be 2-D");
  }
  HeadParams<float> head;
  head.hidden = static_cast<int>(w1.dims[0]);
  head.in = static_cast<int>(w1.dims[1]);
  head.classes = static_cast<int>(w2.dims[0]);
  if (static_cast<int>(w2.dims[1]) != head.hidden || b1.values.size() != w1.dims[0] ||
      b2.values.size() != w2.dims[0]) {
    throw ModelError("head archive: inconsistent head shapes");
  }
  head.w1 = w1.values;
  head.b1 = b1.values;
  head.w2 = w2.values;
  head.b2 = b2.values;
  return head;
}

WeightArchive with_head(const WeightArchive& base, const HeadParams<float>& head) {
  const WeightArchive head_entries = head_to_archive(head);
  WeightArchive out;
  for (const auto& [name, entry] : base.entries()) {
    if (head_entries.contains(name)) {
      const auto& h = head_entries.at(name);
      out.add(name, h.dims, h.values);
    } else {
      out.add(name, entry.dims, entry.values);
    }
  }
  return out;
}

}  // namespace lus
