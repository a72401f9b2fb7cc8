// Acceptance suite: runs every top-level contract of the pipeline at its
// stated tolerance and prints one [PASS]/[FAIL] line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lus/augment.hpp"
#include "lus/bench.hpp"
#include "lus/dataset.hpp"
#include "lus/graph.hpp"
#include "lus/metrics.hpp"
#include "lus/pipeline.hpp"
#include "lus/rng.hpp"
#include "lus/training.hpp"
#include "lus/unet.hpp"
#include "lus/vgg16.hpp"
#include "lus/weights.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace lus;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1. kernel oracles -----------------------------------------------------

void criterion_kernel_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Pcg32 rng(1001, 1);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(2));
    const int ci = 1 + static_cast<int>(rng.bounded(4));
    const int co = 1 + static_cast<int>(rng.bounded(4));
    const int k = rng.bounded(2) ? 3 : 1;
    const int pad = static_cast<int>(rng.bounded(2));
    const int stride = 1 + static_cast<int>(rng.bounded(2));
    const int h = k + static_cast<int>(rng.bounded(7));
    const int w = k + static_cast<int>(rng.bounded(7));
    Tensor x = random_tensor(n, ci, h, w, 3000 + trial);
    Tensor wt = random_tensor(co, ci, k, k, 4000 + trial);
    std::vector<float> bias(co);
    for (auto& b : bias) b = static_cast<float>(rng.uniform(-0.5, 0.5));
    const Tensor got = conv2d(x, {wt, bias, stride, pad});
    const Tensor want = oracle::conv2d(x, wt, bias, stride, pad);
    require(oracle::max_abs_diff(got, want) < 1e-5f, "conv2d oracle diff >= 1e-5");
  }

  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(1 + static_cast<int>(rng.bounded(2)), 1 + static_cast<int>(rng.bounded(3)),
                             2 * (1 + static_cast<int>(rng.bounded(5))),
                             2 * (1 + static_cast<int>(rng.bounded(5))), 5000 + trial);
    require(oracle::max_abs_diff(maxpool2x2(x), oracle::maxpool2x2(x)) < 1e-5f,
            "maxpool oracle diff >= 1e-5");
  }

  for (int trial = 0; trial < 50; ++trial) {
    const int ci = 1 + static_cast<int>(rng.bounded(3));
    const int co = 1 + static_cast<int>(rng.bounded(3));
    Tensor x = random_tensor(1, ci, 1 + static_cast<int>(rng.bounded(5)),
                             1 + static_cast<int>(rng.bounded(5)), 6000 + trial);
    Tensor wt = random_tensor(co, ci, 2, 2, 7000 + trial);
    std::vector<float> bias(co);
    for (auto& b : bias) b = static_cast<float>(rng.uniform(-0.5, 0.5));
    const Tensor got = transposed_conv2x2(x, {wt, bias, 2, 0});
    const Tensor want = oracle::transposed_conv2x2(x, wt, bias);
    require(oracle::max_abs_diff(got, want) < 1e-5f, "transposed conv oracle diff >= 1e-5");
  }

  require(seconds_since(t0) < 60.0, "kernel oracle suite exceeded 1 minute");
}

// ---- 2. architecture anchors -----------------------------------------------

void criterion_architecture_anchors() {
  const ModelGraph unet = build_unet();
  require(conv_layer_count(unet) == 23, "unet conv-type layer count != 23");

  bool final_ok = false;
  for (std::size_t i = 0; i < unet.layers.size(); ++i) {
    if (unet.layers[i].name == "unet.final") {
      const auto dims = expected_weight_dims(unet, i);
      final_ok = dims.size() == 4 && dims[1] == 64 && dims[2] == 1 && dims[3] == 1;
    }
  }
  require(final_ok, "unet final conv is not 1x1 with 64 input channels");

  const ModelGraph vgg = build_vgg16();
  int convs = 0;
  for (const auto& l : vgg.layers) convs += l.kind == LayerKind::Conv ? 1 : 0;
  require(convs == 13, "vgg16 conv layer count != 13");

  const WeightArchive vgg_w = he_uniform_init(vgg, 11);
  const Tensor probs = forward(vgg, vgg_w, random_tensor(1, 3, 224, 224, 12, 0.0f, 1.0f));
  require(probs.size() == 2, "vgg16 output is not 2-class");
  require(probs.data[0] >= 0.0f && probs.data[1] >= 0.0f &&
              std::abs(probs.data[0] + probs.data[1] - 1.0f) < 1e-6f,
          "vgg16 output is not a probability vector");

  const WeightArchive unet_w = he_uniform_init(unet, 13);
  const Tensor mask = forward(unet, unet_w, random_tensor(1, 1, 224, 224, 14, 0.0f, 1.0f));
  require(mask.h == 224 && mask.w == 224 && mask.c == 1,
          "unet output dims do not equal input dims at 224x224");
}

// ---- 3. gradient check -----------------------------------------------------

void criterion_gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();

  auto fd = [](const HeadParams<double>& params, std::vector<double> HeadParams<double>::*field,
               std::size_t idx, const std::vector<double>& features, int y) {
    const double h = 1e-5;
    auto loss_at = [&](double delta) {
      HeadParams<double> p = params;
      (p.*field)[idx] += delta;
      return cross_entropy<double>(head_forward<double>(p, features), y);
    };
    return (loss_at(h) - loss_at(-h)) / (2.0 * h);
  };
  auto close = [](double a, double b) {
    const double mag = std::max(std::abs(a), std::abs(b));
    return mag < 1e-8 || std::abs(a - b) / mag < 1e-4;
  };

  for (int draw = 0; draw < 20; ++draw) {
    auto params = HeadParams<double>::he_init(16, 8, 2, 8000 + draw);
    Pcg32 rng(9000 + draw, 2);
    for (auto& b : params.b1) b = rng.uniform(-0.2, 0.2);
    std::vector<double> features(16);
    for (auto& f : features) f = rng.uniform(-1.0, 1.0);
    const int y = static_cast<int>(rng.bounded(2));
    const auto grads = head_gradients<double>(params, features, y);

    const struct {
      std::vector<double> HeadParams<double>::*p;
      const std::vector<double>* g;
    } fields[] = {{&HeadParams<double>::w1, &grads.w1},
                  {&HeadParams<double>::b1, &grads.b1},
                  {&HeadParams<double>::w2, &grads.w2},
                  {&HeadParams<double>::b2, &grads.b2}};
    for (const auto& f : fields) {
      for (std::size_t i = 0; i < f.g->size(); ++i) {
        require(close((*f.g)[i], fd(params, f.p, i, features, y)),
                "analytic gradient differs from finite differences");
      }
    }
  }
  require(seconds_since(t0) < 60.0, "gradient check exceeded 1 minute");
}

// ---- 4. augmentation contract ----------------------------------------------

void criterion_augmentation() {
  GrayImage img(48, 48);
  Pcg32 rng(1234, 3);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.bounded(256));
  GrayImage mask(48, 48, 0);
  for (int y = 10; y < 30; ++y)
    for (int x = 8; x < 20; ++x) mask.at(x, y) = 255;

  AugmentConfig cfg;
  const auto a = augment(img, mask, cfg, 555);
  require(a.size() >= 10, "fewer than 10 variants per sample");
  require(a[0].image == img, "first variant is not the untouched original");

  require(hflip(hflip(img)) == img && vflip(vflip(img)) == img, "double flip is not the identity");

  const auto b = augment(img, mask, cfg, 555);
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i].image == b[i].image && *a[i].mask == *b[i].mask,
            "same-seed replay is not bit-identical");
  }

  for (const auto& v : a) {
    for (auto p : v.mask->pixels) {
      require(p == 0 || p == 255, "mask left the {0,255} set");
    }
  }
}

// ---- 5. fold contract --------------------------------------------------------

void criterion_folds() {
  test::TempDir dir;
  const DatasetManifest manifest = load_manifest(test::write_flat_manifest(dir.path(), 50, 30));
  require(manifest.records.size() == 1500, "synthetic manifest size mismatch");
  require(manifest.count_label(Label::Covid) == 750, "covid class count mismatch");

  const FoldPlan plan = make_folds(manifest, 5, 99);
  const FoldPlan again = make_folds(manifest, 5, 99);
  require(plan.assignment == again.assignment, "fold plan not deterministic under fixed seed");

  std::vector<int> videos_per_fold(5, 0);
  for (const auto& [video, fold] : plan.assignment) {
    require(fold >= 0 && fold < 5, "fold index out of range");
    ++videos_per_fold[fold];
  }
  for (int f = 0; f < 5; ++f) {
    require(videos_per_fold[f] == 10, "fold does not hold exactly 10 videos");
  }

  std::vector<std::set<std::string>> ids(5);
  for (const auto& r : manifest.records) ids[plan.fold_of(r.video_id)].insert(r.id);
  std::size_t total = 0;
  for (const auto& s : ids) total += s.size();
  require(total == manifest.records.size(), "folds are not exhaustive");
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      for (const auto& id : ids[i]) {
        require(ids[j].count(id) == 0, "folds are not disjoint");
      }
    }
  }
}

// ---- 6. metric oracles -------------------------------------------------------

void criterion_metrics() {
  GrayImage a(8, 8, 0), b(8, 8, 0), empty(8, 8, 0);
  for (int i = 0; i < 5; ++i) a.pixels[i] = 255;
  for (int i = 5; i < 9; ++i) b.pixels[i] = 255;
  require(std::abs(iou(a, a) - 1.0) < 1e-12, "iou(identical) != 1");
  require(std::abs(iou(a, b) - 0.0) < 1e-12, "iou(disjoint) != 0");
  require(std::abs(iou(empty, empty) - 1.0) < 1e-12, "iou(empty, empty) != 1");

  std::vector<Label> truths, preds;
  auto push = [&](int t, int p, int count) {
    for (int i = 0; i < count; ++i) {
      truths.push_back(t ? Label::Covid : Label::Healthy);
      preds.push_back(p ? Label::Covid : Label::Healthy);
    }
  };
  push(1, 1, 3);  // tp
  push(1, 0, 1);  // fn
  push(0, 0, 4);  // tn
  push(0, 1, 2);  // fp
  const auto m = classification_metrics(preds, truths);
  require(std::abs(*m.sensitivity - 0.75) < 1e-9, "sensitivity != 0.75");
  require(std::abs(*m.specificity - 2.0 / 3.0) < 1e-9, "specificity != 2/3");
  require(std::abs(*m.accuracy - 0.7) < 1e-9, "accuracy != 0.7");
}

// ---- 7. end-to-end smoke -----------------------------------------------------

void criterion_smoke(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  test::TempDir dir;

  test::SyntheticSpec spec;
  spec.videos_per_class = 2;   // 4 videos
  spec.frames_per_video = 10;  // 40 images
  spec.image_size = 224;
  spec.seed = 20240501;
  const DatasetManifest manifest = load_manifest(test::write_synthetic_dataset(dir.path() / "data", spec));
  require(manifest.records.size() == 40, "smoke dataset is not 40 images");
  const FoldPlan folds = make_folds(manifest, 2, 7);

  const ModelGraph classifier = build_vgg16();
  const WeightArchive classifier_weights = he_uniform_init(classifier, 42);
  const auto backbone_bytes_before = serialize(classifier_weights);

  UnetConfig seg_cfg;
  seg_cfg.base_channels = 8;  // narrow width keeps the single-core run inside the budget
  const ModelGraph segmenter = build_unet(seg_cfg);
  const WeightArchive segmenter_weights = he_uniform_init(segmenter, 43);

  EvaluateOptions opts;
  opts.out_dir = dir.path() / "out";
  opts.train.epochs = 40;
  opts.train.learning_rate = 1e-3;
  opts.train.batch_size = 8;
  opts.train.seed = 5;
  opts.train.use_augmentation = false;  // the >=10x expansion is criterion 4's contract

  PipelineModels models{&classifier, &classifier_weights, &segmenter, &segmenter_weights};
  const EvaluateOutcome outcome = evaluate(manifest, folds, models, opts);

  require(serialize(classifier_weights) == backbone_bytes_before,
          "backbone weights changed during head training");

  const auto& agg = outcome.report.aggregate;
  require(agg.count("train_accuracy") == 1, "report is missing train_accuracy");
  require(agg.at("train_accuracy").mean >= 0.95, "training accuracy below 0.95");

  // Schema check on the written report.
  std::ifstream in(outcome.report_path);
  require(in.good(), "evaluation.json was not written");
  nlohmann::json j;
  in >> j;
  require(j.contains("folds") && j.contains("aggregate") && j.contains("samples"),
          "report missing top-level keys");
  require(j["folds"].size() == 2, "report does not contain exactly 2 folds");
  std::size_t covered = 0;
  for (const auto& f : j["folds"]) covered += f.at("test_samples").get<std::size_t>();
  require(covered == manifest.records.size(), "folds do not cover all samples");
  require(j["samples"].size() == manifest.records.size(), "per-sample report incomplete");
  for (const auto& s : j["samples"]) {
    require(s.contains("id") && s.contains("label_pred") && s.contains("overlay_path") &&
                s["probs"].contains("covid") && s["probs"].contains("healthy") &&
                s["timing_ms"].contains("preprocess") && s["timing_ms"].contains("classify") &&
                s["timing_ms"].contains("segment") && s["timing_ms"].contains("overlay") &&
                s["timing_ms"].contains("total"),
            "sample report missing schema fields");
    const double pc = s["probs"]["covid"].get<double>();
    const double ph = s["probs"]["healthy"].get<double>();
    require(std::abs(pc + ph - 1.0) < 1e-6, "sample probabilities do not sum to 1");
    require(fs::exists(fs::path(s["overlay_path"].get<std::string>())), "overlay file missing");
  }

  const double elapsed = seconds_since(t0);
  require(elapsed < 300.0, "smoke run exceeded 5 minutes");
  std::ostringstream os;
  os << "train_acc=" << agg.at("train_accuracy").mean << " test_acc=" << agg.at("accuracy").mean
     << " " << static_cast<int>(elapsed) << "s";
  detail = os.str();
}

// ---- 8. weight format --------------------------------------------------------

void criterion_weight_format() {
  test::TempDir dir;
  WeightArchive archive;
  Pcg32 rng(2222, 4);
  archive.add("unet.down1.conv1.weight", {8, 1, 3, 3}, [&] {
    std::vector<float> v(72);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
    return v;
  }());
  archive.add("unet.down1.conv1.bias", {8}, std::vector<float>(8, 0.25f));
  archive.add("head.fc2.weight", {2, 64}, [&] {
    std::vector<float> v(128);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
    return v;
  }());

  const fs::path p = dir.path() / "roundtrip.lsw1";
  save(archive, p);
  const WeightArchive back = load(p);
  require(archive == back, "LSW1 round trip is not bit-identical");
  require(serialize(archive) == serialize(back), "LSW1 byte streams differ after round trip");

  const auto clean = serialize(archive);
  int detected = 0;
  for (int i = 0; i < 100; ++i) {
    auto corrupted = clean;
    const auto pos = rng.bounded(static_cast<std::uint32_t>(corrupted.size()));
    corrupted[pos] ^= static_cast<std::uint8_t>(1u << rng.bounded(8));
    try {
      deserialize(corrupted);
    } catch (const ArchiveError&) {
      ++detected;
    }
  }
  require(detected == 100, "only " + std::to_string(detected) + "/100 corruptions detected");
}

// ---- 9. bench sanity -----------------------------------------------------------

void criterion_bench(std::string& detail) {
  const ModelGraph vgg = build_vgg16();
  const WeightArchive w = he_uniform_init(vgg, 77);
  const BenchReport report = bench(vgg, w, 3, 1, 7);

  require(report.layers.size() == 15, "bench does not list 15 timed VGG layers");
  int convs = 0, denses = 0;
  for (const auto& l : report.layers) {
    convs += l.kind == "conv" ? 1 : 0;
    denses += l.kind == "dense" ? 1 : 0;
  }
  require(convs == 13 && denses == 2, "timed layer kinds are not 13 conv + 2 dense");

  double layer_sum = 0.0;
  for (const auto& l : report.layers) layer_sum += l.mean_ms;
  const double rel = std::abs(layer_sum - report.end_to_end_mean_ms) / report.end_to_end_mean_ms;
  require(rel < 0.10, "layer-time sum deviates from end-to-end mean by " +
                          std::to_string(rel * 100.0) + "%");
  std::ostringstream os;
  os << "e2e=" << static_cast<int>(report.end_to_end_mean_ms) << "ms layers="
     << static_cast<int>(layer_sum) << "ms";
  detail = os.str();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(std::string&)> run;
  };
  auto plain = [](void (*fn)()) {
    return [fn](std::string&) { fn(); };
  };

  const Criterion criteria[] = {
      {1, "kernel-oracle suite (conv2d/maxpool/upconv vs naive loops, <1e-5)", plain(criterion_kernel_oracles)},
      {2, "architecture anchors (23 U-Net conv layers, 13 VGG convs, shapes)", plain(criterion_architecture_anchors)},
      {3, "gradient check vs central finite differences (<1e-4 rel, double)", plain(criterion_gradient_check)},
      {4, "augmentation contract (>=10 variants, involutions, replay, masks)", plain(criterion_augmentation)},
      {5, "fold contract (50 videos -> 5x10, disjoint, exhaustive, grouped)", plain(criterion_folds)},
      {6, "metric oracles (IoU edge cases, hand-counted confusion rates)", plain(criterion_metrics)},
      {7, "end-to-end smoke (train-head + evaluate on synthetic data)", criterion_smoke},
      {8, "weight format (LSW1 round trip, 100/100 corruptions detected)", plain(criterion_weight_format)},
      {9, "bench sanity (15 timed VGG layers, additive within 10%)", criterion_bench},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
      c.run(detail);
      std::printf("[PASS] %d. %s (%.1fs%s%s)\n", c.id, c.name, seconds_since(t0),
                  detail.empty() ? "" : "; ", detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] %d. %s: %s\n", c.id, c.name, e.what());
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", std::size(criteria));
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
