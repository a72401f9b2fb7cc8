#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "lus/bench.hpp"
#include "lus/error.hpp"
#include "lus/pipeline.hpp"
#include "lus/unet.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace lus;
namespace fs = std::filesystem;

namespace {

// A small stand-in classifier with the same output contract as VGG-16.
ModelGraph toy_classifier(int hw = 32) {
  std::vector<LayerSpec> layers;
  const int head_start = 0;
  layers.push_back({.kind = LayerKind::Flatten});
  LayerSpec fc1;
  fc1.kind = LayerKind::Dense;
  fc1.name = "head.fc1";
  fc1.units = 4;
  layers.push_back(fc1);
  layers.push_back({.kind = LayerKind::Relu});
  LayerSpec fc2;
  fc2.kind = LayerKind::Dense;
  fc2.name = "head.fc2";
  fc2.units = 2;
  layers.push_back(fc2);
  layers.push_back({.kind = LayerKind::Softmax});
  return make_graph("toy_classifier", {3, hw, hw}, HeadKind::ClassProbabilities, std::move(layers),
                    head_start);
}

ModelGraph toy_segmenter(int hw = 32) {
  UnetConfig cfg;
  cfg.base_channels = 2;
  cfg.input_hw = hw;
  return build_unet(cfg);
}

}  // namespace

TEST_CASE("render_overlay blends mask pixels toward red") {
  GrayImage gray(3, 1, 100);
  GrayImage mask(3, 1, 0);
  mask.at(1, 0) = 255;

  RgbImage overlay = render_overlay(gray, mask);
  // untouched pixel: grayscale replicated
  CHECK(overlay.pixels[0] == 100);
  CHECK(overlay.pixels[1] == 100);
  CHECK(overlay.pixels[2] == 100);
  // masked pixel: round(0.6*100 + 0.4*255) = 162, round(0.6*100) = 60
  CHECK(overlay.pixels[3] == 162);
  CHECK(overlay.pixels[4] == 60);
  CHECK(overlay.pixels[5] == 60);

  GrayImage black(2, 2, 0);
  GrayImage full(2, 2, 255);
  RgbImage red = render_overlay(black, full);
  for (int i = 0; i < 4; ++i) {
    CHECK(red.pixels[3 * i] == 102);  // 0.4 * 255
    CHECK(red.pixels[3 * i + 1] == 0);
    CHECK(red.pixels[3 * i + 2] == 0);
  }

  GrayImage empty_mask(2, 2, 0);
  RgbImage plain = render_overlay(black, empty_mask);
  for (std::size_t i = 0; i < plain.pixels.size(); ++i) CHECK(plain.pixels[i] == 0);

  GrayImage wrong(3, 2, 0);
  CHECK_THROWS_AS(render_overlay(gray, wrong), DataError);
}

TEST_CASE("infer_single with zero weights reports the uniform case") {
  test::TempDir dir;
  GrayImage frame(48, 48, 90);
  write_pgm(frame, dir.path() / "frame.pgm");

  ModelGraph cls = toy_classifier();
  ModelGraph seg = toy_segmenter();
  WeightArchive cls_w = zero_init(cls);
  WeightArchive seg_w = zero_init(seg);
  PipelineModels models{&cls, &cls_w, &seg, &seg_w};

  InferOptions opts;
  opts.out_dir = dir.path() / "out";
  InferenceReport r = infer_single(dir.path() / "frame.pgm", models, opts);

  CHECK(r.id == "frame");
  CHECK(r.prob_covid == doctest::Approx(0.5));
  CHECK(r.prob_healthy == doctest::Approx(0.5));
  CHECK(r.label_pred == Label::Covid);  // argmax ties resolve to the first class
  CHECK(r.prob_covid + r.prob_healthy == doctest::Approx(1.0).epsilon(1e-6));

  // sigmoid(0) = 0.5 and the threshold is inclusive: the whole mask is set,
  // so the overlay is the red blend everywhere at processing resolution.
  REQUIRE_FALSE(r.overlay_path.empty());
  RgbImage overlay = read_ppm(r.overlay_path);
  CHECK(overlay.width == 32);
  CHECK(overlay.height == 32);
  for (std::size_t i = 0; i < overlay.pixels.size(); i += 3) {
    CHECK(overlay.pixels[i + 1] == overlay.pixels[i + 2]);
    CHECK(overlay.pixels[i] > overlay.pixels[i + 1]);
  }

  CHECK(r.timing_ms.total + 1.0 >= r.timing_ms.preprocess + r.timing_ms.classify +
                                       r.timing_ms.segment + r.timing_ms.overlay);
}

TEST_CASE("infer_single is deterministic apart from timings") {
  test::TempDir dir;
  write_pgm(GrayImage(64, 64, 33), dir.path() / "f.pgm");
  ModelGraph cls = toy_classifier();
  ModelGraph seg = toy_segmenter();
  WeightArchive cls_w = he_uniform_init(cls, 3);
  WeightArchive seg_w = he_uniform_init(seg, 4);
  PipelineModels models{&cls, &cls_w, &seg, &seg_w};
  InferOptions opts;
  opts.out_dir = dir.path() / "o";

  InferenceReport a = infer_single(dir.path() / "f.pgm", models, opts);
  InferenceReport b = infer_single(dir.path() / "f.pgm", models, opts);
  CHECK(a.prob_covid == b.prob_covid);
  CHECK(a.prob_healthy == b.prob_healthy);
  CHECK(a.label_pred == b.label_pred);
  CHECK(read_ppm(a.overlay_path) == read_ppm(b.overlay_path));
}

TEST_CASE("infer_single rejects missing inputs") {
  test::TempDir dir;
  ModelGraph cls = toy_classifier();
  WeightArchive cls_w = zero_init(cls);
  PipelineModels broken{&cls, &cls_w, nullptr, nullptr};
  CHECK_THROWS_AS(infer_single(dir.path() / "f.pgm", broken, {}), ModelError);
}

namespace {

ClassifyFn oracle_classifier(bool inverted = false) {
  return [inverted](const SampleRecord& rec, const GrayImage&) {
    const bool covid = (rec.label == Label::Covid) != inverted;
    return std::vector<float>{covid ? 1.0f : 0.0f, covid ? 0.0f : 1.0f};
  };
}

SegmentFn oracle_segmenter(int hw) {
  return [hw](const SampleRecord& rec, const GrayImage&) {
    GrayImage truth = rec.mask_path ? read_pgm(*rec.mask_path) : GrayImage(hw, hw, 0);
    truth = resize_nearest(truth, hw, hw);
    Tensor probs(1, 1, hw, hw);
    for (std::size_t i = 0; i < truth.pixels.size(); ++i) {
      probs.data[i] = truth.pixels[i] != 0 ? 1.0f : 0.0f;
    }
    return probs;
  };
}

}  // namespace

TEST_CASE("evaluate with oracle predictors is perfect; anti-oracle is zero") {
  test::TempDir dir;
  test::SyntheticSpec spec;
  spec.image_size = 32;
  spec.frames_per_video = 4;
  DatasetManifest manifest = load_manifest(test::write_synthetic_dataset(dir.path(), spec));
  FoldPlan folds = make_folds(manifest, 2, 5);

  EvaluateOptions opts;
  opts.out_dir = dir.path() / "out";
  auto outcome =
      evaluate_with_predictors(manifest, folds, oracle_classifier(), oracle_segmenter(32), opts, 32);

  CHECK(outcome.report.folds.size() == 2);
  CHECK(outcome.report.aggregate.at("accuracy").mean == doctest::Approx(1.0));
  CHECK(outcome.report.aggregate.at("mean_iou").mean == doctest::Approx(1.0));
  CHECK(outcome.samples.size() == manifest.records.size());

  std::size_t covered = 0;
  for (const auto& fm : outcome.report.folds) covered += fm.test_samples;
  CHECK(covered == manifest.records.size());

  auto anti = evaluate_with_predictors(manifest, folds, oracle_classifier(true), {}, {}, 32);
  CHECK(anti.report.aggregate.at("accuracy").mean == doctest::Approx(0.0));
}

TEST_CASE("evaluate output is independent of the worker count") {
  test::TempDir dir;
  test::SyntheticSpec spec;
  spec.image_size = 24;
  spec.frames_per_video = 3;
  DatasetManifest manifest = load_manifest(test::write_synthetic_dataset(dir.path(), spec));
  FoldPlan folds = make_folds(manifest, 2, 6);

  EvaluateOptions seq;
  seq.workers = 1;
  seq.write_overlays = false;
  EvaluateOptions par = seq;
  par.workers = 3;

  auto a = evaluate_with_predictors(manifest, folds, oracle_classifier(), oracle_segmenter(24), seq, 24);
  auto b = evaluate_with_predictors(manifest, folds, oracle_classifier(), oracle_segmenter(24), par, 24);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].id == b.samples[i].id);
    CHECK(a.samples[i].label_pred == b.samples[i].label_pred);
    CHECK(a.samples[i].prob_covid == b.samples[i].prob_covid);
    CHECK(a.samples[i].iou == b.samples[i].iou);
  }
}

TEST_CASE("evaluate writes a schema-complete JSON report and overlays") {
  test::TempDir dir;
  test::SyntheticSpec spec;
  spec.image_size = 24;
  spec.frames_per_video = 2;
  DatasetManifest manifest = load_manifest(test::write_synthetic_dataset(dir.path(), spec));
  FoldPlan folds = make_folds(manifest, 2, 7);

  EvaluateOptions opts;
  opts.out_dir = dir.path() / "out";
  auto outcome =
      evaluate_with_predictors(manifest, folds, oracle_classifier(), oracle_segmenter(24), opts, 24);

  REQUIRE_FALSE(outcome.report_path.empty());
  std::ifstream in(outcome.report_path);
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  REQUIRE(j.contains("folds"));
  REQUIRE(j.contains("aggregate"));
  REQUIRE(j.contains("samples"));
  REQUIRE(j["samples"].is_array());
  for (const auto& s : j["samples"]) {
    CHECK(s.contains("id"));
    CHECK(s.contains("label_pred"));
    CHECK(s["probs"].contains("covid"));
    CHECK(s["probs"].contains("healthy"));
    CHECK(s.contains("overlay_path"));
    CHECK(s["timing_ms"].contains("preprocess"));
    CHECK(s["timing_ms"].contains("classify"));
    CHECK(s["timing_ms"].contains("segment"));
    CHECK(s["timing_ms"].contains("overlay"));
    CHECK(s["timing_ms"].contains("total"));
  }
  // Covid samples carry ground truth, so their reports include IoU and an
  // overlay file on disk.
  for (const auto& s : j["samples"]) {
    const std::string id = s["id"];
    if (id.rfind("covid", 0) == 0) {
      CHECK(s.contains("iou"));
      CHECK(fs::exists(fs::path(std::string(s["overlay_path"]))));
    }
  }
}

TEST_CASE("bench reports one row per parameterized layer") {
  ModelGraph cls = toy_classifier();
  WeightArchive w = he_uniform_init(cls, 9);
  BenchReport r = bench(cls, w, 1, 0, 1);
  REQUIRE(r.layers.size() == 2);  // two dense layers
  CHECK(r.layers[0].name == "head.fc1");
  CHECK(r.layers[1].name == "head.fc2");
  for (const auto& l : r.layers) {
    CHECK(l.mean_ms == l.min_ms);
    CHECK(l.mean_ms == l.max_ms);
  }
  CHECK(r.p50_ms == r.p95_ms);
  CHECK(r.iterations == 1);
  CHECK(r.warmup == 0);

  BenchReport multi = bench(cls, w, 5, 1, 1);
  for (const auto& l : multi.layers) {
    CHECK(l.min_ms <= l.mean_ms);
    CHECK(l.mean_ms <= l.max_ms);
  }
  CHECK(multi.p50_ms <= multi.p95_ms);

  const std::string js = to_json_string(multi);
  CHECK(js.find("end_to_end") != std::string::npos);
  CHECK(js.find("head.fc1") != std::string::npos);

  CHECK_THROWS_AS(bench(cls, w, 0, 0, 1), DataError);
}

TEST_CASE("inference report serializes to the documented schema") {
  InferenceReport r;
  r.id = "x";
  r.label_pred = Label::Covid;
  r.prob_covid = 0.75;
  r.prob_healthy = 0.25;
  r.iou = 0.5;
  const auto j = nlohmann::json::parse(to_json_string(r));
  CHECK(j["id"] == "x");
  CHECK(j["label_pred"] == "covid");
  CHECK(j["probs"]["covid"] == doctest::Approx(0.75));
  CHECK(j["iou"] == doctest::Approx(0.5));

  InferenceReport no_iou;
  no_iou.id = "y";
  const auto j2 = nlohmann::json::parse(to_json_string(no_iou));
  CHECK_FALSE(j2.contains("iou"));
}
