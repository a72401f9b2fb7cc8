#include "lus/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lus/error.hpp"
#include "lus/parallel.hpp"

namespace lus {

using nlohmann::json;
using steady = std::chrono::steady_clock;

namespace {

double ms_since(steady::time_point t0) {
  return std::chrono::duration<double, std::milli>(steady::now() - t0).count();
}

json report_to_json(const InferenceReport& r) {
  json j;
  j["id"] = r.id;
  j["label_pred"] = label_name(r.label_pred);
  j["probs"] = {{"covid", r.prob_covid}, {"healthy", r.prob_healthy}};
  j["overlay_path"] = r.overlay_path;
  if (r.iou) {
    j["iou"] = *r.iou;
  }
  j["timing_ms"] = {{"preprocess", r.timing_ms.preprocess},
                    {"classify", r.timing_ms.classify},
                    {"segment", r.timing_ms.segment},
                    {"overlay", r.timing_ms.overlay},
                    {"total", r.timing_ms.total}};
  return j;
}

GrayImage preprocess_to(const GrayImage& img, int hw) {
  if (img.width == hw && img.height == hw) return img;
  return resize_bilinear(img, hw, hw);
}

}  // namespace

std::string to_json_string(const InferenceReport& report) {
  return report_to_json(report).dump(2);
}

RgbImage render_overlay(const GrayImage& gray, const GrayImage& mask) {
  if (gray.width != mask.width || gray.height != mask.height) {
    throw DataError("render_overlay: image and mask dims differ");
  }
  RgbImage out(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    const double g = gray.pixels[i];
    if (mask.pixels[i] != 0) {
      out.pixels[3 * i] = static_cast<std::uint8_t>(std::lround(0.6 * g + 0.4 * 255.0));
      out.pixels[3 * i + 1] = static_cast<std::uint8_t>(std::lround(0.6 * g));
      out.pixels[3 * i + 2] = static_cast<std::uint8_t>(std::lround(0.6 * g));
    } else {
      out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = gray.pixels[i];
    }
  }
  return out;
}

InferenceReport infer_single(const std::filesystem::path& image_path,
                             const PipelineModels& models, const InferOptions& opts) {
  if (!models.classifier || !models.classifier_weights || !models.segmenter ||
      !models.segmenter_weights) {
    throw ModelError("infer_single: classifier and segmenter models are required");
  }
  const BoundModel classifier(*models.classifier, *models.classifier_weights);
  const BoundModel segmenter(*models.segmenter, *models.segmenter_weights);

  InferenceReport report;
  report.id = image_path.stem().string();
  const auto t_total = steady::now();

  auto t = steady::now();
  const GrayImage raw = read_pgm(image_path);
  const GrayImage cls_img = preprocess_to(raw, models.classifier->input.h);
  const GrayImage seg_img = preprocess_to(raw, models.segmenter->input.h);
  report.timing_ms.preprocess = ms_since(t);

  t = steady::now();
  Tensor cls_in = normalize(cls_img);
  if (models.classifier->input.c > 1) cls_in = replicate_channels(cls_in, models.classifier->input.c);
  const Tensor probs = classifier.run(cls_in);
  if (probs.size() != 2) throw ModelError("infer_single: classifier must output two classes");
  report.prob_covid = probs.data[0];
  report.prob_healthy = probs.data[1];
  report.label_pred = probs.data[0] >= probs.data[1] ? Label::Covid : Label::Healthy;
  report.timing_ms.classify = ms_since(t);

  t = steady::now();
  const Tensor mask_probs = segmenter.run(normalize(seg_img));
  const GrayImage mask = threshold_mask(mask_probs, opts.threshold);
  report.timing_ms.segment = ms_since(t);

  t = steady::now();
  const RgbImage overlay = render_overlay(seg_img, mask);
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const auto overlay_path = opts.out_dir / (report.id + "_overlay.ppm");
    write_ppm(overlay, overlay_path);
    report.overlay_path = overlay_path.string();
  }
  report.timing_ms.overlay = ms_since(t);
  report.timing_ms.total = ms_since(t_total);
  return report;
}

namespace {

EvaluateOutcome run_evaluation(const DatasetManifest& manifest, const FoldPlan& folds,
                               const ClassifyFn& classify, const SegmentFn& segment,
                               const EvaluateOptions& opts, int processing_hw,
                               std::vector<FoldMetrics> fold_seed_metrics) {
  if (manifest.records.empty()) throw DataError("evaluate: empty manifest");
  for (const auto& r : manifest.records) folds.fold_of(r.video_id);  // all assigned

  const std::size_t n = manifest.records.size();
  std::vector<InferenceReport> samples(n);

  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);

  parallel_for(
      n,
      [&](std::size_t i) {
        const SampleRecord& rec = manifest.records[i];
        InferenceReport& report = samples[i];
        report.id = rec.id;
        const auto t_total = steady::now();

        auto t = steady::now();
        const GrayImage pre = preprocess_to(read_pgm(rec.image_path), processing_hw);
        report.timing_ms.preprocess = ms_since(t);

        t = steady::now();
        const std::vector<float> probs = classify(rec, pre);
        if (probs.size() != 2) throw ModelError("evaluate: classifier must output two classes");
        report.prob_covid = probs[0];
        report.prob_healthy = probs[1];
        report.label_pred = probs[0] >= probs[1] ? Label::Covid : Label::Healthy;
        report.timing_ms.classify = ms_since(t);

        t = steady::now();
        GrayImage mask;
        bool have_mask = false;
        if (segment) {
          const Tensor mask_probs = segment(rec, pre);
          if (mask_probs.size() > 0) {
            mask = threshold_mask(mask_probs, opts.threshold);
            have_mask = true;
          }
        }
        report.timing_ms.segment = ms_since(t);

        if (have_mask && rec.mask_path) {
          const GrayImage truth =
              resize_nearest(read_pgm(*rec.mask_path), mask.width, mask.height);
          report.iou = iou(mask, truth);
        }

        t = steady::now();
        if (have_mask && opts.write_overlays && !opts.out_dir.empty()) {
          const GrayImage base =
              (mask.width == pre.width && mask.height == pre.height)
                  ? pre
                  : resize_bilinear(pre, mask.width, mask.height);
          const auto overlay_path = opts.out_dir / (rec.id + "_overlay.ppm");
          write_ppm(render_overlay(base, mask), overlay_path);
          report.overlay_path = overlay_path.string();
        }
        report.timing_ms.overlay = ms_since(t);
        report.timing_ms.total = ms_since(t_total);
      },
      opts.workers);

  // Per-fold metrics from the per-sample results.
  std::vector<FoldMetrics> metrics(folds.k);
  for (int f = 0; f < folds.k; ++f) {
    if (f < static_cast<int>(fold_seed_metrics.size())) metrics[f] = fold_seed_metrics[f];
    metrics[f].fold = f;
  }
  std::vector<std::vector<Label>> preds(folds.k), truths(folds.k);
  std::vector<std::vector<double>> ious(folds.k);
  for (std::size_t i = 0; i < n; ++i) {
    const int f = folds.fold_of(manifest.records[i].video_id);
    preds[f].push_back(samples[i].label_pred);
    truths[f].push_back(manifest.records[i].label);
    if (samples[i].iou) ious[f].push_back(*samples[i].iou);
  }
  for (int f = 0; f < folds.k; ++f) {
    metrics[f].test_samples = preds[f].size();
    if (!preds[f].empty()) {
      metrics[f].classification = classification_metrics(preds[f], truths[f]);
    }
    if (!ious[f].empty()) {
      double sum = 0.0;
      for (double v : ious[f]) sum += v;
      metrics[f].mean_iou = sum / static_cast<double>(ious[f].size());
    }
  }

  EvaluateOutcome outcome;
  outcome.report = aggregate(std::move(metrics));
  outcome.samples = std::move(samples);

  if (!opts.out_dir.empty()) {
    json j = json::parse(to_json_string(outcome.report));
    j["samples"] = json::array();
    for (const auto& s : outcome.samples) j["samples"].push_back(report_to_json(s));
    outcome.report_path = opts.out_dir / "evaluation.json";
    std::ofstream out(outcome.report_path, std::ios::trunc);
    if (!out) throw DataError("cannot write report: " + outcome.report_path.string());
    out << j.dump(2) << "\n";
  }
  return outcome;
}

}  // namespace

EvaluateOutcome evaluate_with_predictors(const DatasetManifest& manifest, const FoldPlan& folds,
                                         const ClassifyFn& classify, const SegmentFn& segment,
                                         const EvaluateOptions& opts, int processing_hw) {
  return run_evaluation(manifest, folds, classify, segment, opts, processing_hw, {});
}

EvaluateOutcome evaluate(const DatasetManifest& manifest, const FoldPlan& folds,
                         const PipelineModels& models, const EvaluateOptions& opts) {
  if (!models.classifier || !models.classifier_weights) {
    throw ModelError("evaluate: classifier model and weights are required");
  }

  std::vector<HeadParams<float>> heads = opts.heads;
  std::vector<FoldMetrics> seed_metrics;
  std::vector<std::vector<float>> cached_features;  // manifest order, inline-training path
  if (heads.empty()) {
    TrainOutcome trained =
        train_head(manifest, folds, *models.classifier, *models.classifier_weights, opts.train);
    for (auto& h : trained.heads) heads.push_back(std::move(h.params));
    seed_metrics = trained.report.folds;  // carries train_accuracy per fold
    cached_features = std::move(trained.original_features);
  }
  if (static_cast<int>(heads.size()) != folds.k) {
    throw ModelError("evaluate: need one trained head per fold (" + std::to_string(folds.k) +
                     "), have " + std::to_string(heads.size()));
  }

  // One bound classifier per fold (its own head), one shared segmenter.
  // After inline training the frozen-backbone features are already known,
  // so classification is a head pass over the cached rows.
  std::vector<WeightArchive> fold_archives;
  std::vector<BoundModel> classifiers;
  if (cached_features.empty()) {
    fold_archives.reserve(heads.size());
    classifiers.reserve(heads.size());
    for (const auto& head : heads) {
      fold_archives.push_back(with_head(*models.classifier_weights, head));
    }
    for (const auto& archive : fold_archives) {
      classifiers.emplace_back(*models.classifier, archive);
    }
  }
  std::optional<BoundModel> segmenter;
  if (models.segmenter && models.segmenter_weights) {
    segmenter.emplace(*models.segmenter, *models.segmenter_weights);
  }

  const int cls_hw = models.classifier->input.h;
  const int cls_ch = models.classifier->input.c;

  std::map<std::string, std::size_t> sample_index;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    sample_index[manifest.records[i].id] = i;
  }

  ClassifyFn classify = [&](const SampleRecord& rec, const GrayImage& pre) {
    const int fold = folds.fold_of(rec.video_id);
    if (!cached_features.empty()) {
      return head_forward<float>(heads[fold], cached_features[sample_index.at(rec.id)]);
    }
    Tensor x = normalize(pre);
    if (cls_ch > 1) x = replicate_channels(x, cls_ch);
    const Tensor probs = classifiers[fold].run(x);
    return std::vector<float>(probs.data.begin(), probs.data.end());
  };
  SegmentFn segment;
  if (segmenter) {
    const int seg_hw = models.segmenter->input.h;
    segment = [&segmenter, seg_hw](const SampleRecord&, const GrayImage& pre) {
      const GrayImage seg_img =
          (pre.width == seg_hw && pre.height == seg_hw) ? pre : resize_bilinear(pre, seg_hw, seg_hw);
      return segmenter->run(normalize(seg_img));
    };
  }

  return run_evaluation(manifest, folds, classify, segment, opts, cls_hw, std::move(seed_metrics));
}

}  // namespace lus
