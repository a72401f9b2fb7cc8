#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lus/dataset.hpp"
#include "lus/graph.hpp"
#include "lus/image.hpp"
#include "lus/metrics.hpp"
#include "lus/training.hpp"

namespace lus {

struct StageTimings {
  double preprocess = 0.0;
  double classify = 0.0;
  double segment = 0.0;
  double overlay = 0.0;
  double total = 0.0;
};

/// Per-frame result. Probabilities are (covid, healthy) and sum to 1 within
/// 1e-6; iou is present only when a ground-truth mask exists. The JSON form
/// is {id, label_pred, probs:{covid,healthy}, overlay_path, iou?,
/// timing_ms:{preprocess,classify,segment,overlay,total}}.
struct InferenceReport {
  std::string id;
  Label label_pred = Label::Healthy;
  double prob_covid = 0.0;
  double prob_healthy = 0.0;
  std::string overlay_path;
  std::optional<double> iou;
  StageTimings timing_ms;
};

std::string to_json_string(const InferenceReport& report);

struct PipelineModels {
  const ModelGraph* classifier = nullptr;
  const WeightArchive* classifier_weights = nullptr;
  const ModelGraph* segmenter = nullptr;
  const WeightArchive* segmenter_weights = nullptr;
};

struct InferOptions {
  float threshold = 0.5f;
  std::filesystem::path out_dir;  // overlay and report land here when set
};

/// Ingest one frame file, preprocess, classify, segment, render the overlay
/// and report stage timings. The predicted label is the argmax class; the
/// mask is thresholded inclusively; the overlay is written at the
/// processing resolution.
InferenceReport infer_single(const std::filesystem::path& image_path,
                             const PipelineModels& models, const InferOptions& opts);

/// Mask pixels blend toward red: round(0.6 * gray + 0.4 * (255,0,0)) per
/// channel; everything else is the grayscale value replicated to RGB.
RgbImage render_overlay(const GrayImage& gray, const GrayImage& mask);

struct EvaluateOptions {
  float threshold = 0.5f;
  std::filesystem::path out_dir;  // overlays + report JSON when set
  unsigned workers = 0;           // sample-level parallelism; 0 = hardware
  bool write_overlays = true;
  TrainConfig train;              // used when heads is empty (inline training)
  std::vector<HeadParams<float>> heads;  // per-fold trained heads, size k
};

struct EvaluateOutcome {
  EvalReport report;
  std::vector<InferenceReport> samples;  // manifest order
  std::filesystem::path report_path;     // empty when not written
};

/// Cross-validated evaluation: every sample is classified by the head of
/// its own held-out fold, segmented, scored (IoU where ground truth
/// exists) and reported. Samples run in parallel workers but results merge
/// in manifest order, so output is independent of the worker count.
EvaluateOutcome evaluate(const DatasetManifest& manifest, const FoldPlan& folds,
                         const PipelineModels& models, const EvaluateOptions& opts);

/// Test seam: per-sample predictors replace the real models. classify
/// returns (covid, healthy) probabilities; segment returns a (1,1,H,W)
/// probability map (may be empty to skip segmentation).
using ClassifyFn =
    std::function<std::vector<float>(const SampleRecord&, const GrayImage& preprocessed)>;
using SegmentFn = std::function<Tensor(const SampleRecord&, const GrayImage& preprocessed)>;

EvaluateOutcome evaluate_with_predictors(const DatasetManifest& manifest, const FoldPlan& folds,
                                         const ClassifyFn& classify, const SegmentFn& segment,
                                         const EvaluateOptions& opts, int processing_hw = 224);

}  // namespace lus
