#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lus/dataset.hpp"
#include "lus/image.hpp"
#include "lus/tensor.hpp"

namespace lus {

/// Counts with covid as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Rates with zero denominators are reported absent, never as 0.
struct ClassificationMetrics {
  ConfusionMatrix confusion;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;  // tp / (tp + fn)
  std::optional<double> specificity;  // tn / (tn + fp)
};

ClassificationMetrics classification_metrics(const std::vector<Label>& preds,
                                             const std::vector<Label>& truths);

/// Intersection over union of two binary masks (non-zero = set); equal dims
/// required. Both-empty is 1.0 so correct all-negative frames score full.
double iou(const GrayImage& pred_mask, const GrayImage& true_mask);

/// Pixel set (255) iff probability >= threshold (inclusive boundary).
GrayImage threshold_mask(const Tensor& probabilities, float threshold = 0.5f);

struct FoldMetrics {
  int fold = 0;
  std::size_t test_samples = 0;
  ClassificationMetrics classification;
  std::optional<double> mean_iou;
  std::optional<double> train_accuracy;
};

struct AggregateStat {
  double mean = 0.0;
  std::optional<double> stddev;  // sample stddev; absent for a single value
  std::size_t folds_counted = 0;
};

/// Per-fold metrics plus unweighted mean +- sample standard deviation of
/// each metric across folds. Metrics absent in a fold are excluded from
/// that aggregate with a note.
struct EvalReport {
  std::vector<FoldMetrics> folds;
  std::map<std::string, AggregateStat> aggregate;
  std::vector<std::string> notes;
};

EvalReport aggregate(std::vector<FoldMetrics> folds);

std::string to_json_string(const EvalReport& report);

}  // namespace lus
