#include "lus/metrics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "lus/error.hpp"

namespace lus {

using nlohmann::json;

ClassificationMetrics classification_metrics(const std::vector<Label>& preds,
                                             const std::vector<Label>& truths) {
  if (preds.size() != truths.size()) {
    throw DataError("classification_metrics: " + std::to_string(preds.size()) +
                    " predictions vs " + std::to_string(truths.size()) + " truths");
  }
  if (preds.empty()) throw DataError("classification_metrics: empty input");

  ClassificationMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool pred_pos = preds[i] == Label::Covid;
    const bool true_pos = truths[i] == Label::Covid;
    if (pred_pos && true_pos) ++m.confusion.tp;
    if (pred_pos && !true_pos) ++m.confusion.fp;
    if (!pred_pos && true_pos) ++m.confusion.fn;
    if (!pred_pos && !true_pos) ++m.confusion.tn;
  }
  const auto& c = m.confusion;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fn > 0) m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0) m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return m;
}

double iou(const GrayImage& pred_mask, const GrayImage& true_mask) {
  if (pred_mask.width != true_mask.width || pred_mask.height != true_mask.height) {
    throw DataError("iou: mask dimension mismatch");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred_mask.pixels.size(); ++i) {
    const bool a = pred_mask.pixels[i] != 0;
    const bool b = true_mask.pixels[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

GrayImage threshold_mask(const Tensor& probabilities, float threshold) {
  if (probabilities.n != 1 || probabilities.c != 1) {
    throw DataError("threshold_mask: expected a (1,1,H,W) probability map");
  }
  GrayImage mask(probabilities.w, probabilities.h);
  for (std::size_t i = 0; i < probabilities.data.size(); ++i) {
    mask.pixels[i] = probabilities.data[i] >= threshold ? 255 : 0;
  }
  return mask;
}

namespace {

struct MetricAccess {
  const char* name;
  std::optional<double> (*get)(const FoldMetrics&);
};

constexpr MetricAccess kMetrics[] = {
    {"accuracy", [](const FoldMetrics& f) { return f.classification.accuracy; }},
    {"sensitivity", [](const FoldMetrics& f) { return f.classification.sensitivity; }},
    {"specificity", [](const FoldMetrics& f) { return f.classification.specificity; }},
    {"mean_iou", [](const FoldMetrics& f) { return f.mean_iou; }},
    {"train_accuracy", [](const FoldMetrics& f) { return f.train_accuracy; }},
};

}  // namespace

EvalReport aggregate(std::vector<FoldMetrics> folds) {
  if (folds.empty()) throw DataError("aggregate: no folds");
  EvalReport report;
  report.folds = std::move(folds);

  for (const auto& metric : kMetrics) {
    std::vector<double> values;
    for (const auto& fold : report.folds) {
      if (auto v = metric.get(fold)) {
        values.push_back(*v);
      } else {
        report.notes.push_back(std::string(metric.name) + " absent in fold " +
                               std::to_string(fold.fold) + "; excluded from aggregate");
      }
    }
    if (values.empty()) continue;

    AggregateStat stat;
    stat.folds_counted = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    stat.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
      double sq = 0.0;
      for (double v : values) sq += (v - stat.mean) * (v - stat.mean);
      stat.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    report.aggregate[metric.name] = stat;
  }
  return report;
}

std::string to_json_string(const EvalReport& report) {
  json j;
  j["folds"] = json::array();
  for (const auto& fold : report.folds) {
    json f;
    f["fold"] = fold.fold;
    f["test_samples"] = fold.test_samples;
    f["confusion"] = {{"tp", fold.classification.confusion.tp},
                      {"fp", fold.classification.confusion.fp},
                      {"tn", fold.classification.confusion.tn},
                      {"fn", fold.classification.confusion.fn}};
    auto put = [&f](const char* key, const std::optional<double>& v) {
      if (v) {
        f[key] = *v;
      } else {
        f[key] = nullptr;
      }
    };
    put("accuracy", fold.classification.accuracy);
    put("sensitivity", fold.classification.sensitivity);
    put("specificity", fold.classification.specificity);
    put("mean_iou", fold.mean_iou);
    put("train_accuracy", fold.train_accuracy);
    j["folds"].push_back(std::move(f));
  }
  j["aggregate"] = json::object();
  for (const auto& [name, stat] : report.aggregate) {
    json s;
    s["mean"] = stat.mean;
    if (stat.stddev) {
      s["std"] = *stat.stddev;
    } else {
      s["std"] = nullptr;
    }
    s["folds_counted"] = stat.folds_counted;
    j["aggregate"][name] = std::move(s);
  }
  j["notes"] = report.notes;
  return j.dump(2);
}

}  // namespace lus
