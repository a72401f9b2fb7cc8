#include "lus/bench.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "lus/error.hpp"

namespace lus {

namespace {

double percentile(std::vector<double> sorted, double q) {
  const auto idx = std::min(sorted.size() - 1,
                            static_cast<std::size_t>(q * static_cast<double>(sorted.size())));
  return sorted[idx];
}

}  // namespace

BenchReport bench(const ModelGraph& graph, const WeightArchive& weights, int iterations,
                  int warmup, std::uint64_t seed) {
  if (iterations < 1) throw DataError("bench: iterations must be >= 1");
  if (warmup < 0) throw DataError("bench: warmup must be >= 0");

  const BoundModel bound(graph, weights);
  const Tensor input = random_tensor(1, graph.input.c, graph.input.h, graph.input.w, seed, 0.0f, 1.0f);

  BenchReport report;
  report.model = graph.name;
  report.iterations = iterations;
  report.warmup = warmup;

  std::vector<LayerTiming> timings;
  for (int i = 0; i < warmup; ++i) {
    timings.clear();
    bound.run_timed(input, timings);
  }

  std::vector<std::vector<double>> layer_samples;  // parameterized layers only
  std::vector<double> totals;
  std::vector<const LayerTiming*> layer_ids;
  for (int iter = 0; iter < iterations; ++iter) {
    timings.clear();
    const auto t0 = std::chrono::steady_clock::now();
    bound.run_timed(input, timings);
    totals.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());

    std::size_t row = 0;
    for (const auto& t : timings) {
      if (!t.parameterized) continue;
      if (iter == 0) {
        layer_samples.emplace_back();
        report.layers.push_back({t.name, t.kind, 0.0, 0.0, 0.0});
      }
      layer_samples[row++].push_back(t.ms);
    }
  }

  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& samples = layer_samples[i];
    double sum = 0.0, mn = samples[0], mx = samples[0];
    for (double v : samples) {
      sum += v;
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    report.layers[i].mean_ms = sum / static_cast<double>(samples.size());
    report.layers[i].min_ms = mn;
    report.layers[i].max_ms = mx;
  }

  double total_sum = 0.0;
  for (double v : totals) total_sum += v;
  report.end_to_end_mean_ms = total_sum / static_cast<double>(totals.size());
  std::sort(totals.begin(), totals.end());
  report.p50_ms = percentile(totals, 0.50);
  report.p95_ms = percentile(totals, 0.95);
  return report;
}

std::string to_json_string(const BenchReport& report) {
  nlohmann::json j;
  j["model"] = report.model;
  j["iterations"] = report.iterations;
  j["warmup"] = report.warmup;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : report.layers) {
    j["layers"].push_back({{"name", l.name},
                           {"kind", l.kind},
                           {"mean_ms", l.mean_ms},
                           {"min_ms", l.min_ms},
                           {"max_ms", l.max_ms}});
  }
  j["end_to_end"] = {{"mean_ms", report.end_to_end_mean_ms},
                     {"p50_ms", report.p50_ms},
                     {"p95_ms", report.p95_ms}};
  return j.dump(2);
}

}  // namespace lus
