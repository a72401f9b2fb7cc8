#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lus/graph.hpp"

namespace lus {

struct LayerBenchStat {
  std::string name;
  std::string kind;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

/// Per-layer latency over N iterations after W warmup runs, plus
/// end-to-end percentiles. Rows cover the parameterized layers (conv,
/// upconv, dense) -- 15 for the VGG-16 classifier; activation and pooling
/// time shows up only in the end-to-end numbers.
struct BenchReport {
  std::string model;
  int iterations = 0;
  int warmup = 0;
  std::vector<LayerBenchStat> layers;
  double end_to_end_mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

/// Single-threaded timing loop on a fixed seeded random input, so the data
/// is reproducible while the timings vary with the machine. Uses the
/// monotonic clock.
BenchReport bench(const ModelGraph& graph, const WeightArchive& weights, int iterations,
                  int warmup, std::uint64_t seed = 0);

std::string to_json_string(const BenchReport& report);

}  // namespace lus
