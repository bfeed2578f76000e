#pragma once

// Per-layer non-zero ReLU probabilities and conv flop counts.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbs/inference.hpp"
#include "mbs/model_ir.hpp"

namespace mbs {

inline constexpr std::string_view kStatsVersion = "mbs-stats/1";

struct LayerStats {
  LayerId layer_id = 0;
  double p = 1.0;  // fraction of non-zero ReLU outputs, averaged over images
  std::uint64_t sample_count = 1;
  std::uint64_t element_count = 0;  // out_spatial^2 * out_channels per image

  bool operator==(const LayerStats&) const = default;
};

enum class StatsSource { kRecorded, kSimulated };

struct StatsCollection {
  std::string model_name;
  std::string model_fingerprint;
  StatsSource source = StatsSource::kRecorded;
  std::optional<std::uint64_t> seed;  // set when simulated
  std::string provenance;             // free-form note for recorded stats
  std::vector<LayerStats> layers;     // conv layers in pipeline order

  const LayerStats* find(LayerId id) const;
  bool operator==(const StatsCollection&) const = default;
};

struct SimulationOptions {
  // Upper bound on activation elements per image.
  std::uint64_t activation_budget = 8'000'000;
  // 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

// Multiply-adds of one conv layer; 0 for pools.
std::uint64_t flop_count(const Layer& layer);

// Parses an "mbs-stats/1" document.
StatsCollection load_stats(std::string_view document);

// Parses and checks the collection against `graph`: fingerprint, coverage of
// every conv layer exactly once, p within [0, 1].
StatsCollection load_stats(std::string_view document, const ModelGraph& graph);

void check_stats(const StatsCollection& stats, const ModelGraph& graph);

std::string serialize_stats(const StatsCollection& stats);

// p_j per image is NZ / elements; p_j is the mean over images, reduced in a
// fixed pairwise order. Layers without a ReLU report p = 1.
StatsCollection collect_stats(const ModelGraph& graph, const NetworkWeights& weights,
                              std::span<const Tensor> images, const SimulationOptions& options = {});

// collect_stats on seeded random weights and synthetic images.
StatsCollection simulate_stats(const ModelGraph& graph, std::size_t n_images, std::uint64_t seed,
                               const SimulationOptions& options = {});

// Sum of `values` by recursive halving; the order depends only on the size.
double pairwise_sum(std::span<const double> values);

}  // namespace mbs
