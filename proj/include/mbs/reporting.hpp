#pragma once

// Parameter and flop accounting, reductions against a baseline graph and
// the k-sweep tradeoff table.
//
// Counting convention: per conv layer k*k*c_in*c_out weights (depthwise
// k*k*c, pointwise c_in*c_out), plus 2*c_out batch-norm parameters when the
// graph enables batch norm, no biases, plus the graph's classifier_params.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbs/activation_stats.hpp"
#include "mbs/model_ir.hpp"
#include "mbs/planner.hpp"

namespace mbs {

std::uint64_t conv_params(const Layer& layer);
std::uint64_t count_params(const ModelGraph& graph);
std::uint64_t total_flops(const ModelGraph& graph);

// Every scalable width times alpha (ceil), alpha in (0, 1].
ModelGraph alpha_scale(const ModelGraph& graph, double alpha);

struct ReductionReport {
  std::string variant;  // "mbs", "alpha=0.7", ...
  std::optional<double> z;
  std::optional<double> k_factor;
  std::optional<double> alpha;
  std::uint64_t params_before = 0;
  std::uint64_t params_after = 0;
  std::uint64_t flops_before = 0;
  std::uint64_t flops_after = 0;
  double reduction_ratio = 0.0;  // 1 - params_after / params_before
  std::vector<int> widths_before;
  std::vector<int> widths_after;
  bool batch_norm = true;
  int classifier_coupling = -1;
};

// Row for an arbitrary compacted graph; the two graphs must share macroblocks.
ReductionReport reduction_report(const ModelGraph& before, const ModelGraph& after, std::string variant);

// One row for the plan followed by one row per alpha baseline.
std::vector<ReductionReport> compare(const ModelGraph& graph, const ScalingPlan& plan,
                                     std::span<const double> alphas);

std::string reports_text(std::span<const ReductionReport> rows);
std::string reports_csv(std::span<const ReductionReport> rows);
std::string reports_json(std::span<const ReductionReport> rows);

struct TradeoffRow {
  double k_factor = 1.0;
  double z = 0.0;
  double reduction_ratio = 0.0;
  std::uint64_t params_after = 0;
  std::vector<int> widths;
};

inline const std::vector<double> kDefaultKSweep = {1.4, 1.2, 1.0, 0.8, 0.6};

// run_mbs for each k (z = k * L) and the resulting parameter reduction.
std::vector<TradeoffRow> tradeoff_table(const ModelGraph& graph, const StatsCollection& stats,
                                        std::span<const double> k_values);

std::string tradeoff_text(std::span<const TradeoffRow> rows);
std::string tradeoff_csv(std::span<const TradeoffRow> rows);
std::string tradeoff_json(std::span<const TradeoffRow> rows);

// Shortest round-trip decimal for a double.
std::string format_number(double value);

}  // namespace mbs
