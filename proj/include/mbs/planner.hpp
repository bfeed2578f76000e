#pragma once

// Macroblock scaling: effective flops, cumulative totals, redundancy ratios
// and per-macroblock width multipliers.
//
// Effective flops are p * flop with p a double and flop an integer, so they
// are exact rationals. All planner arithmetic stays in GMP rationals and is
// rounded to double only for reporting; ratios are therefore exactly
// invariant under scaling of the inputs, and ceil() sees the exact product.

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbs/activation_stats.hpp"
#include "mbs/model_ir.hpp"
#include "mbs/rf_analysis.hpp"

namespace mbs {

using Rational = mpq_class;

inline constexpr std::string_view kPlanVersion = "mbs-plan/1";

struct PlannerConfig {
  // z = k_factor * L unless an absolute z (pixels) is given.
  double k_factor = 1.0;
  std::optional<double> z;

  double resolve_z(int input_resolution) const;
};

struct EffectiveFlops {
  std::vector<Rational> per_layer;  // indexed by layer id; 0 for pools
  std::vector<Rational> total;      // E_total(m_i), prefix over m_0..m_i
  std::vector<Rational> base;       // E_base(m_i), base layers of the same prefix
};

struct MacroblockScaling {
  int macroblock_id = 0;
  double r = 0.0;
  double beta = 1.0;
  Rational beta_exact = 1;
  int original_width = 1;
  int compact_width = 1;
  // All-zero effective flops in the prefix (beta forced to 1) or all-zero
  // base flops (r reaches 1).
  bool degenerate = false;
};

struct ScalingPlan {
  std::string model_name;
  std::string stats_fingerprint;
  double z = 0.0;
  double k_factor = 0.0;
  std::optional<std::int64_t> boundary;
  std::vector<MacroblockScaling> macroblocks;

  bool degenerate() const;
  std::vector<int> compact_widths() const;
};

// Nearest double to an exact rational.
double to_double(const Rational& value);

// ceil(value * width), exact.
int ceil_scaled(const Rational& value, int width);

// e = p * flop_count for each conv layer.
EffectiveFlops effective_flops(const ModelGraph& graph, const StatsCollection& stats);

// Fills E_total and E_base for every macroblock.
EffectiveFlops accumulate(const ModelGraph& graph, const RFProfile& profile, std::span<const Rational> per_layer);

// r = 1 - E_base / E_total and beta = 1 / (1 + r) when E_total > E_base,
// otherwise beta = 1; compact width = ceil(beta * base_width).
ScalingPlan make_plan(const ModelGraph& graph, const RFProfile& profile, const EffectiveFlops& eff);

// classify_layers -> effective_flops -> accumulate -> make_plan.
ScalingPlan run_mbs(const ModelGraph& graph, const StatsCollection& stats, const PlannerConfig& config);

std::string serialize_plan(const ScalingPlan& plan);
ScalingPlan parse_plan(std::string_view document);

}  // namespace mbs
