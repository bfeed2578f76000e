#include "mbs/planner.hpp"

#include <cmath>

#include "json_util.hpp"
#include "mbs/error.hpp"

namespace mbs {

using detail::json;
using detail::ordered_json;

double PlannerConfig::resolve_z(int input_resolution) const {
  const double value = z ? *z : k_factor * input_resolution;
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCategory::kOutOfRange, "z must be positive, got " + std::to_string(value));
  }
  return value;
}

bool ScalingPlan::degenerate() const {
  for (const MacroblockScaling& m : macroblocks) {
    if (m.degenerate) return true;
  }
  return false;
}

std::vector<int> ScalingPlan::compact_widths() const {
  std::vector<int> widths;
  for (const MacroblockScaling& m : macroblocks) widths.push_back(m.compact_width);
  return widths;
}

double to_double(const Rational& value) {
  // get_d() truncates toward zero; pick whichever neighbour is nearer.
  const double truncated = value.get_d();
  const double away = std::nextafter(truncated, sgn(value) >= 0 ? HUGE_VAL : -HUGE_VAL);
  const Rational err_truncated = abs(value - Rational(truncated));
  const Rational err_away = abs(Rational(away) - value);
  return err_away < err_truncated ? away : truncated;
}

int ceil_scaled(const Rational& value, int width) {
  const Rational product = value * width;
  mpz_class q;
  mpz_cdiv_q(q.get_mpz_t(), product.get_num_mpz_t(), product.get_den_mpz_t());
  return static_cast<int>(q.get_si());
}

EffectiveFlops effective_flops(const ModelGraph& graph, const StatsCollection& stats) {
  check_stats(stats, graph);
  EffectiveFlops eff;
  eff.per_layer.assign(graph.layers.size(), Rational(0));
  for (const Layer& l : graph.layers) {
    if (!l.is_conv()) continue;
    const LayerStats* s = stats.find(l.id);
    const mpz_class flops(static_cast<unsigned long>(flop_count(l)));
    eff.per_layer[static_cast<std::size_t>(l.id)] = Rational(s->p) * flops;
  }
  return eff;
}

EffectiveFlops accumulate(const ModelGraph& graph, const RFProfile& profile, std::span<const Rational> per_layer) {
  if (per_layer.size() != graph.layers.size()) {
    throw Error(ErrorCategory::kOutOfRange, "effective flops do not cover every layer");
  }
  std::vector<bool> base(graph.layers.size(), false);
  for (const RfLayerClass& c : profile.layers) base[static_cast<std::size_t>(c.layer_id)] = c.is_base;

  EffectiveFlops eff;
  eff.per_layer.assign(per_layer.begin(), per_layer.end());
  const std::size_t m = graph.macroblocks.size();
  eff.total.assign(m, Rational(0));
  eff.base.assign(m, Rational(0));
  for (std::size_t i = 0; i < m; ++i) {
    for (const Layer& l : graph.layers) {
      if (!l.is_conv() || l.macroblock_id > static_cast<int>(i)) continue;
      const Rational& e = per_layer[static_cast<std::size_t>(l.id)];
      eff.total[i] += e;
      if (base[static_cast<std::size_t>(l.id)]) eff.base[i] += e;
    }
  }
  return eff;
}

ScalingPlan make_plan(const ModelGraph& graph, const RFProfile& profile, const EffectiveFlops& eff) {
  const std::size_t m = graph.macroblocks.size();
  if (eff.total.size() != m || eff.base.size() != m) {
    throw Error(ErrorCategory::kPlanMismatch, "effective flops were not accumulated for this model");
  }
  ScalingPlan plan;
  plan.model_name = graph.name;
  plan.z = profile.z;
  plan.k_factor = profile.k_factor;
  plan.boundary = profile.boundary;
  for (std::size_t i = 0; i < m; ++i) {
    MacroblockScaling s;
    s.macroblock_id = static_cast<int>(i);
    s.original_width = graph.macroblocks[i].base_width;
    Rational r(0);
    if (eff.total[i] > eff.base[i]) {
      r = 1 - eff.base[i] / eff.total[i];
      s.beta_exact = 1 / (1 + r);
    } else {
      s.beta_exact = 1;
    }
    s.beta_exact.canonicalize();
    s.r = to_double(r);
    s.beta = to_double(s.beta_exact);
    s.degenerate = sgn(eff.total[i]) == 0 || sgn(eff.base[i]) == 0;
    s.compact_width = ceil_scaled(s.beta_exact, s.original_width);
    plan.macroblocks.push_back(std::move(s));
  }
  return plan;
}

ScalingPlan run_mbs(const ModelGraph& graph, const StatsCollection& stats, const PlannerConfig& config) {
  const double z = config.resolve_z(graph.input_resolution);
  const RFProfile profile = classify_layers(graph, compute_rf(graph), z);
  const EffectiveFlops per_layer = effective_flops(graph, stats);
  const EffectiveFlops eff = accumulate(graph, profile, per_layer.per_layer);
  ScalingPlan plan = make_plan(graph, profile, eff);
  plan.stats_fingerprint = stats.model_fingerprint;
  return plan;
}

std::string serialize_plan(const ScalingPlan& plan) {
  ordered_json j;
  j["version"] = std::string(kPlanVersion);
  j["model_name"] = plan.model_name;
  j["stats_fingerprint"] = plan.stats_fingerprint;
  ordered_json config;
  config["z"] = plan.z;
  config["k_factor"] = plan.k_factor;
  j["config"] = std::move(config);
  if (plan.boundary) {
    j["boundary"] = *plan.boundary;
  } else {
    j["boundary"] = nullptr;
  }
  ordered_json mbs = ordered_json::array();
  for (const MacroblockScaling& s : plan.macroblocks) {
    ordered_json m;
    m["id"] = s.macroblock_id;
    m["r"] = s.r;
    m["beta"] = s.beta;
    m["beta_exact"] = s.beta_exact.get_str();
    m["original_width"] = s.original_width;
    m["compact_width"] = s.compact_width;
    m["degenerate"] = s.degenerate;
    mbs.push_back(std::move(m));
  }
  j["macroblocks"] = std::move(mbs);
  return j.dump(2) + "\n";
}

ScalingPlan parse_plan(std::string_view document) {
  const json j = detail::parse_json(document, "plan");
  const std::string where = "plan";
  detail::require_object(j, where);
  detail::reject_unknown_keys(j, {"version", "model_name", "stats_fingerprint", "config", "boundary", "macroblocks"},
                              where);
  detail::check_version(j, "mbs-plan", where);
  ScalingPlan plan;
  plan.model_name = detail::get_string(j, "model_name", where);
  plan.stats_fingerprint = detail::get_string(j, "stats_fingerprint", where);
  const json& config = detail::field(j, "config", where);
  detail::require_object(config, "plan.config");
  detail::reject_unknown_keys(config, {"z", "k_factor"}, "plan.config");
  plan.z = detail::get_number(config, "z", "plan.config");
  plan.k_factor = detail::get_number(config, "k_factor", "plan.config");
  if (j.contains("boundary") && !j.at("boundary").is_null()) plan.boundary = detail::get_int(j, "boundary", where);

  const json& mbs = detail::get_array(j, "macroblocks", where);
  for (std::size_t i = 0; i < mbs.size(); ++i) {
    const std::string mw = "plan.macroblocks[" + std::to_string(i) + "]";
    const json& m = mbs[i];
    detail::require_object(m, mw);
    detail::reject_unknown_keys(
        m, {"id", "r", "beta", "beta_exact", "original_width", "compact_width", "degenerate"}, mw);
    MacroblockScaling s;
    s.macroblock_id = detail::get_small_int(m, "id", mw);
    s.r = detail::get_number(m, "r", mw);
    s.beta = detail::get_number(m, "beta", mw);
    if (!(s.beta > 0.0 && s.beta <= 1.0)) {
      throw Error(ErrorCategory::kOutOfRange, mw + ": beta must lie in (0, 1]");
    }
    if (m.contains("beta_exact")) {
      const std::string text = detail::get_string(m, "beta_exact", mw);
      if (s.beta_exact.set_str(text, 10) != 0 || sgn(s.beta_exact.get_den()) == 0) {
        detail::schema_error(mw + ": field 'beta_exact' must be a fraction like 453/512");
      }
      s.beta_exact.canonicalize();
    } else {
      s.beta_exact = Rational(s.beta);
    }
    s.original_width = detail::get_small_int(m, "original_width", mw);
    s.compact_width = detail::get_small_int(m, "compact_width", mw);
    if (m.contains("degenerate")) s.degenerate = detail::get_bool(m, "degenerate", mw);
    plan.macroblocks.push_back(std::move(s));
  }
  return plan;
}

}  // namespace mbs
