#include "mbs/reporting.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json_util.hpp"
#include "mbs/error.hpp"

namespace mbs {

using detail::ordered_json;

namespace {

std::vector<int> base_widths(const ModelGraph& graph) {
  std::vector<int> widths;
  for (const Macroblock& m : graph.macroblocks) widths.push_back(m.base_width);
  return widths;
}

std::string join_widths(const std::vector<int>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string optional_number(const std::optional<double>& value) { return value ? format_number(*value) : ""; }

std::string percent(double ratio) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << ratio * 100.0 << "%";
  return out.str();
}

// Left-aligned columns separated by two spaces.
std::string aligned(const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> width;
  for (const auto& row : table) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

ordered_json optional_json(const std::optional<double>& value) {
  return value ? ordered_json(*value) : ordered_json(nullptr);
}

}  // namespace

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), result.ptr);
}

std::uint64_t conv_params(const Layer& layer) {
  if (!layer.is_conv()) return 0;
  const auto k2 = static_cast<std::uint64_t>(layer.kernel_size) * layer.kernel_size;
  const auto out = static_cast<std::uint64_t>(layer.out_channels);
  switch (layer.conv_kind) {
    case ConvKind::kDepthwise:
      return k2 * out;
    case ConvKind::kPointwise:
      return static_cast<std::uint64_t>(layer.in_channels) * out;
    case ConvKind::kStandard:
      break;
  }
  return k2 * static_cast<std::uint64_t>(layer.in_channels) * out;
}

std::uint64_t count_params(const ModelGraph& graph) {
  std::uint64_t total = graph.classifier_params;
  for (const Layer& l : graph.layers) {
    if (!l.is_conv()) continue;
    total += conv_params(l);
    if (graph.batch_norm) total += 2 * static_cast<std::uint64_t>(l.out_channels);
  }
  return total;
}

std::uint64_t total_flops(const ModelGraph& graph) {
  std::uint64_t total = 0;
  for (const Layer& l : graph.layers) total += flop_count(l);
  return total;
}

ModelGraph alpha_scale(const ModelGraph& graph, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCategory::kOutOfRange, "alpha must lie in (0, 1], got " + format_number(alpha));
  }
  const std::vector<double> factors(graph.macroblocks.size(), alpha);
  return scale_widths(graph, factors);
}

ReductionReport reduction_report(const ModelGraph& before, const ModelGraph& after, std::string variant) {
  if (before.macroblocks.size() != after.macroblocks.size()) {
    throw Error(ErrorCategory::kPlanMismatch, "compared graphs have different macroblock counts");
  }
  ReductionReport r;
  r.variant = std::move(variant);
  r.params_before = count_params(before);
  r.params_after = count_params(after);
  r.flops_before = total_flops(before);
  r.flops_after = total_flops(after);
  r.reduction_ratio = 1.0 - static_cast<double>(r.params_after) / static_cast<double>(r.params_before);
  r.widths_before = base_widths(before);
  r.widths_after = base_widths(after);
  r.batch_norm = before.batch_norm;
  r.classifier_coupling = before.classifier_width_coupling;
  return r;
}

std::vector<ReductionReport> compare(const ModelGraph& graph, const ScalingPlan& plan,
                                     std::span<const double> alphas) {
  std::vector<ReductionReport> rows;
  ReductionReport mbs = reduction_report(graph, apply_plan(graph, plan), "mbs");
  mbs.z = plan.z;
  mbs.k_factor = plan.k_factor;
  rows.push_back(std::move(mbs));
  for (double alpha : alphas) {
    ReductionReport row = reduction_report(graph, alpha_scale(graph, alpha), "alpha=" + format_number(alpha));
    row.alpha = alpha;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string reports_text(std::span<const ReductionReport> rows) {
  std::vector<std::vector<std::string>> table = {
      {"variant", "params_before", "params_after", "flops_before", "flops_after", "reduction", "widths_after"}};
  for (const ReductionReport& r : rows) {
    table.push_back({r.variant, std::to_string(r.params_before), std::to_string(r.params_after),
                     std::to_string(r.flops_before), std::to_string(r.flops_after), percent(r.reduction_ratio),
                     "[" + join_widths(r.widths_after) + "]"});
  }
  std::string out = aligned(table);
  if (!rows.empty()) {
    out += "widths_before: [" + join_widths(rows.front().widths_before) + "]\n";
    out += std::string("conventions: batch_norm=") + (rows.front().batch_norm ? "on" : "off") +
           ", biases=excluded, classifier_coupling=" + std::to_string(rows.front().classifier_coupling) + "\n";
  }
  return out;
}

std::string reports_csv(std::span<const ReductionReport> rows) {
  std::string out =
      "variant,z,k_factor,alpha,params_before,params_after,flops_before,flops_after,reduction_ratio,"
      "widths_before,widths_after,batch_norm,biases,classifier_coupling\r\n";
  for (const ReductionReport& r : rows) {
    out += csv_field(r.variant) + "," + optional_number(r.z) + "," + optional_number(r.k_factor) + "," +
           optional_number(r.alpha) + "," + std::to_string(r.params_before) + "," + std::to_string(r.params_after) +
           "," + std::to_string(r.flops_before) + "," + std::to_string(r.flops_after) + "," +
           format_number(r.reduction_ratio) + "," + csv_field(join_widths(r.widths_before)) + "," +
           csv_field(join_widths(r.widths_after)) + "," + (r.batch_norm ? "true" : "false") + ",false," +
           std::to_string(r.classifier_coupling) + "\r\n";
  }
  return out;
}

std::string reports_json(std::span<const ReductionReport> rows) {
  ordered_json out = ordered_json::array();
  for (const ReductionReport& r : rows) {
    ordered_json j;
    j["variant"] = r.variant;
    j["z"] = optional_json(r.z);
    j["k_factor"] = optional_json(r.k_factor);
    j["alpha"] = optional_json(r.alpha);
    j["params_before"] = r.params_before;
    j["params_after"] = r.params_after;
    j["flops_before"] = r.flops_before;
    j["flops_after"] = r.flops_after;
    j["reduction_ratio"] = r.reduction_ratio;
    j["widths_before"] = r.widths_before;
    j["widths_after"] = r.widths_after;
    j["conventions"] = {{"batch_norm", r.batch_norm}, {"biases", false}, {"classifier_coupling", r.classifier_coupling}};
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::vector<TradeoffRow> tradeoff_table(const ModelGraph& graph, const StatsCollection& stats,
                                        std::span<const double> k_values) {
  for (double k : k_values) {
    if (!(k > 0.0) || !std::isfinite(k)) {
      throw Error(ErrorCategory::kOutOfRange, "k values must be positive, got " + format_number(k));
    }
  }
  const std::uint64_t before = count_params(graph);
  std::vector<TradeoffRow> rows;
  for (double k : k_values) {
    PlannerConfig config;
    config.k_factor = k;
    const ScalingPlan plan = run_mbs(graph, stats, config);
    const ModelGraph compact = apply_plan(graph, plan);
    TradeoffRow row;
    row.k_factor = k;
    row.z = plan.z;
    row.params_after = count_params(compact);
    row.reduction_ratio = 1.0 - static_cast<double>(row.params_after) / static_cast<double>(before);
    row.widths = plan.compact_widths();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string tradeoff_text(std::span<const TradeoffRow> rows) {
  std::vector<std::vector<std::string>> table = {{"k", "z", "reduction", "params_after", "widths"}};
  for (const TradeoffRow& r : rows) {
    table.push_back({format_number(r.k_factor), format_number(r.z), percent(r.reduction_ratio),
                     std::to_string(r.params_after), "[" + join_widths(r.widths) + "]"});
  }
  return aligned(table);
}

std::string tradeoff_csv(std::span<const TradeoffRow> rows) {
  std::string out = "k,z,reduction_ratio,params_after,widths\r\n";
  for (const TradeoffRow& r : rows) {
    out += format_number(r.k_factor) + "," + format_number(r.z) + "," + format_number(r.reduction_ratio) + "," +
           std::to_string(r.params_after) + "," + csv_field(join_widths(r.widths)) + "\r\n";
  }
  return out;
}

std::string tradeoff_json(std::span<const TradeoffRow> rows) {
  ordered_json out = ordered_json::array();
  for (const TradeoffRow& r : rows) {
    ordered_json j;
    j["k"] = r.k_factor;
    j["z"] = r.z;
    j["reduction_ratio"] = r.reduction_ratio;
    j["params_after"] = r.params_after;
    j["widths"] = r.widths;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

}  // namespace mbs
