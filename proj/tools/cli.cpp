#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mbs/activation_stats.hpp"
#include "mbs/error.hpp"
#include "mbs/model_ir.hpp"
#include "mbs/model_zoo.hpp"
#include "mbs/planner.hpp"
#include "mbs/reporting.hpp"
#include "mbs/rf_analysis.hpp"

namespace mbs::cli {

namespace {

struct Options {
  std::string model;
  std::string stats;
  std::string plan;
  std::string out;
  std::vector<double> z_factors;
  std::optional<double> z;
  std::vector<double> alphas;
  std::size_t images = 16;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool force = false;
  bool strict = false;
  std::string format = "text";
  std::string family;
  int depth = 0;
  std::optional<int> resolution;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kIo, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCategory::kIo, "error while reading '" + path + "'");
  return buf.str();
}

// Writes to `path`, or to `out` when no path is given.
void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  if (!o.force && std::filesystem::exists(o.out)) {
    throw Error(ErrorCategory::kIo, "'" + o.out + "' exists; pass --force to overwrite");
  }
  std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCategory::kIo, "cannot write '" + o.out + "'");
  file << text;
  file.close();
  if (!file) throw Error(ErrorCategory::kIo, "error while writing '" + o.out + "'");
}

ModelGraph load_model(const Options& o) { return parse_model(read_file(o.model)); }

double single_k(const Options& o) {
  if (o.z_factors.size() > 1) throw Error(ErrorCategory::kOutOfRange, "--z-factor takes a single value here");
  return o.z_factors.empty() ? 1.0 : o.z_factors.front();
}

PlannerConfig planner_config(const Options& o) {
  PlannerConfig config;
  config.k_factor = single_k(o);
  config.z = o.z;
  return config;
}

std::string profile_json(const RFProfile& profile) {
  nlohmann::ordered_json j;
  j["z"] = profile.z;
  j["k_factor"] = profile.k_factor;
  j["boundary"] = profile.boundary ? nlohmann::ordered_json(*profile.boundary) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const RfLayerClass& c : profile.layers) {
    layers.push_back({{"layer_id", c.layer_id},
                      {"rf", c.rf},
                      {"jump", c.jump},
                      {"macroblock", c.macroblock_id},
                      {"is_base", c.is_base}});
  }
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const ModelGraph graph = load_model(o);
  const PlannerConfig config = planner_config(o);
  RFProfile profile = classify_layers(graph, compute_rf(graph), config.resolve_z(graph.input_resolution));
  if (!o.z) profile.k_factor = config.k_factor;
  if (o.format == "csv") {
    emit(o, rf_profile_csv(profile), out);
  } else if (o.format == "json") {
    emit(o, profile_json(profile), out);
  } else {
    emit(o, rf_profile_text(profile), out);
  }
  return kExitOk;
}

int cmd_stats_simulate(const Options& o, std::ostream& out) {
  const ModelGraph graph = load_model(o);
  SimulationOptions sim;
  sim.threads = o.threads;
  emit(o, serialize_stats(simulate_stats(graph, o.images, o.seed, sim)), out);
  return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelGraph graph = load_model(o);
  const StatsCollection stats = load_stats(read_file(o.stats), graph);
  const ScalingPlan plan = run_mbs(graph, stats, planner_config(o));
  if (plan.degenerate()) {
    std::string ids;
    for (const MacroblockScaling& m : plan.macroblocks) {
      if (m.degenerate) ids += (ids.empty() ? "" : ",") + std::to_string(m.macroblock_id);
    }
    if (o.strict) throw Error(ErrorCategory::kDegenerate, "all-zero effective flops in macroblocks " + ids);
    err << "warning: degenerate: all-zero effective flops in macroblocks " << ids << "\n";
  }
  emit(o, serialize_plan(plan), out);
  return kExitOk;
}

int cmd_apply(const Options& o, std::ostream& out) {
  const ModelGraph graph = load_model(o);
  const ScalingPlan plan = parse_plan(read_file(o.plan));
  emit(o, serialize_model(apply_plan(graph, plan)), out);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const ModelGraph graph = load_model(o);
  const ScalingPlan plan = parse_plan(read_file(o.plan));
  const std::vector<ReductionReport> rows = compare(graph, plan, o.alphas);
  if (o.format == "csv") {
    emit(o, reports_csv(rows), out);
  } else if (o.format == "json") {
    emit(o, reports_json(rows), out);
  } else {
    emit(o, reports_text(rows), out);
  }
  return kExitOk;
}

int cmd_tradeoff(const Options& o, std::ostream& out) {
  const ModelGraph graph = load_model(o);
  const StatsCollection stats = load_stats(read_file(o.stats), graph);
  const std::vector<double>& ks = o.z_factors.empty() ? kDefaultKSweep : o.z_factors;
  const std::vector<TradeoffRow> rows = tradeoff_table(graph, stats, ks);
  if (o.format == "csv") {
    emit(o, tradeoff_csv(rows), out);
  } else if (o.format == "json") {
    emit(o, tradeoff_json(rows), out);
  } else {
    emit(o, tradeoff_text(rows), out);
  }
  return kExitOk;
}

int cmd_zoo_emit(const Options& o, std::ostream& out) {
  ZooSpec spec;
  spec.family = parse_family(o.family);
  spec.depth = o.depth;
  spec.input_resolution = o.resolution;
  emit(o, serialize_model(generate(spec)), out);
  return kExitOk;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kIo:
      return kExitIo;
    case ErrorCategory::kDegenerate:
      return kExitDegenerate;
    default:
      return kExitValidation;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Macroblock scaling planner: receptive fields, activation statistics and width plans.", "mbs");
  app.require_subcommand(1);
  Options o;

  const auto add_model = [&](CLI::App* cmd) { cmd->add_option("--model", o.model, "IR document")->required(); };
  const auto add_out = [&](CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--out", o.out, "output path (stdout when omitted)");
    if (required) opt->required();
    cmd->add_flag("--force", o.force, "overwrite an existing output");
  };
  const auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", o.format, "text, csv or json")
        ->check(CLI::IsMember({"text", "csv", "json"}))
        ->capture_default_str();
  };
  const auto add_z = [&](CLI::App* cmd) {
    auto* k = cmd->add_option("--z-factor", o.z_factors, "z = k * L (default k = 1)")->expected(1);
    auto* z = cmd->add_option("--z", o.z, "absolute z in input pixels");
    z->excludes(k);
  };

  CLI::App* analyze = app.add_subcommand("analyze", "receptive fields and base/enhancement split");
  add_model(analyze);
  add_z(analyze);
  add_format(analyze);
  add_out(analyze, false);

  CLI::App* stats = app.add_subcommand("stats", "activation statistics");
  stats->require_subcommand(1);
  CLI::App* simulate = stats->add_subcommand("simulate", "seeded random weights and synthetic images");
  add_model(simulate);
  simulate->add_option("--images", o.images, "number of images")->capture_default_str();
  simulate->add_option("--seed", o.seed, "random seed")->capture_default_str();
  simulate->add_option("--threads", o.threads, "worker threads (0: hardware)")->capture_default_str();
  add_out(simulate, false);

  CLI::App* plan = app.add_subcommand("plan", "compute per-macroblock scaling factors");
  add_model(plan);
  plan->add_option("--stats", o.stats, "stats document")->required();
  add_z(plan);
  plan->add_flag("--strict", o.strict, "fail (exit 4) on degenerate activations");
  add_out(plan, false);

  CLI::App* apply = app.add_subcommand("apply", "rewrite a model with a plan's widths");
  add_model(apply);
  apply->add_option("--plan", o.plan, "plan document")->required();
  add_out(apply, false);

  CLI::App* report = app.add_subcommand("report", "parameter and flop reduction of a plan");
  add_model(report);
  report->add_option("--plan", o.plan, "plan document")->required();
  report->add_option("--alpha", o.alphas, "alpha-scaling baseline (repeatable)");
  add_format(report);
  add_out(report, false);

  CLI::App* tradeoff = app.add_subcommand("tradeoff", "reduction for a sweep of z = k * L");
  add_model(tradeoff);
  tradeoff->add_option("--stats", o.stats, "stats document")->required();
  tradeoff->add_option("--z-factor", o.z_factors, "k values (repeatable; default 1.4 1.2 1.0 0.8 0.6)");
  add_format(tradeoff);
  add_out(tradeoff, false);

  CLI::App* zoo = app.add_subcommand("zoo", "benchmark architectures");
  zoo->require_subcommand(1);
  CLI::App* emit_cmd = zoo->add_subcommand("emit", "write a generated IR document");
  emit_cmd->add_option("--family", o.family, "resnet-cifar, resnet-imagenet-basic, resnet-imagenet-bottleneck, "
                                              "mobilenet-v1 or densenet-bc")
      ->required();
  emit_cmd->add_option("--depth", o.depth, "network depth");
  emit_cmd->add_option("--resolution", o.resolution, "input resolution L");
  add_out(emit_cmd, false);

  if (!args.empty() && !args[0].starts_with('-') && app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "error: usage: unknown subcommand '" << args[0] << "'\n" << app.help();
    return kExitUsage;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(o, out);
    if (simulate->parsed()) return cmd_stats_simulate(o, out);
    if (plan->parsed()) return cmd_plan(o, out, err);
    if (apply->parsed()) return cmd_apply(o, out);
    if (report->parsed()) return cmd_report(o, out);
    if (tradeoff->parsed()) return cmd_tradeoff(o, out);
    if (emit_cmd->parsed()) return cmd_zoo_emit(o, out);
  } catch (const Error& e) {
    err << "error: " << category_name(e.category()) << ": " << e.detail() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kExitValidation;
  }
  err << "error: usage: no subcommand\n" << app.help();
  return kExitUsage;
}

}  // namespace mbs::cli
