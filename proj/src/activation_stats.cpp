#include "mbs/activation_stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "json_util.hpp"
#include "mbs/error.hpp"

namespace mbs {

using detail::json;
using detail::ordered_json;

const LayerStats* StatsCollection::find(LayerId id) const {
  for (const LayerStats& s : layers) {
    if (s.layer_id == id) return &s;
  }
  return nullptr;
}

std::uint64_t flop_count(const Layer& layer) {
  if (!layer.is_conv()) return 0;
  const auto out2 = static_cast<std::uint64_t>(layer.out_spatial) * layer.out_spatial;
  const auto k2 = static_cast<std::uint64_t>(layer.kernel_size) * layer.kernel_size;
  switch (layer.conv_kind) {
    case ConvKind::kDepthwise:
      return out2 * k2 * static_cast<std::uint64_t>(layer.out_channels);
    case ConvKind::kPointwise:
      return out2 * static_cast<std::uint64_t>(layer.in_channels) * layer.out_channels;
    case ConvKind::kStandard:
      break;
  }
  return out2 * k2 * static_cast<std::uint64_t>(layer.in_channels) * layer.out_channels;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values.front();
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

StatsCollection load_stats(std::string_view document) {
  const json j = detail::parse_json(document, "stats");
  const std::string where = "stats";
  detail::require_object(j, where);
  detail::reject_unknown_keys(j, {"version", "model_name", "model_fingerprint", "source", "seed", "provenance", "layers"},
                              where);
  detail::check_version(j, "mbs-stats", where);
  StatsCollection stats;
  stats.model_name = detail::get_string(j, "model_name", where);
  stats.model_fingerprint = detail::get_string(j, "model_fingerprint", where);
  const std::string source = detail::get_string(j, "source", where);
  if (source == "recorded") {
    stats.source = StatsSource::kRecorded;
  } else if (source == "simulated") {
    stats.source = StatsSource::kSimulated;
  } else {
    detail::schema_error(where + ": field 'source' must be recorded|simulated, got '" + source + "'");
  }
  if (j.contains("seed") && !j.at("seed").is_null()) {
    const json& seed = j.at("seed");
    if (!seed.is_number_unsigned()) detail::schema_error(where + ": field 'seed' must be a non-negative integer");
    stats.seed = seed.get<std::uint64_t>();
  }
  if (stats.source == StatsSource::kSimulated && !stats.seed) {
    detail::schema_error(where + ": simulated stats need field 'seed'");
  }
  if (j.contains("provenance")) stats.provenance = detail::get_string(j, "provenance", where);

  const json& layers = detail::get_array(j, "layers", where);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lw = "stats.layers[" + std::to_string(i) + "]";
    const json& rec = layers[i];
    detail::require_object(rec, lw);
    detail::reject_unknown_keys(rec, {"layer_id", "p", "sample_count", "element_count"}, lw);
    LayerStats s;
    s.layer_id = detail::get_small_int(rec, "layer_id", lw);
    s.p = detail::get_number(rec, "p", lw);
    if (!(s.p >= 0.0 && s.p <= 1.0)) {
      throw Error(ErrorCategory::kOutOfRange, lw + ": p = " + std::to_string(s.p) + " is outside [0, 1]");
    }
    const std::int64_t samples = detail::get_int(rec, "sample_count", lw);
    if (samples < 1) detail::schema_error(lw + ": field 'sample_count' must be >= 1");
    s.sample_count = static_cast<std::uint64_t>(samples);
    if (rec.contains("element_count")) {
      const std::int64_t elements = detail::get_int(rec, "element_count", lw);
      if (elements < 0) detail::schema_error(lw + ": field 'element_count' must be >= 0");
      s.element_count = static_cast<std::uint64_t>(elements);
    }
    if (stats.find(s.layer_id) != nullptr) {
      detail::schema_error(lw + ": layer " + std::to_string(s.layer_id) + " appears twice");
    }
    stats.layers.push_back(s);
  }
  return stats;
}

void check_stats(const StatsCollection& stats, const ModelGraph& graph) {
  const std::string expected = model_fingerprint(graph);
  if (stats.model_fingerprint != expected) {
    throw Error(ErrorCategory::kFingerprint, "stats were recorded for model " + stats.model_fingerprint +
                                                 ", not " + expected + " ('" + graph.name + "')");
  }
  for (const LayerStats& s : stats.layers) {
    if (s.layer_id < 0 || s.layer_id >= static_cast<LayerId>(graph.layers.size()) ||
        !graph.layer(s.layer_id).is_conv()) {
      detail::schema_error("stats name layer " + std::to_string(s.layer_id) + ", which is not a conv layer");
    }
    if (!(s.p >= 0.0 && s.p <= 1.0)) {
      throw Error(ErrorCategory::kOutOfRange, "layer " + std::to_string(s.layer_id) + ": p outside [0, 1]");
    }
  }
  for (LayerId id : graph.conv_ids()) {
    if (stats.find(id) == nullptr) {
      throw Error(ErrorCategory::kMissingLayer, "stats have no record for conv layer " + std::to_string(id));
    }
  }
}

StatsCollection load_stats(std::string_view document, const ModelGraph& graph) {
  StatsCollection stats = load_stats(document);
  check_stats(stats, graph);
  return stats;
}

std::string serialize_stats(const StatsCollection& stats) {
  ordered_json j;
  j["version"] = std::string(kStatsVersion);
  j["model_name"] = stats.model_name;
  j["model_fingerprint"] = stats.model_fingerprint;
  j["source"] = stats.source == StatsSource::kSimulated ? "simulated" : "recorded";
  if (stats.seed) {
    j["seed"] = *stats.seed;
  } else {
    j["seed"] = nullptr;
  }
  if (!stats.provenance.empty()) j["provenance"] = stats.provenance;
  ordered_json layers = ordered_json::array();
  for (const LayerStats& s : stats.layers) {
    ordered_json rec;
    rec["layer_id"] = s.layer_id;
    rec["p"] = s.p;
    rec["sample_count"] = s.sample_count;
    rec["element_count"] = s.element_count;
    layers.push_back(std::move(rec));
  }
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

StatsCollection collect_stats(const ModelGraph& graph, const NetworkWeights& weights,
                              std::span<const Tensor> images, const SimulationOptions& options) {
  if (images.empty()) throw Error(ErrorCategory::kOutOfRange, "need at least one image");
  const std::uint64_t elements = activation_elements(graph);
  if (elements > options.activation_budget) {
    throw Error(ErrorCategory::kBudget, "model needs " + std::to_string(elements) +
                                            " activation elements per image, budget is " +
                                            std::to_string(options.activation_budget));
  }

  // per_image[i][c]: p of conv c (pipeline order) on image i.
  const std::vector<LayerId> convs = graph.conv_ids();
  std::vector<std::vector<double>> per_image(images.size());
  std::vector<std::exception_ptr> failures(images.size());
  const auto run_one = [&](std::size_t i) {
    try {
      const std::vector<LayerActivity> activity = run_forward(graph, weights, images[i]);
      std::vector<double>& p = per_image[i];
      p.reserve(activity.size());
      for (const LayerActivity& a : activity) {
        p.push_back(static_cast<double>(a.nonzero) / static_cast<double>(a.elements));
      }
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, images.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < images.size(); ++i) run_one(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < images.size(); i += threads) run_one(i);
      });
    }
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  StatsCollection stats;
  stats.model_name = graph.name;
  stats.model_fingerprint = model_fingerprint(graph);
  stats.source = StatsSource::kRecorded;
  const auto n = static_cast<double>(images.size());
  std::vector<double> column(images.size());
  for (std::size_t c = 0; c < convs.size(); ++c) {
    const Layer& layer = graph.layer(convs[c]);
    LayerStats s;
    s.layer_id = layer.id;
    s.sample_count = images.size();
    s.element_count = static_cast<std::uint64_t>(layer.out_spatial) * layer.out_spatial * layer.out_channels;
    if (layer.has_relu) {
      for (std::size_t i = 0; i < images.size(); ++i) column[i] = per_image[i][c];
      s.p = pairwise_sum(column) / n;
    } else {
      s.p = 1.0;
    }
    stats.layers.push_back(s);
  }
  return stats;
}

StatsCollection simulate_stats(const ModelGraph& graph, std::size_t n_images, std::uint64_t seed,
                               const SimulationOptions& options) {
  if (n_images == 0) throw Error(ErrorCategory::kOutOfRange, "n_images must be >= 1");
  const std::uint64_t elements = activation_elements(graph);
  if (elements > options.activation_budget) {
    throw Error(ErrorCategory::kBudget, "model needs " + std::to_string(elements) +
                                            " activation elements per image, budget is " +
                                            std::to_string(options.activation_budget));
  }
  const NetworkWeights weights = make_random_weights(graph, seed);
  std::vector<Tensor> images;
  images.reserve(n_images);
  for (std::size_t i = 0; i < n_images; ++i) images.push_back(make_synthetic_image(graph, seed, i));
  StatsCollection stats = collect_stats(graph, weights, images, options);
  stats.source = StatsSource::kSimulated;
  stats.seed = seed;
  stats.provenance = "seeded random weights, synthetic uniform images";
  return stats;
}

}  // namespace mbs
