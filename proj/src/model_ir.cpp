#include "mbs/model_ir.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json_util.hpp"
#include "mbs/error.hpp"
#include "mbs/fingerprint.hpp"
#include "mbs/planner.hpp"

namespace mbs {

using detail::json;
using detail::ordered_json;

std::vector<LayerId> ModelGraph::conv_ids() const {
  std::vector<LayerId> ids;
  for (const Layer& l : layers) {
    if (l.is_conv()) ids.push_back(l.id);
  }
  return ids;
}

std::size_t ModelGraph::conv_count() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const Layer& l) { return l.is_conv(); }));
}

std::string_view to_string(ConvKind kind) {
  switch (kind) {
    case ConvKind::kStandard: return "standard";
    case ConvKind::kDepthwise: return "depthwise";
    case ConvKind::kPointwise: return "pointwise";
  }
  return "standard";
}

std::string_view to_string(PoolKind kind) { return kind == PoolKind::kMax ? "max" : "avg"; }

std::string_view to_string(Padding padding) { return padding == Padding::kSame ? "same" : "valid"; }

namespace {

std::string layer_where(std::size_t index) { return "layers[" + std::to_string(index) + "]"; }

std::string pair_name(LayerId from, LayerId to) {
  const std::string src = from == kImageInput ? std::string("input") : "layer " + std::to_string(from);
  return src + " -> layer " + std::to_string(to);
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

ConvKind parse_conv_kind(const std::string& s, const std::string& where) {
  if (s == "standard") return ConvKind::kStandard;
  if (s == "depthwise") return ConvKind::kDepthwise;
  if (s == "pointwise") return ConvKind::kPointwise;
  detail::schema_error(where + ": field 'conv_kind' must be standard|depthwise|pointwise, got '" + s + "'");
}

Padding parse_padding(const std::string& s, const std::string& where) {
  if (s == "same") return Padding::kSame;
  if (s == "valid") return Padding::kValid;
  detail::schema_error(where + ": field 'padding' must be same|valid, got '" + s + "'");
}

std::vector<LayerId> parse_ids(const json& object, const char* key, const std::string& where) {
  std::vector<LayerId> ids;
  for (const json& v : detail::get_array(object, key, where)) {
    if (!v.is_number_integer()) detail::schema_error(where + ": field '" + key + "' must hold integers");
    ids.push_back(v.get<int>());
  }
  return ids;
}

Layer parse_layer(const json& j, std::size_t index) {
  const std::string where = layer_where(index);
  detail::require_object(j, where);
  Layer layer;
  layer.id = detail::get_small_int(j, "id", where);
  const std::string type = detail::get_string(j, "type", where);
  layer.inputs = j.contains("inputs") ? parse_ids(j, "inputs", where)
                                      : std::vector<LayerId>{static_cast<LayerId>(index) - 1};
  if (j.contains("padding")) layer.padding = parse_padding(detail::get_string(j, "padding", where), where);
  if (j.contains("dilation") && detail::get_int(j, "dilation", where) != 1) {
    detail::schema_error(where + ": field 'dilation' must be 1 (dilated kernels are not supported)");
  }
  layer.stride = detail::get_small_int(j, "stride", where);
  layer.in_spatial = detail::get_small_int(j, "in_spatial", where);
  layer.out_spatial = detail::get_small_int(j, "out_spatial", where);

  if (type == "conv") {
    detail::reject_unknown_keys(
        j,
        {"id", "type", "kernel_size", "stride", "dilation", "padding", "in_channels", "out_channels",
         "in_spatial", "out_spatial", "conv_kind", "has_relu", "macroblock_id", "scalable", "inputs",
         "residual"},
        where);
    layer.kind = LayerKind::kConv;
    layer.kernel_size = detail::get_small_int(j, "kernel_size", where);
    layer.in_channels = detail::get_small_int(j, "in_channels", where);
    layer.out_channels = detail::get_small_int(j, "out_channels", where);
    if (j.contains("conv_kind")) {
      layer.conv_kind = parse_conv_kind(detail::get_string(j, "conv_kind", where), where);
    }
    if (j.contains("has_relu")) layer.has_relu = detail::get_bool(j, "has_relu", where);
    if (j.contains("scalable")) layer.scalable = detail::get_bool(j, "scalable", where);
    if (j.contains("macroblock_id")) layer.macroblock_id = detail::get_small_int(j, "macroblock_id", where);
    if (j.contains("residual")) layer.residual = parse_ids(j, "residual", where);
  } else if (type == "pool") {
    detail::reject_unknown_keys(j,
                                {"id", "type", "pool_kind", "window", "stride", "dilation", "padding",
                                 "in_spatial", "out_spatial", "inputs"},
                                where);
    layer.kind = LayerKind::kPool;
    layer.kernel_size = detail::get_small_int(j, "window", where);
    layer.has_relu = false;
    layer.scalable = false;
    if (j.contains("pool_kind")) {
      const std::string kind = detail::get_string(j, "pool_kind", where);
      if (kind == "max") {
        layer.pool_kind = PoolKind::kMax;
      } else if (kind == "avg") {
        layer.pool_kind = PoolKind::kAvg;
      } else {
        detail::schema_error(where + ": field 'pool_kind' must be max|avg, got '" + kind + "'");
      }
    }
  } else {
    detail::schema_error(where + ": field 'type' must be conv|pool, got '" + type + "'");
  }
  return layer;
}

Macroblock parse_macroblock(const json& j, std::size_t index) {
  const std::string where = "macroblocks[" + std::to_string(index) + "]";
  detail::require_object(j, where);
  detail::reject_unknown_keys(j, {"id", "layer_ids", "out_spatial", "base_width", "custom"}, where);
  Macroblock mb;
  mb.id = detail::get_small_int(j, "id", where);
  mb.layer_ids = parse_ids(j, "layer_ids", where);
  mb.out_spatial = detail::get_small_int(j, "out_spatial", where);
  mb.base_width = detail::get_small_int(j, "base_width", where);
  if (j.contains("custom")) mb.custom = detail::get_bool(j, "custom", where);
  return mb;
}

// Builds macroblock records from per-layer macroblock_id annotations.
void macroblocks_from_annotations(ModelGraph& graph) {
  int count = 0;
  for (const Layer& l : graph.layers) {
    if (l.is_conv()) count = std::max(count, l.macroblock_id + 1);
  }
  graph.macroblocks.assign(static_cast<std::size_t>(count), Macroblock{});
  for (int i = 0; i < count; ++i) graph.macroblocks[static_cast<std::size_t>(i)].id = i;
  for (const Layer& l : graph.layers) {
    if (!l.is_conv() || l.macroblock_id < 0) continue;
    Macroblock& mb = graph.macroblocks[static_cast<std::size_t>(l.macroblock_id)];
    if (mb.layer_ids.empty()) {
      mb.base_width = l.out_channels;
    } else if (graph.layer(mb.layer_ids.back()).out_spatial != l.out_spatial) {
      mb.custom = true;
    }
    mb.layer_ids.push_back(l.id);
    mb.out_spatial = l.out_spatial;
  }
}

int producer_width(const ModelGraph& graph, LayerId id) {
  return id == kImageInput ? graph.input_channels : graph.layer(id).out_channels;
}

int producer_spatial(const ModelGraph& graph, LayerId id) {
  return id == kImageInput ? graph.input_resolution : graph.layer(id).out_spatial;
}

void check_edges(const ModelGraph& graph, Layer& layer) {
  const std::string where = "layer " + std::to_string(layer.id);
  if (layer.inputs.empty()) detail::schema_error(where + ": field 'inputs' must not be empty");
  int width_sum = 0;
  for (LayerId src : layer.inputs) {
    if (src != kImageInput && (src < 0 || src >= layer.id)) {
      throw Error(ErrorCategory::kCycle,
                  where + " reads layer " + std::to_string(src) + ", which does not precede it");
    }
    const int spatial = producer_spatial(graph, src);
    if (spatial != layer.in_spatial) {
      throw Error(ErrorCategory::kChain, pair_name(src, layer.id) + ": out_spatial " + std::to_string(spatial) +
                                             " != in_spatial " + std::to_string(layer.in_spatial));
    }
    width_sum += producer_width(graph, src);
  }
  if (!layer.is_conv()) {
    layer.in_channels = width_sum;
    layer.out_channels = width_sum;
    return;
  }
  if (width_sum != layer.in_channels) {
    const LayerId src = layer.inputs.size() == 1 ? layer.inputs.front() : layer.inputs.back();
    throw Error(ErrorCategory::kChain, pair_name(src, layer.id) + ": producer width " +
                                           std::to_string(width_sum) + " != in_channels " +
                                           std::to_string(layer.in_channels));
  }
  for (LayerId src : layer.residual) {
    if (src < 0 || src >= layer.id) {
      throw Error(ErrorCategory::kCycle,
                  where + " adds layer " + std::to_string(src) + ", which does not precede it");
    }
    const Layer& from = graph.layer(src);
    if (from.out_channels > layer.out_channels) {
      throw Error(ErrorCategory::kChain, pair_name(src, layer.id) + ": residual width " +
                                             std::to_string(from.out_channels) + " exceeds out_channels " +
                                             std::to_string(layer.out_channels));
    }
    if (residual_step(from.out_spatial, layer.out_spatial) == 0) {
      throw Error(ErrorCategory::kChain, pair_name(src, layer.id) + ": residual out_spatial " +
                                             std::to_string(from.out_spatial) + " cannot be subsampled to " +
                                             std::to_string(layer.out_spatial));
    }
  }
}

void check_layer_fields(const Layer& layer) {
  const std::string where = "layer " + std::to_string(layer.id);
  const auto positive = [&](int value, const char* name) {
    if (value < 1) detail::schema_error(where + ": field '" + name + "' must be >= 1");
  };
  positive(layer.kernel_size, layer.is_conv() ? "kernel_size" : "window");
  positive(layer.stride, "stride");
  positive(layer.in_spatial, "in_spatial");
  positive(layer.out_spatial, "out_spatial");
  if (layer.is_conv()) {
    positive(layer.in_channels, "in_channels");
    positive(layer.out_channels, "out_channels");
    if (layer.conv_kind == ConvKind::kDepthwise && layer.in_channels != layer.out_channels) {
      detail::schema_error(where + ": depthwise layers need in_channels == out_channels");
    }
    if (layer.conv_kind == ConvKind::kPointwise && layer.kernel_size != 1) {
      detail::schema_error(where + ": pointwise layers need kernel_size 1");
    }
  } else if (!layer.residual.empty()) {
    detail::schema_error(where + ": pool layers cannot carry 'residual'");
  }
  if (layer.padding == Padding::kSame) {
    const int expected = ceil_div(layer.in_spatial, layer.stride);
    if (layer.out_spatial != expected) {
      throw Error(ErrorCategory::kChain, where + ": out_spatial " + std::to_string(layer.out_spatial) +
                                             " != ceil(" + std::to_string(layer.in_spatial) + " / " +
                                             std::to_string(layer.stride) + ") for same padding");
    }
  } else if (layer.out_spatial > layer.in_spatial) {
    throw Error(ErrorCategory::kChain, where + ": out_spatial exceeds in_spatial for valid padding");
  }
}

void check_macroblocks(const ModelGraph& graph) {
  if (graph.macroblocks.empty()) throw Error(ErrorCategory::kPartition, "model declares no macroblocks");
  std::vector<int> owner(graph.layers.size(), -1);
  for (std::size_t i = 0; i < graph.macroblocks.size(); ++i) {
    const Macroblock& mb = graph.macroblocks[i];
    const std::string where = "macroblock " + std::to_string(i);
    if (mb.id != static_cast<int>(i)) {
      throw Error(ErrorCategory::kPartition, where + ": ids must be contiguous from 0, got " + std::to_string(mb.id));
    }
    if (mb.layer_ids.empty()) throw Error(ErrorCategory::kPartition, where + " has no layers");
    if (mb.base_width < 1) detail::schema_error(where + ": field 'base_width' must be >= 1");
    if (mb.out_spatial < 1) detail::schema_error(where + ": field 'out_spatial' must be >= 1");
    for (std::size_t k = 0; k < mb.layer_ids.size(); ++k) {
      const LayerId id = mb.layer_ids[k];
      if (id < 0 || id >= static_cast<LayerId>(graph.layers.size()) || !graph.layer(id).is_conv()) {
        throw Error(ErrorCategory::kPartition, where + " lists " + std::to_string(id) + ", which is not a conv layer");
      }
      if (k > 0 && id <= mb.layer_ids[k - 1]) {
        throw Error(ErrorCategory::kPartition, where + ": layer_ids must be strictly increasing");
      }
      if (owner[static_cast<std::size_t>(id)] != -1) {
        throw Error(ErrorCategory::kPartition, "layer " + std::to_string(id) + " belongs to two macroblocks");
      }
      owner[static_cast<std::size_t>(id)] = mb.id;
      const Layer& l = graph.layer(id);
      if (l.macroblock_id != mb.id) {
        throw Error(ErrorCategory::kPartition, "layer " + std::to_string(id) + " has macroblock_id " +
                                                   std::to_string(l.macroblock_id) + " but is listed in " + where);
      }
      if (!mb.custom && l.out_spatial != mb.out_spatial) {
        throw Error(ErrorCategory::kPartition, where + ": layer " + std::to_string(id) + " has out_spatial " +
                                                   std::to_string(l.out_spatial) + ", macroblock has " +
                                                   std::to_string(mb.out_spatial));
      }
    }
  }
  int last = 0;
  for (const Layer& l : graph.layers) {
    if (!l.is_conv()) continue;
    if (owner[static_cast<std::size_t>(l.id)] == -1) {
      throw Error(ErrorCategory::kPartition, "layer " + std::to_string(l.id) + " belongs to no macroblock");
    }
    if (l.macroblock_id < last) {
      throw Error(ErrorCategory::kPartition,
                  "layer " + std::to_string(l.id) + ": macroblock ids must follow pipeline order");
    }
    last = l.macroblock_id;
  }
  if (graph.classifier_width_coupling < -1 ||
      graph.classifier_width_coupling >= static_cast<int>(graph.macroblocks.size())) {
    detail::schema_error("field 'classifier_width_coupling' must name a macroblock or be -1");
  }
}

ordered_json layer_to_json(const Layer& l) {
  ordered_json j;
  j["id"] = l.id;
  j["type"] = l.is_conv() ? "conv" : "pool";
  if (l.is_conv()) {
    j["conv_kind"] = std::string(to_string(l.conv_kind));
    j["kernel_size"] = l.kernel_size;
  } else {
    j["pool_kind"] = std::string(to_string(l.pool_kind));
    j["window"] = l.kernel_size;
  }
  j["stride"] = l.stride;
  j["padding"] = std::string(to_string(l.padding));
  j["in_spatial"] = l.in_spatial;
  j["out_spatial"] = l.out_spatial;
  if (l.is_conv()) {
    j["in_channels"] = l.in_channels;
    j["out_channels"] = l.out_channels;
    j["has_relu"] = l.has_relu;
    j["macroblock_id"] = l.macroblock_id;
    j["scalable"] = l.scalable;
  }
  j["inputs"] = l.inputs;
  if (!l.residual.empty()) j["residual"] = l.residual;
  return j;
}

ordered_json model_to_json(const ModelGraph& graph) {
  ordered_json j;
  j["version"] = std::string(kIrVersion);
  j["name"] = graph.name;
  j["input_resolution"] = graph.input_resolution;
  j["input_channels"] = graph.input_channels;
  j["batch_norm"] = graph.batch_norm;
  j["classifier_params"] = graph.classifier_params;
  j["classifier_width_coupling"] = graph.classifier_width_coupling;
  ordered_json layers = ordered_json::array();
  for (const Layer& l : graph.layers) layers.push_back(layer_to_json(l));
  j["layers"] = std::move(layers);
  ordered_json mbs = ordered_json::array();
  for (const Macroblock& mb : graph.macroblocks) {
    ordered_json m;
    m["id"] = mb.id;
    m["layer_ids"] = mb.layer_ids;
    m["out_spatial"] = mb.out_spatial;
    m["base_width"] = mb.base_width;
    m["custom"] = mb.custom;
    mbs.push_back(std::move(m));
  }
  j["macroblocks"] = std::move(mbs);
  return j;
}

}  // namespace

void validate(ModelGraph& graph) {
  if (graph.name.empty()) detail::schema_error("field 'name' must not be empty");
  if (graph.input_resolution < 1) detail::schema_error("field 'input_resolution' must be >= 1");
  if (graph.input_channels < 1) detail::schema_error("field 'input_channels' must be >= 1");
  if (graph.layers.empty()) detail::schema_error("field 'layers' must not be empty");
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    Layer& layer = graph.layers[i];
    if (layer.id != static_cast<LayerId>(i)) {
      detail::schema_error(layer_where(i) + ": field 'id' must equal the layer's position " + std::to_string(i));
    }
    check_layer_fields(layer);
    check_edges(graph, layer);
    if (!layer.is_conv()) {
      layer.macroblock_id = -1;
      layer.scalable = false;
      layer.has_relu = false;
    }
  }
  if (graph.conv_count() == 0) detail::schema_error("model has no conv layers");
  check_macroblocks(graph);
}

ModelGraph parse_model(std::string_view document) {
  const json j = detail::parse_json(document, "model");
  const std::string where = "model";
  detail::require_object(j, where);
  detail::reject_unknown_keys(j,
                              {"version", "name", "input_resolution", "input_channels", "batch_norm", "layers",
                               "macroblocks", "classifier_params", "classifier_width_coupling"},
                              where);
  detail::check_version(j, "mbs-ir", where);

  ModelGraph graph;
  graph.name = detail::get_string(j, "name", where);
  graph.input_resolution = detail::get_small_int(j, "input_resolution", where);
  if (j.contains("input_channels")) graph.input_channels = detail::get_small_int(j, "input_channels", where);
  if (j.contains("batch_norm")) graph.batch_norm = detail::get_bool(j, "batch_norm", where);
  const std::int64_t head = detail::get_int(j, "classifier_params", where);
  if (head < 0) detail::schema_error("field 'classifier_params' must be >= 0");
  graph.classifier_params = static_cast<std::uint64_t>(head);

  const json& layers = detail::get_array(j, "layers", where);
  for (std::size_t i = 0; i < layers.size(); ++i) graph.layers.push_back(parse_layer(layers[i], i));

  if (j.contains("macroblocks")) {
    const json& mbs = detail::get_array(j, "macroblocks", where);
    for (std::size_t i = 0; i < mbs.size(); ++i) graph.macroblocks.push_back(parse_macroblock(mbs[i], i));
    // Member lists are authoritative; per-layer annotations are optional.
    for (const Macroblock& mb : graph.macroblocks) {
      for (LayerId id : mb.layer_ids) {
        if (id < 0 || id >= static_cast<LayerId>(graph.layers.size())) continue;
        Layer& l = graph.layers[static_cast<std::size_t>(id)];
        if (l.macroblock_id == -1) l.macroblock_id = mb.id;
      }
    }
  } else {
    std::size_t annotated = 0;
    std::size_t convs = 0;
    for (const Layer& l : graph.layers) {
      if (!l.is_conv()) continue;
      ++convs;
      if (l.macroblock_id >= 0) ++annotated;
    }
    if (annotated == 0) {
      graph = infer_macroblocks(std::move(graph));
    } else if (annotated == convs) {
      macroblocks_from_annotations(graph);
    } else {
      throw Error(ErrorCategory::kPartition, "either every conv layer or none may carry 'macroblock_id'");
    }
  }

  if (j.contains("classifier_width_coupling")) {
    graph.classifier_width_coupling = detail::get_small_int(j, "classifier_width_coupling", where);
  } else {
    graph.classifier_width_coupling = static_cast<int>(graph.macroblocks.size()) - 1;
  }
  validate(graph);
  return graph;
}

std::string serialize_model(const ModelGraph& graph) { return model_to_json(graph).dump(2) + "\n"; }

std::string canonical_model(const ModelGraph& graph) {
  return json::parse(model_to_json(graph).dump()).dump();
}

std::string model_fingerprint(const ModelGraph& graph) { return "sha256:" + sha256_hex(canonical_model(graph)); }

ModelGraph infer_macroblocks(ModelGraph graph) {
  if (!graph.macroblocks.empty()) return graph;
  int previous = 0;
  for (Layer& l : graph.layers) {
    if (!l.is_conv()) continue;
    if (graph.macroblocks.empty() || l.out_spatial < previous) {
      Macroblock mb;
      mb.id = static_cast<int>(graph.macroblocks.size());
      mb.out_spatial = l.out_spatial;
      mb.base_width = l.out_channels;
      graph.macroblocks.push_back(std::move(mb));
    } else if (l.out_spatial > previous) {
      throw Error(ErrorCategory::kPartition, "layer " + std::to_string(l.id) + ": out_spatial grows from " +
                                                 std::to_string(previous) + " to " +
                                                 std::to_string(l.out_spatial) + " along the pipeline");
    }
    previous = l.out_spatial;
    Macroblock& mb = graph.macroblocks.back();
    mb.layer_ids.push_back(l.id);
    l.macroblock_id = mb.id;
  }
  // The design width is the first scalable member's output width.
  for (Macroblock& mb : graph.macroblocks) {
    for (LayerId id : mb.layer_ids) {
      if (graph.layer(id).scalable) {
        mb.base_width = graph.layer(id).out_channels;
        break;
      }
    }
  }
  return graph;
}

int residual_step(int from_spatial, int to_spatial) {
  for (int step = 1; step <= from_spatial; ++step) {
    const int size = ceil_div(from_spatial, step);
    if (size == to_spatial) return step;
    if (size < to_spatial) break;
  }
  return 0;
}

int scaled_width(double factor, int width) {
  const double product = factor * static_cast<double>(width);
  const double nearest = std::round(product);
  if (std::abs(product - nearest) <= 1e-9 * std::max(1.0, std::abs(product))) {
    return static_cast<int>(nearest);
  }
  return static_cast<int>(std::ceil(product));
}

namespace {

// Rebuilds widths with scale(i, w) giving the new width of a scalable layer
// of macroblock i whose current width is w.
template <typename Scale>
ModelGraph rescale(const ModelGraph& graph, Scale scale) {
  ModelGraph out = graph;
  for (Layer& l : out.layers) {
    int width_in = 0;
    for (LayerId src : l.inputs) width_in += producer_width(out, src);
    l.in_channels = width_in;
    if (!l.is_conv() || l.conv_kind == ConvKind::kDepthwise) {
      l.out_channels = width_in;
    } else if (l.scalable) {
      l.out_channels = scale(static_cast<std::size_t>(l.macroblock_id), l.out_channels);
    }
    if (l.out_channels < 1) {
      throw Error(ErrorCategory::kOutOfRange, "layer " + std::to_string(l.id) + " would have width < 1");
    }
  }
  for (std::size_t i = 0; i < out.macroblocks.size(); ++i) {
    out.macroblocks[i].base_width = scale(i, graph.macroblocks[i].base_width);
  }
  if (graph.classifier_width_coupling >= 0) {
    const auto idx = static_cast<std::size_t>(graph.classifier_width_coupling);
    const std::uint64_t before = static_cast<std::uint64_t>(graph.macroblocks[idx].base_width);
    const std::uint64_t after = static_cast<std::uint64_t>(out.macroblocks[idx].base_width);
    out.classifier_params = (2 * graph.classifier_params * after + before) / (2 * before);
  }
  validate(out);
  return out;
}

}  // namespace

ModelGraph scale_widths(const ModelGraph& graph, std::span<const double> factors) {
  if (factors.size() != graph.macroblocks.size()) {
    throw Error(ErrorCategory::kPlanMismatch, "got " + std::to_string(factors.size()) + " factors for " +
                                                  std::to_string(graph.macroblocks.size()) + " macroblocks");
  }
  for (double f : factors) {
    if (!std::isfinite(f) || f <= 0.0) {
      throw Error(ErrorCategory::kOutOfRange, "width factors must be finite and positive");
    }
  }
  return rescale(graph, [&](std::size_t mb, int width) { return scaled_width(factors[mb], width); });
}

ModelGraph set_macroblock_widths(const ModelGraph& graph, std::span<const int> widths) {
  if (widths.size() != graph.macroblocks.size()) {
    throw Error(ErrorCategory::kPlanMismatch, "got " + std::to_string(widths.size()) + " widths for " +
                                                  std::to_string(graph.macroblocks.size()) + " macroblocks");
  }
  for (int w : widths) {
    if (w < 1) throw Error(ErrorCategory::kOutOfRange, "macroblock widths must be >= 1");
  }
  return rescale(graph, [&](std::size_t mb, int width) {
    const auto num = static_cast<std::int64_t>(width) * widths[mb];
    const std::int64_t den = graph.macroblocks[mb].base_width;
    return static_cast<int>((num + den - 1) / den);
  });
}

ModelGraph apply_plan(const ModelGraph& graph, const ScalingPlan& plan) {
  if (plan.macroblocks.size() != graph.macroblocks.size()) {
    throw Error(ErrorCategory::kPlanMismatch, "plan has " + std::to_string(plan.macroblocks.size()) +
                                                  " macroblocks, model has " +
                                                  std::to_string(graph.macroblocks.size()));
  }
  for (std::size_t i = 0; i < plan.macroblocks.size(); ++i) {
    const MacroblockScaling& m = plan.macroblocks[i];
    if (m.macroblock_id != static_cast<int>(i) || m.original_width != graph.macroblocks[i].base_width) {
      throw Error(ErrorCategory::kPlanMismatch,
                  "plan entry " + std::to_string(i) + " does not match macroblock " + std::to_string(i));
    }
    if (sgn(m.beta_exact) <= 0 || m.beta_exact > 1) {
      throw Error(ErrorCategory::kOutOfRange, "plan entry " + std::to_string(i) + ": beta must lie in (0, 1]");
    }
  }
  return rescale(graph, [&](std::size_t mb, int width) {
    return ceil_scaled(plan.macroblocks[mb].beta_exact, width);
  });
}

}  // namespace mbs
