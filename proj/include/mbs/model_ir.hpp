#pragma once

// Architecture intermediate representation for macroblock scaling.
//
// A ModelGraph is an ordered list of conv and pool layers. Edges are listed
// on the consumer: `inputs` are concatenated along channels, `residual`
// sources are added to a conv's output before its ReLU. Only widths, spatial
// sizes and kernel geometry are modeled; no weights are stored.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mbs {

using LayerId = int;

// Producer id that stands for the input image.
inline constexpr LayerId kImageInput = -1;

inline constexpr std::string_view kIrVersion = "mbs-ir/1";

enum class LayerKind { kConv, kPool };
enum class ConvKind { kStandard, kDepthwise, kPointwise };
enum class PoolKind { kMax, kAvg };

// kSame: out = ceil(in / stride), window i starts at i*stride - (k-1)/2.
// kValid: out_spatial is taken from the document, window i starts at i*stride.
enum class Padding { kSame, kValid };

struct Layer {
  LayerId id = 0;
  LayerKind kind = LayerKind::kConv;
  int kernel_size = 1;  // pool window for pool layers
  int stride = 1;
  Padding padding = Padding::kSame;
  int in_spatial = 1;
  int out_spatial = 1;
  std::vector<LayerId> inputs;
  std::vector<LayerId> residual;

  // Pools carry their producer's width; it is resolved during validation and
  // not serialized.
  int in_channels = 1;
  int out_channels = 1;

  ConvKind conv_kind = ConvKind::kStandard;
  bool has_relu = true;
  int macroblock_id = -1;
  bool scalable = true;

  PoolKind pool_kind = PoolKind::kMax;

  bool is_conv() const { return kind == LayerKind::kConv; }
  bool operator==(const Layer&) const = default;
};

struct Macroblock {
  int id = 0;
  std::vector<LayerId> layer_ids;
  int out_spatial = 1;
  int base_width = 1;
  // Declared segment whose members may span several spatial sizes.
  bool custom = false;

  bool operator==(const Macroblock&) const = default;
};

struct ModelGraph {
  std::string name;
  int input_resolution = 1;
  int input_channels = 3;
  // Count 2 * out_channels batch-norm parameters per conv layer.
  bool batch_norm = true;
  std::vector<Layer> layers;
  std::vector<Macroblock> macroblocks;
  // Opaque parameter count of the non-conv head, scaled linearly with the
  // base width of macroblock `classifier_width_coupling` (-1: not coupled).
  std::uint64_t classifier_params = 0;
  int classifier_width_coupling = -1;

  const Layer& layer(LayerId id) const { return layers.at(static_cast<std::size_t>(id)); }
  std::vector<LayerId> conv_ids() const;
  std::size_t conv_count() const;

  bool operator==(const ModelGraph&) const = default;
};

std::string_view to_string(ConvKind kind);
std::string_view to_string(PoolKind kind);
std::string_view to_string(Padding padding);

// Parses and validates an "mbs-ir/1" document. Macroblocks are inferred when
// the document declares none.
ModelGraph parse_model(std::string_view document);

// Pretty JSON in the same schema parse_model accepts.
std::string serialize_model(const ModelGraph& graph);

// Compact JSON with sorted keys; input to the model fingerprint.
std::string canonical_model(const ModelGraph& graph);

// "sha256:<hex>" of canonical_model(graph).
std::string model_fingerprint(const ModelGraph& graph);

// Checks every structural invariant and resolves pool widths. Throws
// mbs::Error naming the offending field, layer pair or macroblock.
void validate(ModelGraph& graph);

// Groups conv layers with equal out_spatial into macroblocks in pipeline
// order. Graphs that already declare macroblocks are returned unchanged.
ModelGraph infer_macroblocks(ModelGraph graph);

// Sampling step that maps a residual source of side `from_spatial` onto
// `to_spatial` (every step-th pixel, as in zero-padding shortcuts); 0 if none.
int residual_step(int from_spatial, int to_spatial);

// ceil(factor * width), snapping products within 1e-9 of an integer so that
// decimal factors such as 0.6 * 5 give 3 rather than 4.
int scaled_width(double factor, int width);

// Multiplies every scalable width of macroblock i by factors[i] (ceil) and
// propagates the new widths along inputs; depthwise layers follow their
// producer. Macroblock base widths and the coupled classifier scale too.
ModelGraph scale_widths(const ModelGraph& graph, std::span<const double> factors);

// Rescales macroblock i from base_width to widths[i]; every scalable layer of
// the macroblock gets ceil(out * widths[i] / base_width), exactly.
ModelGraph set_macroblock_widths(const ModelGraph& graph, std::span<const int> widths);

struct ScalingPlan;

// Compact graph for a planner result: scale_widths with the plan's betas.
ModelGraph apply_plan(const ModelGraph& graph, const ScalingPlan& plan);

}  // namespace mbs
