#pragma once

// Geometric receptive fields and the base/enhancement split.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mbs/model_ir.hpp"

namespace mbs {

struct RfEntry {
  LayerId layer_id = 0;
  std::int64_t rf = 1;    // side length in input pixels
  std::int64_t jump = 1;  // input pixels between adjacent output neurons
};

// One entry per layer (conv and pool), indexed by layer id.
using RfTable = std::vector<RfEntry>;

struct RfLayerClass {
  LayerId layer_id = 0;
  std::int64_t rf = 1;
  std::int64_t jump = 1;
  int macroblock_id = -1;
  bool is_base = true;
};

struct RFProfile {
  std::vector<RfLayerClass> layers;  // conv layers in pipeline order
  // Smallest conv RF strictly above z; empty when no layer exceeds z.
  std::optional<std::int64_t> boundary;
  double z = 0.0;
  double k_factor = 0.0;

  bool is_base(LayerId id) const;
};

// rf_out = rf_in + (kernel - 1) * jump_in, jump_out = jump_in * stride,
// starting from rf = jump = 1 at the image. Concatenated inputs and residual
// sources contribute the max over branches.
RfTable compute_rf(const ModelGraph& graph);

// Boundary = min{RF(c) : RF(c) > z}; a conv layer is base iff RF <= boundary.
RFProfile classify_layers(const ModelGraph& graph, const RfTable& table, double z);

// Aligned text and CSV (layer_id,rf,jump,macroblock,is_base) renderings.
std::string rf_profile_text(const RFProfile& profile);
std::string rf_profile_csv(const RFProfile& profile);

}  // namespace mbs
