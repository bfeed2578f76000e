#include "mbs/rf_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mbs/error.hpp"

namespace mbs {

bool RFProfile::is_base(LayerId id) const {
  for (const RfLayerClass& l : layers) {
    if (l.layer_id == id) return l.is_base;
  }
  return false;
}

RfTable compute_rf(const ModelGraph& graph) {
  RfTable table(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const Layer& layer = graph.layers[i];
    std::int64_t rf_in = 0;
    std::int64_t jump_in = 0;
    for (LayerId src : layer.inputs) {
      if (src == kImageInput) {
        rf_in = std::max<std::int64_t>(rf_in, 1);
        jump_in = std::max<std::int64_t>(jump_in, 1);
        continue;
      }
      if (src < 0 || src >= layer.id) {
        throw Error(ErrorCategory::kCycle, "layer " + std::to_string(layer.id) + " reads layer " +
                                               std::to_string(src) + ", which does not precede it");
      }
      rf_in = std::max(rf_in, table[static_cast<std::size_t>(src)].rf);
      jump_in = std::max(jump_in, table[static_cast<std::size_t>(src)].jump);
    }
    RfEntry& entry = table[i];
    entry.layer_id = layer.id;
    entry.rf = rf_in + (layer.kernel_size - 1) * jump_in;
    entry.jump = jump_in * layer.stride;
    for (LayerId src : layer.residual) {
      if (src < 0 || src >= layer.id) {
        throw Error(ErrorCategory::kCycle, "layer " + std::to_string(layer.id) + " adds layer " +
                                               std::to_string(src) + ", which does not precede it");
      }
      const RfEntry& from = table[static_cast<std::size_t>(src)];
      const int step = residual_step(graph.layer(src).out_spatial, layer.out_spatial);
      entry.rf = std::max(entry.rf, from.rf);
      entry.jump = std::max(entry.jump, from.jump * std::max(step, 1));
    }
  }
  return table;
}

RFProfile classify_layers(const ModelGraph& graph, const RfTable& table, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCategory::kOutOfRange, "z must be a positive number of pixels");
  }
  if (table.size() != graph.layers.size()) {
    throw Error(ErrorCategory::kOutOfRange, "rf table does not cover every layer");
  }
  RFProfile profile;
  profile.z = z;
  profile.k_factor = z / graph.input_resolution;
  for (const Layer& l : graph.layers) {
    if (!l.is_conv()) continue;
    const RfEntry& e = table[static_cast<std::size_t>(l.id)];
    if (static_cast<double>(e.rf) > z && (!profile.boundary || e.rf < *profile.boundary)) {
      profile.boundary = e.rf;
    }
    profile.layers.push_back({l.id, e.rf, e.jump, l.macroblock_id, true});
  }
  for (RfLayerClass& c : profile.layers) {
    c.is_base = !profile.boundary || c.rf <= *profile.boundary;
  }
  return profile;
}

std::string rf_profile_text(const RFProfile& profile) {
  std::ostringstream out;
  out << "z = " << profile.z << " px (k = " << profile.k_factor << "), boundary = ";
  if (profile.boundary) {
    out << *profile.boundary << " px\n";
  } else {
    out << "unbounded\n";
  }
  out << std::setw(8) << "layer" << std::setw(10) << "rf" << std::setw(8) << "jump" << std::setw(12)
      << "macroblock" << "  class\n";
  for (const RfLayerClass& c : profile.layers) {
    out << std::setw(8) << c.layer_id << std::setw(10) << c.rf << std::setw(8) << c.jump << std::setw(12)
        << c.macroblock_id << "  " << (c.is_base ? "base" : "enhancement") << "\n";
  }
  return out.str();
}

std::string rf_profile_csv(const RFProfile& profile) {
  std::ostringstream out;
  out << "layer_id,rf,jump,macroblock,is_base\r\n";
  for (const RfLayerClass& c : profile.layers) {
    out << c.layer_id << ',' << c.rf << ',' << c.jump << ',' << c.macroblock_id << ','
        << (c.is_base ? "true" : "false") << "\r\n";
  }
  return out.str();
}

}  // namespace mbs
