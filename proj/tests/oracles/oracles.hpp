#pragma once

// Independent reference implementations used to check the library.

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "mbs/activation_stats.hpp"
#include "mbs/inference.hpp"
#include "mbs/model_ir.hpp"

namespace mbs::testing {

// --- Receptive fields by impulse response ---------------------------------
//
// Replays the graph's 1-D geometry on a wide domain, fires one input pixel at
// a time through ones-kernels and records which pixels reach the centre
// neuron of each layer (and its right neighbour, for the jump).

struct ImpulseRf {
  std::int64_t rf = 0;
  std::int64_t jump = 0;
};

std::vector<ImpulseRf> impulse_rf(const ModelGraph& graph, int domain = 512);

// --- Activation statistics by direct convolution --------------------------
//
// Zero-pads every input explicitly and convolves with flat index arithmetic;
// returns p per conv layer in pipeline order.

std::vector<double> direct_conv_p(const ModelGraph& graph, const NetworkWeights& weights,
                                  const std::vector<Tensor>& images);

// --- The planner as one nested loop over macroblocks and convs ------------

struct ReferencePlan {
  std::vector<mpq_class> e;  // per conv, pipeline order
  std::vector<mpq_class> e_total;
  std::vector<mpq_class> e_base;
  std::vector<mpq_class> r;
  std::vector<mpq_class> beta;
  std::vector<int> widths;
  std::optional<std::int64_t> boundary;
};

// p is indexed by conv position j; z in pixels.
ReferencePlan reference_plan(const ModelGraph& graph, const std::vector<double>& p, double z);

// Nearest double to q by exact comparison with both neighbours of get_d().
double nearest_double(const mpq_class& q);

}  // namespace mbs::testing
