#pragma once

// Dense CPU forward pass used to measure ReLU sparsity at desk scale.

#include <cstdint>
#include <span>
#include <vector>

#include "mbs/model_ir.hpp"

namespace mbs {

// Square CHW feature map.
struct Tensor {
  int channels = 0;
  int size = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int channels_, int size_)
      : channels(channels_), size(size_), data(static_cast<std::size_t>(channels_) * size_ * size_, 0.0) {}

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * size + y) * size + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * size + y) * size + x]; }
};

// Weights of one conv layer. Layouts:
//   standard  [out][in][ky][kx]
//   depthwise [channel][ky][kx]
//   pointwise [out][in]
struct ConvWeights {
  std::vector<double> weights;
  std::vector<double> bias;  // one per output channel
};

// Indexed by layer id; pool entries stay empty.
struct NetworkWeights {
  std::vector<ConvWeights> layers;
};

struct LayerActivity {
  LayerId layer_id = 0;
  std::uint64_t nonzero = 0;   // NZ of the layer's (post-ReLU) output
  std::uint64_t elements = 0;  // out_spatial^2 * out_channels
};

std::size_t weight_count(const Layer& layer);

// Activation elements one image produces across all layers.
std::uint64_t activation_elements(const ModelGraph& graph);

// Zero-mean uniform weights in +-sqrt(6 / fan_in), zero bias.
NetworkWeights make_random_weights(const ModelGraph& graph, std::uint64_t seed);

// Uniform [-1, 1) pixels for image `index`; independent of other indices.
Tensor make_synthetic_image(const ModelGraph& graph, std::uint64_t seed, std::size_t index);

// Runs one image through the network and counts exact non-zeros of every
// conv output. Result has one entry per conv layer in pipeline order.
std::vector<LayerActivity> run_forward(const ModelGraph& graph, const NetworkWeights& weights,
                                       const Tensor& image);

// Deterministic 64-bit stream derivation (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mbs
