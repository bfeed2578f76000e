#include "mbs/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mbs/error.hpp"

namespace mbs {

namespace {

double unit_uniform(std::mt19937_64& engine) {
  // 53 random mantissa bits; identical on every standard library.
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

int pad_before(const Layer& layer) { return layer.padding == Padding::kSame ? (layer.kernel_size - 1) / 2 : 0; }

Tensor gather_input(const std::vector<Tensor>& outputs, const Tensor& image, const Layer& layer) {
  if (layer.inputs.size() == 1) {
    const LayerId src = layer.inputs.front();
    return src == kImageInput ? image : outputs[static_cast<std::size_t>(src)];
  }
  Tensor joined(layer.in_channels, layer.in_spatial);
  std::size_t offset = 0;
  for (LayerId src : layer.inputs) {
    const Tensor& part = src == kImageInput ? image : outputs[static_cast<std::size_t>(src)];
    std::copy(part.data.begin(), part.data.end(), joined.data.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += part.data.size();
  }
  return joined;
}

Tensor conv_forward(const Layer& layer, const ConvWeights& w, const Tensor& in) {
  const int k = layer.kernel_size;
  const int s = layer.stride;
  const int pad = pad_before(layer);
  const int n = layer.out_spatial;
  const int cin = layer.in_channels;
  Tensor out(layer.out_channels, n);
  for (int o = 0; o < layer.out_channels; ++o) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double acc = w.bias[static_cast<std::size_t>(o)];
        if (layer.conv_kind == ConvKind::kDepthwise) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y * s - pad + ky;
            if (iy < 0 || iy >= in.size) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x * s - pad + kx;
              if (ix < 0 || ix >= in.size) continue;
              acc += w.weights[(static_cast<std::size_t>(o) * k + ky) * k + kx] * in.at(o, iy, ix);
            }
          }
        } else {
          for (int i = 0; i < cin; ++i) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = y * s - pad + ky;
              if (iy < 0 || iy >= in.size) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = x * s - pad + kx;
                if (ix < 0 || ix >= in.size) continue;
                acc += w.weights[((static_cast<std::size_t>(o) * cin + i) * k + ky) * k + kx] * in.at(i, iy, ix);
              }
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

Tensor pool_forward(const Layer& layer, const Tensor& in) {
  const int k = layer.kernel_size;
  const int s = layer.stride;
  const int pad = pad_before(layer);
  const int n = layer.out_spatial;
  Tensor out(in.channels, n);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        int count = 0;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = y * s - pad + ky;
          if (iy < 0 || iy >= in.size) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = x * s - pad + kx;
            if (ix < 0 || ix >= in.size) continue;
            best = std::max(best, in.at(c, iy, ix));
            sum += in.at(c, iy, ix);
            ++count;
          }
        }
        if (count == 0) {
          out.at(c, y, x) = 0.0;
        } else {
          out.at(c, y, x) = layer.pool_kind == PoolKind::kMax ? best : sum / count;
        }
      }
    }
  }
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t weight_count(const Layer& layer) {
  if (!layer.is_conv()) return 0;
  const auto k2 = static_cast<std::size_t>(layer.kernel_size) * layer.kernel_size;
  if (layer.conv_kind == ConvKind::kDepthwise) return k2 * layer.out_channels;
  return k2 * layer.in_channels * layer.out_channels;
}

std::uint64_t activation_elements(const ModelGraph& graph) {
  std::uint64_t total = 0;
  for (const Layer& l : graph.layers) {
    total += static_cast<std::uint64_t>(l.out_spatial) * l.out_spatial * l.out_channels;
  }
  return total;
}

NetworkWeights make_random_weights(const ModelGraph& graph, std::uint64_t seed) {
  std::mt19937_64 engine(derive_seed(seed, 0));
  NetworkWeights net;
  net.layers.resize(graph.layers.size());
  for (const Layer& l : graph.layers) {
    if (!l.is_conv()) continue;
    const double fan_in = l.conv_kind == ConvKind::kDepthwise
                              ? static_cast<double>(l.kernel_size) * l.kernel_size
                              : static_cast<double>(l.kernel_size) * l.kernel_size * l.in_channels;
    const double bound = std::sqrt(6.0 / fan_in);
    ConvWeights& w = net.layers[static_cast<std::size_t>(l.id)];
    w.weights.resize(weight_count(l));
    for (double& v : w.weights) v = (2.0 * unit_uniform(engine) - 1.0) * bound;
    w.bias.assign(static_cast<std::size_t>(l.out_channels), 0.0);
  }
  return net;
}

Tensor make_synthetic_image(const ModelGraph& graph, std::uint64_t seed, std::size_t index) {
  std::mt19937_64 engine(derive_seed(seed, 1 + static_cast<std::uint64_t>(index)));
  Tensor image(graph.input_channels, graph.input_resolution);
  for (double& v : image.data) v = 2.0 * unit_uniform(engine) - 1.0;
  return image;
}

std::vector<LayerActivity> run_forward(const ModelGraph& graph, const NetworkWeights& weights,
                                       const Tensor& image) {
  if (image.channels != graph.input_channels || image.size != graph.input_resolution) {
    throw Error(ErrorCategory::kChain, "image shape does not match the model input");
  }
  if (weights.layers.size() != graph.layers.size()) {
    throw Error(ErrorCategory::kChain, "weights do not cover every layer");
  }
  std::vector<Tensor> outputs(graph.layers.size());
  std::vector<LayerActivity> activity;
  for (const Layer& layer : graph.layers) {
    const Tensor input = gather_input(outputs, image, layer);
    if (!layer.is_conv()) {
      outputs[static_cast<std::size_t>(layer.id)] = pool_forward(layer, input);
      continue;
    }
    const ConvWeights& w = weights.layers[static_cast<std::size_t>(layer.id)];
    if (w.weights.size() != weight_count(layer) || w.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
      throw Error(ErrorCategory::kChain, "weights of layer " + std::to_string(layer.id) + " have the wrong size");
    }
    Tensor out = conv_forward(layer, w, input);
    for (LayerId src : layer.residual) {
      const Tensor& add = outputs[static_cast<std::size_t>(src)];
      const int step = residual_step(add.size, out.size);
      for (int c = 0; c < add.channels; ++c) {
        for (int y = 0; y < out.size; ++y) {
          for (int x = 0; x < out.size; ++x) out.at(c, y, x) += add.at(c, y * step, x * step);
        }
      }
    }
    LayerActivity a;
    a.layer_id = layer.id;
    a.elements = out.data.size();
    if (layer.has_relu) {
      for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    }
    a.nonzero = static_cast<std::uint64_t>(
        std::count_if(out.data.begin(), out.data.end(), [](double v) { return v != 0.0; }));
    activity.push_back(a);
    outputs[static_cast<std::size_t>(layer.id)] = std::move(out);
  }
  return activity;
}

}  // namespace mbs
