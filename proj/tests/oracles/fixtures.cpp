#include "fixtures.hpp"

#include <stdexcept>

namespace mbs::testing {

GraphBuilder::GraphBuilder(std::string name, int resolution, int input_channels) {
  graph_.name = std::move(name);
  graph_.input_resolution = resolution;
  graph_.input_channels = input_channels;
}

LayerId GraphBuilder::last() const {
  return graph_.layers.empty() ? kImageInput : static_cast<LayerId>(graph_.layers.size()) - 1;
}

int GraphBuilder::width(LayerId id) const {
  return id == kImageInput ? graph_.input_channels : graph_.layer(id).out_channels;
}

int GraphBuilder::spatial(LayerId id) const {
  return id == kImageInput ? graph_.input_resolution : graph_.layer(id).out_spatial;
}

Layer GraphBuilder::make(std::vector<LayerId> inputs, int kernel, int stride) {
  Layer l;
  l.id = static_cast<LayerId>(graph_.layers.size());
  l.kernel_size = kernel;
  l.stride = stride;
  l.in_spatial = spatial(inputs.front());
  l.out_spatial = (l.in_spatial + stride - 1) / stride;
  l.in_channels = 0;
  for (LayerId src : inputs) l.in_channels += width(src);
  l.inputs = std::move(inputs);
  return l;
}

LayerId GraphBuilder::conv(LayerId input, int kernel, int stride, int out, ConvKind kind, bool relu,
                           std::vector<LayerId> residual) {
  Layer l = make({input}, kernel, stride);
  l.conv_kind = kind;
  l.out_channels = kind == ConvKind::kDepthwise ? l.in_channels : out;
  l.has_relu = relu;
  l.residual = std::move(residual);
  graph_.layers.push_back(std::move(l));
  return last();
}

LayerId GraphBuilder::concat_conv(std::vector<LayerId> inputs, int kernel, int stride, int out) {
  Layer l = make(std::move(inputs), kernel, stride);
  l.out_channels = out;
  graph_.layers.push_back(std::move(l));
  return last();
}

LayerId GraphBuilder::pool(LayerId input, int window, int stride, PoolKind kind) {
  Layer l = make({input}, window, stride);
  l.kind = LayerKind::kPool;
  l.pool_kind = kind;
  l.out_channels = l.in_channels;
  l.has_relu = false;
  graph_.layers.push_back(std::move(l));
  return last();
}

LayerId GraphBuilder::valid_conv(LayerId input, int kernel, int stride, int out) {
  Layer l = make({input}, kernel, stride);
  l.padding = Padding::kValid;
  l.out_spatial = (l.in_spatial - kernel) / stride + 1;
  l.out_channels = out;
  graph_.layers.push_back(std::move(l));
  return last();
}

ModelGraph GraphBuilder::finish(std::uint64_t classifier_params) {
  ModelGraph g = infer_macroblocks(graph_);
  g.classifier_params = classifier_params;
  g.classifier_width_coupling = static_cast<int>(g.macroblocks.size()) - 1;
  validate(g);
  return g;
}

ModelGraph three_stage_model() {
  GraphBuilder b("three-stage", 32);
  const int widths[3] = {32, 64, 128};
  for (int m = 0; m < 3; ++m) {
    if (m > 0) b.pool(b.last(), 2, 2);
    for (int j = 0; j < 4; ++j) b.conv(b.last(), 3, 1, widths[m]);
  }
  return b.finish(128 * 10 + 10);
}

ModelGraph chain_with_rfs(const std::vector<int>& rfs, int resolution) {
  GraphBuilder b("rf-chain", resolution);
  int rf = 1;
  for (int target : rfs) {
    const int kernel = target - rf + 1;
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("chain_with_rfs: rf steps must be even");
    b.conv(b.last(), kernel, 1, 4);
    rf = target;
  }
  return b.finish(0);
}

ModelGraph random_graph(std::mt19937_64& rng, const RandomGraphOptions& o, const std::string& name) {
  const auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const auto chance = [&](double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; };
  const int odd_kernels[3] = {1, 3, 5};

  GraphBuilder b(name, o.resolution, pick(1, 3));
  const int target = pick(o.min_convs, o.max_convs);
  int convs = 0;
  while (convs < target) {
    const LayerId x = b.last();
    const int s = b.spatial(x);
    const int stride = s >= 2 && chance(0.25) ? 2 : 1;
    if (o.pools && s >= 2 && x != kImageInput && chance(0.15)) {
      const int window = o.even_pools ? pick(2, 3) : 3;
      b.pool(x, window, 2, chance(0.5) ? PoolKind::kMax : PoolKind::kAvg);
      continue;
    }
    if (o.residual_blocks && target - convs >= 2 && x != kImageInput && chance(0.3)) {
      // A strided block's zero-padded shortcut crosses into the next
      // macroblock; doubling the width keeps it valid for any beta > 1/2.
      const int out = std::max((stride == 2 ? 2 : 1) * b.width(x), pick(1, o.max_width));
      const LayerId c1 = b.conv(x, odd_kernels[pick(0, 2)], stride, pick(1, o.max_width));
      b.conv(c1, odd_kernels[pick(0, 1)], 1, out, ConvKind::kStandard, true, {x});
      convs += 2;
      continue;
    }
    const bool relu = !o.relu_free_layers || !chance(0.1);
    b.conv(x, odd_kernels[pick(0, 2)], stride, pick(1, o.max_width), ConvKind::kStandard, relu);
    ++convs;
  }
  return b.finish(static_cast<std::uint64_t>(b.width(b.last())) * 10 + 10);
}

}  // namespace mbs::testing
