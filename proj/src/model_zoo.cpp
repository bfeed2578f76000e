#include "mbs/model_zoo.hpp"

#include <algorithm>
#include <array>

#include "mbs/error.hpp"

namespace mbs {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct ConvArgs {
  int kernel = 3;
  int stride = 1;
  int out = 1;
  ConvKind kind = ConvKind::kStandard;
  bool relu = true;
  bool scalable = true;
  std::vector<LayerId> residual = {};
};

// Appends layers in pipeline order and records macroblock membership.
class Builder {
 public:
  Builder(std::string name, int resolution) {
    graph_.name = std::move(name);
    graph_.input_resolution = resolution;
    graph_.input_channels = 3;
  }

  int width(LayerId id) const {
    return id == kImageInput ? graph_.input_channels : graph_.layer(id).out_channels;
  }
  int spatial(LayerId id) const {
    return id == kImageInput ? graph_.input_resolution : graph_.layer(id).out_spatial;
  }

  LayerId conv(std::vector<LayerId> inputs, const ConvArgs& a) {
    Layer l = base_layer(inputs, a.kernel, a.stride);
    l.kind = LayerKind::kConv;
    l.conv_kind = a.kind;
    l.out_channels = a.kind == ConvKind::kDepthwise ? l.in_channels : a.out;
    l.has_relu = a.relu;
    l.scalable = a.scalable && a.kind != ConvKind::kDepthwise;
    l.residual = a.residual;
    l.macroblock_id = current_mb_;
    graph_.macroblocks.back().layer_ids.push_back(l.id);
    graph_.layers.push_back(std::move(l));
    return graph_.layers.back().id;
  }

  LayerId conv(LayerId input, const ConvArgs& a) { return conv(std::vector<LayerId>{input}, a); }

  LayerId pool(LayerId input, PoolKind kind, int window, int stride) {
    Layer l = base_layer({input}, window, stride);
    l.kind = LayerKind::kPool;
    l.pool_kind = kind;
    l.out_channels = l.in_channels;
    l.has_relu = false;
    graph_.layers.push_back(std::move(l));
    return graph_.layers.back().id;
  }

  // Starts a macroblock; layers added afterwards belong to it.
  void macroblock(int base_width, bool custom) {
    Macroblock mb;
    mb.id = static_cast<int>(graph_.macroblocks.size());
    mb.base_width = base_width;
    mb.custom = custom;
    graph_.macroblocks.push_back(std::move(mb));
    current_mb_ = graph_.macroblocks.back().id;
  }

  ModelGraph finish(std::uint64_t classifier_params) {
    for (Macroblock& mb : graph_.macroblocks) mb.out_spatial = graph_.layer(mb.layer_ids.back()).out_spatial;
    graph_.classifier_params = classifier_params;
    graph_.classifier_width_coupling = static_cast<int>(graph_.macroblocks.size()) - 1;
    validate(graph_);
    return std::move(graph_);
  }

 private:
  Layer base_layer(const std::vector<LayerId>& inputs, int kernel, int stride) {
    Layer l;
    l.id = static_cast<LayerId>(graph_.layers.size());
    l.kernel_size = kernel;
    l.stride = stride;
    l.padding = Padding::kSame;
    l.inputs = inputs;
    l.in_spatial = spatial(inputs.front());
    l.out_spatial = ceil_div(l.in_spatial, stride);
    l.in_channels = 0;
    for (LayerId src : inputs) l.in_channels += width(src);
    return l;
  }

  ModelGraph graph_;
  int current_mb_ = -1;
};

std::uint64_t fc_params(int features, int classes) {
  return static_cast<std::uint64_t>(features) * classes + static_cast<std::uint64_t>(classes);
}

ModelGraph resnet_cifar(int depth, int resolution) {
  const int n = (depth - 2) / 6;
  Builder b("resnet-cifar-" + std::to_string(depth), resolution);
  const std::array<int, 3> widths = {16, 32, 64};
  b.macroblock(widths[0], false);
  LayerId x = b.conv(kImageInput, {.kernel = 3, .stride = 1, .out = widths[0]});
  for (int stage = 0; stage < 3; ++stage) {
    if (stage > 0) b.macroblock(widths[stage], false);
    for (int block = 0; block < n; ++block) {
      const int stride = stage > 0 && block == 0 ? 2 : 1;
      const LayerId c1 = b.conv(x, {.kernel = 3, .stride = stride, .out = widths[stage]});
      // Identity shortcut; across stages it subsamples and zero-pads channels.
      x = b.conv(c1, {.kernel = 3, .stride = 1, .out = widths[stage], .residual = {x}});
    }
  }
  return b.finish(fc_params(widths[2], 10));
}

// 7x7/2 conv and 3x3/2 max pool; both belong to the first macroblock.
LayerId imagenet_stem(Builder& b, int width) {
  const LayerId stem = b.conv(kImageInput, {.kernel = 7, .stride = 2, .out = width});
  return b.pool(stem, PoolKind::kMax, 3, 2);
}

ModelGraph resnet_basic(int depth, int resolution) {
  const std::array<int, 4> blocks = depth == 18 ? std::array<int, 4>{2, 2, 2, 2} : std::array<int, 4>{3, 4, 6, 3};
  const std::array<int, 4> widths = {64, 128, 256, 512};
  Builder b("resnet-" + std::to_string(depth), resolution);
  b.macroblock(widths[0], true);
  LayerId x = imagenet_stem(b, widths[0]);
  for (int stage = 0; stage < 4; ++stage) {
    if (stage > 0) b.macroblock(widths[stage], true);
    const int w = widths[stage];
    for (int block = 0; block < blocks[stage]; ++block) {
      const int stride = stage > 0 && block == 0 ? 2 : 1;
      LayerId shortcut = x;
      const LayerId c1 = b.conv(x, {.kernel = 3, .stride = stride, .out = w});
      if (stride != 1 || b.width(x) != w) {
        shortcut = b.conv(x, {.kernel = 1, .stride = stride, .out = w, .relu = false});
      }
      x = b.conv(c1, {.kernel = 3, .stride = 1, .out = w, .residual = {shortcut}});
    }
  }
  return b.finish(fc_params(widths[3], 1000));
}

ModelGraph resnet_bottleneck(int depth, int resolution) {
  const std::array<int, 4> blocks = {3, 4, 23, 3};
  const std::array<int, 4> widths = {64, 128, 256, 512};
  constexpr int kExpansion = 4;
  Builder b("resnet-" + std::to_string(depth), resolution);
  b.macroblock(widths[0], true);
  LayerId x = imagenet_stem(b, widths[0]);
  for (int stage = 0; stage < 4; ++stage) {
    if (stage > 0) b.macroblock(widths[stage], true);
    const int w = widths[stage];
    for (int block = 0; block < blocks[stage]; ++block) {
      const int stride = stage > 0 && block == 0 ? 2 : 1;
      LayerId shortcut = x;
      const LayerId c1 = b.conv(x, {.kernel = 1, .stride = 1, .out = w});
      const LayerId c2 = b.conv(c1, {.kernel = 3, .stride = stride, .out = w});
      if (stride != 1 || b.width(x) != w * kExpansion) {
        shortcut = b.conv(x, {.kernel = 1, .stride = stride, .out = w * kExpansion, .relu = false});
      }
      x = b.conv(c2, {.kernel = 1, .stride = 1, .out = w * kExpansion, .residual = {shortcut}});
    }
  }
  return b.finish(fc_params(widths[3] * kExpansion, 1000));
}

// Macroblocks group layers by output width: each starts at the pointwise conv
// that introduces a width and ends with the depthwise conv that leaves it.
ModelGraph mobilenet_v1(int resolution) {
  Builder b("mobilenet-v1-" + std::to_string(resolution), resolution);
  struct Pair {
    int stride;  // of the depthwise conv
    int out;     // of the pointwise conv
  };
  const std::array<Pair, 13> pairs = {{{1, 64},
                                       {2, 128},
                                       {1, 128},
                                       {2, 256},
                                       {1, 256},
                                       {2, 512},
                                       {1, 512},
                                       {1, 512},
                                       {1, 512},
                                       {1, 512},
                                       {1, 512},
                                       {2, 1024},
                                       {1, 1024}}};
  b.macroblock(32, true);
  LayerId x = b.conv(kImageInput, {.kernel = 3, .stride = 2, .out = 32});
  for (const Pair& p : pairs) {
    x = b.conv(x, {.kernel = 3, .stride = p.stride, .kind = ConvKind::kDepthwise});
    if (p.out != b.width(x)) b.macroblock(p.out, true);
    x = b.conv(x, {.kernel = 1, .stride = 1, .out = p.out, .kind = ConvKind::kPointwise});
  }
  return b.finish(fc_params(1024, 1000));
}

// DenseNet-BC: bottleneck 1x1 (4k) then 3x3 (k) per dense layer, outputs
// concatenated; transitions halve the width with a 1x1 conv and 2x2 average
// pool. Macroblock i is dense block i plus its transition; the stem is fixed.
ModelGraph densenet_bc(int depth, int resolution) {
  constexpr int kGrowth = 32;
  constexpr int kBottleneck = 4 * kGrowth;
  const std::array<int, 4> blocks = {6, 12, 24, 16};
  Builder b("densenet-bc-" + std::to_string(depth), resolution);
  b.macroblock(kGrowth, true);
  const LayerId stem = b.conv(kImageInput, {.kernel = 7, .stride = 2, .out = 2 * kGrowth, .scalable = false});
  LayerId x = b.pool(stem, PoolKind::kMax, 3, 2);
  for (int stage = 0; stage < 4; ++stage) {
    if (stage > 0) b.macroblock(kGrowth, true);
    std::vector<LayerId> features = {x};
    for (int layer = 0; layer < blocks[stage]; ++layer) {
      const LayerId neck = b.conv(features, {.kernel = 1, .stride = 1, .out = kBottleneck});
      features.push_back(b.conv(neck, {.kernel = 3, .stride = 1, .out = kGrowth}));
    }
    int width = 0;
    for (LayerId f : features) width += b.width(f);
    if (stage < 3) {
      const LayerId trans = b.conv(features, {.kernel = 1, .stride = 1, .out = width / 2});
      x = b.pool(trans, PoolKind::kAvg, 2, 2);
    } else {
      return b.finish(fc_params(width, 1000));
    }
  }
  return {};
}

[[noreturn]] void unsupported(const ZooSpec& spec, const std::string& why) {
  throw Error(ErrorCategory::kOutOfRange, std::string(to_string(spec.family)) + " depth " +
                                              std::to_string(spec.depth) + ": " + why);
}

}  // namespace

std::string_view to_string(ZooFamily family) {
  switch (family) {
    case ZooFamily::kResNetCifar:
      return "resnet-cifar";
    case ZooFamily::kResNetImageNetBasic:
      return "resnet-imagenet-basic";
    case ZooFamily::kResNetImageNetBottleneck:
      return "resnet-imagenet-bottleneck";
    case ZooFamily::kMobileNetV1:
      return "mobilenet-v1";
    case ZooFamily::kDenseNetBC:
      return "densenet-bc";
  }
  return "unknown";
}

ZooFamily parse_family(std::string_view name) {
  for (ZooFamily f : {ZooFamily::kResNetCifar, ZooFamily::kResNetImageNetBasic, ZooFamily::kResNetImageNetBottleneck,
                      ZooFamily::kMobileNetV1, ZooFamily::kDenseNetBC}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCategory::kOutOfRange, "unknown model family '" + std::string(name) + "'");
}

ModelGraph generate(const ZooSpec& spec) {
  const int resolution = spec.input_resolution.value_or(spec.family == ZooFamily::kResNetCifar ? 32 : 224);
  switch (spec.family) {
    case ZooFamily::kResNetCifar: {
      constexpr std::array<int, 6> depths = {20, 32, 44, 56, 110, 1202};
      if (std::find(depths.begin(), depths.end(), spec.depth) == depths.end()) {
        unsupported(spec, "supported depths are 20, 32, 44, 56, 110, 1202");
      }
      if (resolution != 32) unsupported(spec, "input resolution must be 32");
      return resnet_cifar(spec.depth, resolution);
    }
    case ZooFamily::kResNetImageNetBasic:
      if (spec.depth != 18 && spec.depth != 34) unsupported(spec, "supported depths are 18, 34");
      if (resolution != 224) unsupported(spec, "input resolution must be 224");
      return resnet_basic(spec.depth, resolution);
    case ZooFamily::kResNetImageNetBottleneck:
      if (spec.depth != 101) unsupported(spec, "supported depth is 101");
      if (resolution != 224) unsupported(spec, "input resolution must be 224");
      return resnet_bottleneck(spec.depth, resolution);
    case ZooFamily::kMobileNetV1:
      if (resolution != 224 && resolution != 192) unsupported(spec, "input resolution must be 224 or 192");
      return mobilenet_v1(resolution);
    case ZooFamily::kDenseNetBC:
      if (spec.depth != 121) unsupported(spec, "supported depth is 121");
      if (resolution != 224) unsupported(spec, "input resolution must be 224");
      return densenet_bc(spec.depth, resolution);
  }
  unsupported(spec, "unknown family");
}

std::vector<ZooSpec> supported_specs() {
  std::vector<ZooSpec> specs;
  for (int d : {20, 32, 44, 56, 110, 1202}) specs.push_back({ZooFamily::kResNetCifar, d, std::nullopt});
  for (int d : {18, 34}) specs.push_back({ZooFamily::kResNetImageNetBasic, d, std::nullopt});
  specs.push_back({ZooFamily::kResNetImageNetBottleneck, 101, std::nullopt});
  specs.push_back({ZooFamily::kMobileNetV1, 0, 224});
  specs.push_back({ZooFamily::kMobileNetV1, 0, 192});
  specs.push_back({ZooFamily::kDenseNetBC, 121, std::nullopt});
  return specs;
}

}  // namespace mbs
