#pragma once

// Generators for the benchmark architectures as validated ModelGraphs.
//
// Conventions shared by every family: "same" padding, batch norm after every
// conv, ReLU after every conv except projection shortcuts and the last conv
// of a residual block (which applies ReLU after the addition), and an opaque
// fully-connected head coupled to the last macroblock's width.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mbs/model_ir.hpp"

namespace mbs {

enum class ZooFamily {
  kResNetCifar,              // depths 20, 32, 44, 56, 110, 1202; 10 classes
  kResNetImageNetBasic,      // depths 18, 34; 1000 classes
  kResNetImageNetBottleneck, // depth 101; 1000 classes
  kMobileNetV1,              // L in {224, 192}; 1000 classes
  kDenseNetBC,               // depth 121, growth 32; 1000 classes
};

struct ZooSpec {
  ZooFamily family = ZooFamily::kResNetCifar;
  int depth = 0;  // ignored for mobilenet-v1
  // Defaults: 32 for resnet-cifar, 224 otherwise.
  std::optional<int> input_resolution;
};

std::string_view to_string(ZooFamily family);
ZooFamily parse_family(std::string_view name);

// Supported (family, depth, L) combinations; throws kOutOfRange otherwise.
ModelGraph generate(const ZooSpec& spec);

// Every supported combination, at its default resolution (plus L = 192 for
// mobilenet-v1).
std::vector<ZooSpec> supported_specs();

}  // namespace mbs
