#pragma once

// Hand-built graphs and a seeded random-graph generator for tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mbs/model_ir.hpp"

namespace mbs::testing {

// Appends layers with "same" padding unless told otherwise; call finish() to
// infer macroblocks (or keep declared ones) and validate.
class GraphBuilder {
 public:
  GraphBuilder(std::string name, int resolution, int input_channels = 3);

  LayerId conv(LayerId input, int kernel, int stride, int out, ConvKind kind = ConvKind::kStandard,
               bool relu = true, std::vector<LayerId> residual = {});
  LayerId concat_conv(std::vector<LayerId> inputs, int kernel, int stride, int out);
  LayerId pool(LayerId input, int window, int stride, PoolKind kind = PoolKind::kMax);
  LayerId valid_conv(LayerId input, int kernel, int stride, int out);
  LayerId last() const;
  int width(LayerId id) const;
  int spatial(LayerId id) const;

  ModelGraph finish(std::uint64_t classifier_params = 0);

 private:
  Layer make(std::vector<LayerId> inputs, int kernel, int stride);
  ModelGraph graph_;
};

// Three macroblocks of four 3x3/1 convs (widths 32, 64, 128) separated by
// 2x2/2 max pools, L = 32. Conv RFs: 3 5 7 9 | 14 18 22 26 | 36 44 52 60.
ModelGraph three_stage_model();

// Chain of convs whose receptive fields are exactly `rfs` (strictly
// increasing, stride 1, odd kernels), all at spatial `resolution`.
ModelGraph chain_with_rfs(const std::vector<int>& rfs, int resolution);

struct RandomGraphOptions {
  int min_convs = 1;
  int max_convs = 12;
  int resolution = 16;
  int max_width = 6;
  bool residual_blocks = true;
  bool pools = true;
  bool even_pools = true;  // allow 2x2 windows
  bool relu_free_layers = true;
};

// Chains of convs, pools and identity-shortcut residual blocks with odd conv
// kernels; macroblocks are inferred from spatial sizes.
ModelGraph random_graph(std::mt19937_64& rng, const RandomGraphOptions& options, const std::string& name);

}  // namespace mbs::testing
