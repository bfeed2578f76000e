#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mbs/error.hpp"
#include "mbs/model_ir.hpp"
#include "mbs/planner.hpp"

using namespace mbs;
using mbs::testing::GraphBuilder;

namespace {

const char* kMinimal = R"({
  "version": "mbs-ir/1",
  "name": "minimal",
  "input_resolution": 32,
  "classifier_params": 0,
  "layers": [
    {"id": 0, "type": "conv", "kernel_size": 3, "stride": 1, "in_channels": 3, "out_channels": 16,
     "in_spatial": 32, "out_spatial": 32}
  ]
})";

ErrorCategory category_of(const std::string& doc) {
  try {
    parse_model(doc);
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("document was accepted");
  return ErrorCategory::kIo;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("minimal one-conv document") {
  const ModelGraph g = parse_model(kMinimal);
  CHECK(g.conv_count() == 1);
  CHECK(g.macroblocks.size() == 1);
  CHECK(g.macroblocks[0].base_width == 16);
  CHECK(g.macroblocks[0].out_spatial == 32);
  CHECK(g.classifier_width_coupling == 0);
  CHECK(g.layers[0].inputs == std::vector<LayerId>{kImageInput});
}

TEST_CASE("three-stage net has three macroblocks at 32, 16, 8") {
  const ModelGraph g = parse_model(serialize_model(mbs::testing::three_stage_model()));
  REQUIRE(g.macroblocks.size() == 3);
  CHECK(g.macroblocks[0].out_spatial == 32);
  CHECK(g.macroblocks[1].out_spatial == 16);
  CHECK(g.macroblocks[2].out_spatial == 8);
  for (const Macroblock& m : g.macroblocks) CHECK(m.layer_ids.size() == 4);
}

TEST_CASE("spatial mismatch names the layer pair") {
  const std::string doc = replace(kMinimal, R"("out_spatial": 32}
  ])", R"("out_spatial": 32},
    {"id": 1, "type": "conv", "kernel_size": 3, "stride": 1, "in_channels": 16, "out_channels": 16,
     "in_spatial": 16, "out_spatial": 16}
  ])");
  try {
    parse_model(doc);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kChain);
    CHECK(std::string(e.what()).find("layer 0 -> layer 1") != std::string::npos);
  }
}

TEST_CASE("schema violations name the field") {
  try {
    parse_model(replace(kMinimal, R"("kernel_size": 3)", R"("kernel_size": "3")"));
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kSchema);
    CHECK(std::string(e.what()).find("kernel_size") != std::string::npos);
  }
  CHECK(category_of(replace(kMinimal, R"("name": "minimal",)", R"("name": "minimal", "colour": 1,)")) ==
        ErrorCategory::kSchema);
  CHECK(category_of(replace(kMinimal, "mbs-ir/1", "mbs-ir/2")) == ErrorCategory::kSchema);
  CHECK(category_of(replace(kMinimal, R"("stride": 1,)", R"("stride": 1, "dilation": 2,)")) ==
        ErrorCategory::kSchema);
  CHECK(category_of(replace(kMinimal, R"("stride": 1,)", R"("stride": 0,)")) == ErrorCategory::kSchema);
  CHECK(category_of("{not json") == ErrorCategory::kSchema);
}

TEST_CASE("minor version bumps are accepted") {
  CHECK_NOTHROW(parse_model(replace(kMinimal, "mbs-ir/1", "mbs-ir/1.3")));
}

TEST_CASE("same padding must satisfy ceil(in / stride)") {
  CHECK(category_of(replace(kMinimal, R"("stride": 1, "in_channels": 3, "out_channels": 16,
     "in_spatial": 32, "out_spatial": 32)",
                            R"("stride": 2, "in_channels": 3, "out_channels": 16,
     "in_spatial": 32, "out_spatial": 17)")) == ErrorCategory::kChain);
  CHECK_NOTHROW(parse_model(replace(kMinimal, R"("stride": 1,)", R"("stride": 1, "padding": "valid",)")));
}

TEST_CASE("depthwise layers keep their width") {
  CHECK(category_of(replace(kMinimal, R"("stride": 1,)", R"("stride": 1, "conv_kind": "depthwise",)")) ==
        ErrorCategory::kSchema);
}

TEST_CASE("forward edges are cycles") {
  CHECK(category_of(replace(kMinimal, R"("stride": 1,)", R"("stride": 1, "inputs": [0],)")) ==
        ErrorCategory::kCycle);
}

TEST_CASE("infer_macroblocks groups equal out_spatial") {
  GraphBuilder b("six", 32);
  b.conv(b.last(), 3, 1, 8);
  b.conv(b.last(), 3, 1, 8);
  b.conv(b.last(), 3, 2, 16);
  b.conv(b.last(), 3, 1, 16);
  b.conv(b.last(), 3, 2, 32);
  b.conv(b.last(), 3, 1, 32);
  const ModelGraph g = b.finish();
  REQUIRE(g.macroblocks.size() == 3);
  CHECK(g.macroblocks[0].layer_ids == std::vector<LayerId>{0, 1});
  CHECK(g.macroblocks[1].layer_ids == std::vector<LayerId>{2, 3});
  CHECK(g.macroblocks[2].layer_ids == std::vector<LayerId>{4, 5});
  CHECK(g.macroblocks[1].out_spatial == 16);
  CHECK(infer_macroblocks(g) == g);
}

TEST_CASE("infer_macroblocks rejects growing spatial sizes") {
  GraphBuilder b("grow", 8);
  b.conv(kImageInput, 3, 2, 4);
  b.conv(kImageInput, 3, 1, 4);
  try {
    b.finish();
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kPartition);
  }
}

TEST_CASE("macroblock annotations must cover all or none") {
  const std::string two = replace(kMinimal, R"("out_spatial": 32}
  ])", R"("out_spatial": 32, "macroblock_id": 0},
    {"id": 1, "type": "conv", "kernel_size": 3, "stride": 1, "in_channels": 16, "out_channels": 16,
     "in_spatial": 32, "out_spatial": 32}
  ])");
  CHECK(category_of(two) == ErrorCategory::kPartition);
}

TEST_CASE("declared macroblocks must partition the conv layers") {
  const std::string doc = replace(kMinimal, R"("classifier_params": 0,)",
                                  R"("classifier_params": 0,
  "macroblocks": [{"id": 0, "layer_ids": [], "out_spatial": 32, "base_width": 16}],)");
  CHECK(category_of(doc) == ErrorCategory::kPartition);
}

TEST_CASE("serialization round-trips") {
  for (const ModelGraph& g : {mbs::testing::three_stage_model(), parse_model(kMinimal)}) {
    const ModelGraph again = parse_model(serialize_model(g));
    CHECK(again == g);
    CHECK(serialize_model(again) == serialize_model(g));
    CHECK(model_fingerprint(again) == model_fingerprint(g));
  }
}

TEST_CASE("fingerprint depends on content") {
  ModelGraph g = mbs::testing::three_stage_model();
  const std::string before = model_fingerprint(g);
  CHECK(before.rfind("sha256:", 0) == 0);
  CHECK(before.size() == 7 + 64);
  g.layers[0].out_channels = 33;
  g.layers[1].in_channels = 33;
  CHECK(model_fingerprint(g) != before);
}

TEST_CASE("scaled_width") {
  CHECK(scaled_width(0.7, 10) == 7);
  CHECK(scaled_width(0.8, 512) == 410);
  CHECK(scaled_width(0.5, 64) == 32);
  CHECK(scaled_width(0.6, 5) == 3);
  CHECK(scaled_width(1.0, 17) == 17);
}

TEST_CASE("residual_step") {
  CHECK(residual_step(32, 32) == 1);
  CHECK(residual_step(32, 16) == 2);
  CHECK(residual_step(7, 4) == 2);
  CHECK(residual_step(8, 3) == 3);
  CHECK(residual_step(8, 16) == 0);
}

TEST_CASE("apply_plan scales by beta with ceil and propagates widths") {
  GraphBuilder b("two", 16);
  b.conv(b.last(), 3, 1, 10);
  b.conv(b.last(), 3, 2, 20);
  b.conv(b.last(), 1, 1, 20);
  const ModelGraph g = b.finish(20 * 10 + 10);

  ScalingPlan plan;
  for (int i = 0; i < 2; ++i) {
    MacroblockScaling s;
    s.macroblock_id = i;
    s.original_width = g.macroblocks[static_cast<std::size_t>(i)].base_width;
    plan.macroblocks.push_back(s);
  }
  SUBCASE("identity") { CHECK(apply_plan(g, plan) == g); }
  SUBCASE("0.7 of 10 is 7") {
    plan.macroblocks[0].beta_exact = Rational(7, 10);
    plan.macroblocks[0].beta = 0.7;
    const ModelGraph out = apply_plan(g, plan);
    CHECK(out.layers[0].out_channels == 7);
    CHECK(out.layers[1].in_channels == 7);
    CHECK(out.layers[1].out_channels == 20);
    CHECK(out.macroblocks[0].base_width == 7);
  }
  SUBCASE("exact beta drives the rounding") {
    plan.macroblocks[1].beta_exact = Rational(3, 4);
    plan.macroblocks[1].beta = 0.75;
    const ModelGraph out = apply_plan(g, plan);
    CHECK(out.layers[1].out_channels == 15);
    CHECK(out.layers[2].in_channels == 15);
    CHECK(out.layers[2].out_channels == 15);
    CHECK(out.classifier_params == (210 * 15 + 10) / 20);
  }
  SUBCASE("mismatches") {
    plan.macroblocks.pop_back();
    CHECK_THROWS_AS(apply_plan(g, plan), Error);
  }
  SUBCASE("wrong original width") {
    plan.macroblocks[1].original_width = 21;
    try {
      apply_plan(g, plan);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::kPlanMismatch);
    }
  }
}

TEST_CASE("non-scalable layers keep their width") {
  GraphBuilder b("fixed", 8);
  b.conv(b.last(), 3, 1, 8);
  b.conv(b.last(), 3, 1, 8);
  ModelGraph g = b.finish();
  g.layers[1].scalable = false;
  const std::vector<double> half = {0.5};
  const ModelGraph out = scale_widths(g, half);
  CHECK(out.layers[0].out_channels == 4);
  CHECK(out.layers[1].in_channels == 4);
  CHECK(out.layers[1].out_channels == 8);
}

TEST_CASE("depthwise widths follow their producer") {
  GraphBuilder b("dw", 8);
  b.conv(b.last(), 3, 1, 10);
  b.conv(b.last(), 3, 1, 0, ConvKind::kDepthwise);
  b.conv(b.last(), 1, 1, 10, ConvKind::kPointwise);
  const ModelGraph g = b.finish();
  const std::vector<double> f = {0.55};
  const ModelGraph out = scale_widths(g, f);
  CHECK(out.layers[0].out_channels == 6);
  CHECK(out.layers[1].in_channels == 6);
  CHECK(out.layers[1].out_channels == 6);
  CHECK(out.layers[2].out_channels == 6);
}

TEST_CASE("set_macroblock_widths targets exact widths") {
  GraphBuilder b("bneck", 8);
  b.conv(b.last(), 1, 1, 256);
  b.conv(b.last(), 3, 1, 256);
  b.conv(b.last(), 1, 1, 1024);
  const ModelGraph g = b.finish();
  const std::vector<int> w = {174};
  const ModelGraph out = set_macroblock_widths(g, w);
  CHECK(out.layers[0].out_channels == 174);
  CHECK(out.layers[2].out_channels == 696);
}

TEST_CASE("error categories have stable names") {
  CHECK(category_name(ErrorCategory::kFingerprint) == "fingerprint-mismatch");
  CHECK(category_name(ErrorCategory::kChain) == "chain-inconsistency");
  CHECK(std::string(Error(ErrorCategory::kIo, "x").what()) == "io: x");
}
