#include <cstdint>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "splitreloc/graph.hpp"

using namespace splitreloc;
using test_helpers::thrown_code;

namespace {

// Brute-force shape recomputation, independent of the builder's bookkeeping:
// walks the layer parameter list and applies the floor stride arithmetic.
std::vector<Shape> recompute_shapes(const LayerGraph& g) {
  auto conv_dim = [](uint32_t in, uint32_t k, uint32_t s, uint32_t p) {
    return (in + 2 * p - k) / s + 1;
  };
  std::vector<Shape> out;
  Shape cur = g.input_shape;
  for (const auto& l : g.layers) {
    switch (l.kind) {
      case LayerKind::conv: {
        auto c = std::get<ConvSpec>(l.params);
        cur = Shape::chw(c.out_ch, conv_dim(cur.dims[1], c.kernel, c.stride, c.pad),
                         conv_dim(cur.dims[2], c.kernel, c.stride, c.pad));
        break;
      }
      case LayerKind::maxpool: {
        auto p = std::get<PoolSpec>(l.params);
        cur = Shape::chw(cur.dims[0], conv_dim(cur.dims[1], p.kernel, p.stride, p.pad),
                         conv_dim(cur.dims[2], p.kernel, p.stride, p.pad));
        break;
      }
      case LayerKind::residual_block: {
        auto b = std::get<BlockSpec>(l.params);
        cur = Shape::chw(b.out_ch, conv_dim(cur.dims[1], 3, b.stride, 1),
                         conv_dim(cur.dims[2], 3, b.stride, 1));
        break;
      }
      case LayerKind::avgpool_global:
        cur = Shape::flat(cur.dims[0]);
        break;
      case LayerKind::fully_connected:
        cur = Shape::flat(std::get<FcSpec>(l.params).out_units);
        break;
      case LayerKind::batchnorm:
      case LayerKind::relu:
        break;
    }
    // the two parallel heads read the feature vector, not each other
    if (l.name == "fc_xyz" || l.name == "fc_logq") {
      out.push_back(Shape::flat(3));
      cur = Shape::flat(g.feature_dim);
      continue;
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace

TEST_CASE("cut names match the split benchmark column headers in order") {
  LayerGraph g = build_backbone(224, 2048);
  REQUIRE(g.cut_points.size() == 11);
  const char* expected[] = {"null",   "conv1",  "bn1",    "relu",
                            "maxpool", "layer1", "layer2", "layer3",
                            "layer4", "avgpool", "fc"};
  for (size_t i = 0; i < 11; ++i) {
    CHECK(g.cut_points[i].name == expected[i]);
    CHECK(g.cut_points[i].name == kCutNames[i]);
  }
  CHECK(g.cut_points[0].layer_index == 0);
  for (size_t i = 1; i < 11; ++i) {
    CHECK(g.cut_points[i].layer_index > g.cut_points[i - 1].layer_index);
  }
}

TEST_CASE("backbone shapes at 224 match the reference stride arithmetic") {
  LayerGraph g = build_backbone(224, 2048);
  CHECK(g.layers[0].name == "conv1");
  CHECK(g.layers[0].out_shape == Shape::chw(64, 112, 112));
  CHECK(g.activation_shape_at(g.cut_pos("maxpool")) == Shape::chw(64, 56, 56));
  CHECK(g.activation_shape_at(g.cut_pos("layer4")) == Shape::chw(512, 7, 7));
  CHECK(g.activation_shape_at(g.cut_pos("avgpool")) == Shape::flat(512));
  CHECK(g.activation_shape_at(g.cut_pos("fc")) == Shape::flat(2048));
  CHECK(g.layers.back().name == "fc_logq");
  CHECK(g.layers.back().out_shape == Shape::flat(3));
}

TEST_CASE("backbone shapes at reduced resolution") {
  LayerGraph g = build_backbone(56, 64);
  CHECK(g.layers[0].out_shape == Shape::chw(64, 28, 28));
  CHECK(g.activation_shape_at(g.cut_pos("fc")) == Shape::flat(64));
}

TEST_CASE("shape inference matches a brute-force per-layer recomputation") {
  for (uint32_t res : {56u, 112u, 224u}) {
    LayerGraph g = build_backbone(res, 256);
    std::vector<Shape> expected = recompute_shapes(g);
    REQUIRE(expected.size() == g.layers.size());
    for (size_t i = 0; i < g.layers.size(); ++i) {
      CHECK(g.layers[i].out_shape == expected[i]);
    }
  }
}

TEST_CASE("cut payload bytes") {
  LayerGraph g = build_backbone(224, 2048);
  CHECK(cut_payload_bytes(g, "null") == 602112);       // 3*224*224*4
  CHECK(cut_payload_bytes(g, "conv1") == 3211264);     // 64*112*112*4
  CHECK(cut_payload_bytes(g, "bn1") == 3211264);
  CHECK(cut_payload_bytes(g, "relu") == 3211264);
  CHECK(cut_payload_bytes(g, "maxpool") == 802816);
  CHECK(cut_payload_bytes(g, "avgpool") == 2048);      // 512*4
  CHECK(cut_payload_bytes(g, "fc") == 8192);           // 2048*4
  // the early-cut penalty: 16/3 exactly
  CHECK(cut_payload_bytes(g, "conv1") * 3 == cut_payload_bytes(g, "null") * 16);
  CHECK(thrown_code([&] { cut_payload_bytes(g, "blah"); }) == Errc::invalid_argument);
}

TEST_CASE("flop counts follow the stated conventions") {
  LayerGraph g = build_backbone(224, 2048);
  // conv1: 2 * 64 * 3 * 7 * 7 * 112 * 112
  CHECK(g.layers[0].flops == 236027904ull);
  // bn1: 2 ops per element
  CHECK(g.layers[1].flops == 2ull * 64 * 112 * 112);
  // relu: 1 op per element
  CHECK(g.layers[2].flops == 64ull * 112 * 112);
  // maxpool 3x3: 9 per output element
  CHECK(g.layers[3].flops == 9ull * 64 * 56 * 56);
  for (const auto& l : g.layers) {
    if (l.name == "fc_xyz" || l.name == "fc_logq") {
      CHECK(l.flops == 2ull * 2048 * 3);
    }
    if (l.name == "fc_feat") CHECK(l.flops == 2ull * 512 * 2048);
    CHECK(l.flops > 0);
  }
  double total = static_cast<double>(g.total_flops());
  CHECK(total > 7.3e9 * 0.95);
  CHECK(total < 7.3e9 * 1.05);
}

TEST_CASE("flop prefix sums strictly increase across cuts") {
  LayerGraph g = build_backbone(224, 2048);
  FlopsReport r = count_flops(g);
  REQUIRE(r.prefix_at_cut.size() == 11);
  CHECK(r.prefix_at_cut[0] == 0);
  for (size_t i = 1; i < r.prefix_at_cut.size(); ++i) {
    CHECK(r.prefix_at_cut[i] > r.prefix_at_cut[i - 1]);
  }
  CHECK(r.total == g.total_flops());
  uint64_t sum = 0;
  for (const auto& [name, flops] : r.per_layer) sum += flops;
  CHECK(sum == r.total);
}

TEST_CASE("unsupported configurations are rejected") {
  CHECK(thrown_code([] { build_backbone(100, 2048); }) == Errc::invalid_argument);
  CHECK(thrown_code([] { build_backbone(224, 4); }) == Errc::invalid_argument);
}
