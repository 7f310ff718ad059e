#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "splitreloc/tensor.hpp"

namespace splitreloc {

enum class LayerKind {
  conv,
  batchnorm,
  relu,
  maxpool,
  residual_block,
  avgpool_global,
  fully_connected,
};

const char* layer_kind_name(LayerKind k);

struct ConvSpec {
  uint32_t in_ch, out_ch, kernel, stride, pad;
};

struct PoolSpec {
  uint32_t kernel, stride, pad;
};

// Basic two-conv residual block; `downsample` adds the 1x1 projection on
// the skip path (stride change or channel growth).
struct BlockSpec {
  uint32_t in_ch, out_ch, stride;
  bool downsample;
};

struct FcSpec {
  uint32_t in_units, out_units;
};

using LayerParams = std::variant<std::monostate, ConvSpec, PoolSpec, BlockSpec, FcSpec>;

struct LayerDescriptor {
  std::string name;
  LayerKind kind;
  LayerParams params;
  Shape in_shape;
  Shape out_shape;
  uint64_t flops = 0;
};

// Named boundary: layers [0, layer_index) run before the cut.
struct CutPoint {
  std::string name;
  size_t layer_index;
};

// The eleven cut names in layer order, matching the split benchmarks'
// column headers.
extern const std::array<const char*, 11> kCutNames;

// Pseudo-cut accepted by the executor as a range end: run through the heads
// and emit the 6-float pose vector.
inline constexpr std::string_view kEndCut = "end";

struct LayerGraph {
  uint32_t resolution = 0;
  uint32_t feature_dim = 0;
  Shape input_shape;
  std::vector<LayerDescriptor> layers;
  std::vector<CutPoint> cut_points;

  // Position of a named cut in cut_points; invalid names raise.
  size_t cut_pos(std::string_view name) const;
  // Activation shape crossing the given cut (the network input for `null`).
  Shape activation_shape_at(size_t cut_position) const;
  uint64_t total_flops() const;
  // Sum of layer FLOPs before the cut; 0 for `null`.
  uint64_t prefix_flops_at(size_t cut_position) const;
};

// ResNet34 backbone with a 6-DoF regression head: feature fc (512 ->
// feature_dim), relu, then parallel 3-unit translation and log-quaternion
// heads. Supported input resolutions: 56, 112, 224. feature_dim >= 8.
LayerGraph build_backbone(uint32_t input_resolution, uint32_t feature_dim);

// Bytes of the float32 activation crossing the named cut.
uint64_t cut_payload_bytes(const LayerGraph& graph, std::string_view cut_name);

struct FlopsReport {
  std::vector<std::pair<std::string, uint64_t>> per_layer;
  // prefix[i] = FLOPs before cut_points[i]; suffix = total - prefix.
  std::vector<uint64_t> prefix_at_cut;
  uint64_t total = 0;
};

FlopsReport count_flops(const LayerGraph& graph);

}  // namespace splitreloc
