#pragma once

#include <cstdint>
#include <vector>

#include "splitreloc/graph.hpp"
#include "splitreloc/tensor.hpp"

namespace splitreloc {

// Seeded synthetic parameters. Fully determined by (graph, seed): the same
// pair yields identical bytes on any machine.
struct WeightSet {
  uint64_t seed = 0;
  // params[layer_index][param_index], in the order given by
  // layer_param_shapes().
  std::vector<std::vector<Tensor>> params;
};

// Parameter tensor shapes of one layer, in stream order:
//   conv            -> [weight(out,in,k,k)]
//   batchnorm       -> [scale(C), shift(C)]   (inference-folded affine)
//   fully_connected -> [weight(out,in), bias(out)]
//   residual_block  -> [conv1.w, bn1.scale, bn1.shift, conv2.w, bn2.scale,
//                       bn2.shift] + [proj.w, proj_bn.scale, proj_bn.shift]
//                      when the block downsamples
//   relu/maxpool/avgpool_global -> []
std::vector<Shape> layer_param_shapes(const LayerDescriptor& layer);

// Fills every parameter tensor from a splitmix64 stream keyed by
// (seed, layer_index, param_index); each element maps the top 24 bits of one
// 64-bit draw uniformly onto [-0.1, 0.1]. The exact algorithm is documented
// in the README so independent implementations can match byte-for-byte.
WeightSet init_weights(const LayerGraph& graph, uint64_t seed);

}  // namespace splitreloc
