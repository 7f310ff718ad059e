#include "splitreloc/weights.hpp"

#include "splitreloc/errors.hpp"
#include "splitreloc/rng.hpp"

namespace splitreloc {

std::vector<Shape> layer_param_shapes(const LayerDescriptor& layer) {
  switch (layer.kind) {
    case LayerKind::conv: {
      const auto& c = std::get<ConvSpec>(layer.params);
      return {Shape::of4(c.out_ch, c.in_ch, c.kernel, c.kernel)};
    }
    case LayerKind::batchnorm: {
      uint32_t ch = layer.in_shape.dims[0];
      return {Shape::flat(ch), Shape::flat(ch)};
    }
    case LayerKind::fully_connected: {
      const auto& f = std::get<FcSpec>(layer.params);
      return {{{f.out_units, f.in_units, 0, 0}, 2}, Shape::flat(f.out_units)};
    }
    case LayerKind::residual_block: {
      const auto& b = std::get<BlockSpec>(layer.params);
      std::vector<Shape> shapes = {
          Shape::of4(b.out_ch, b.in_ch, 3, 3),  Shape::flat(b.out_ch),
          Shape::flat(b.out_ch),                Shape::of4(b.out_ch, b.out_ch, 3, 3),
          Shape::flat(b.out_ch),                Shape::flat(b.out_ch),
      };
      if (b.downsample) {
        shapes.push_back(Shape::of4(b.out_ch, b.in_ch, 1, 1));
        shapes.push_back(Shape::flat(b.out_ch));
        shapes.push_back(Shape::flat(b.out_ch));
      }
      return shapes;
    }
    case LayerKind::relu:
    case LayerKind::maxpool:
    case LayerKind::avgpool_global:
      return {};
  }
  raise(Errc::invalid_argument, "unknown layer kind");
}

namespace {

// One 64-bit draw per element; the top 24 bits select a uniform point of
// [0,1) which is mapped affinely onto [-0.1, 0.1] in double precision, then
// rounded once to float32.
void fill_param(Tensor& t, uint64_t key) {
  SplitMix64 rng(key);
  for (float& v : t.data) {
    uint64_t r = rng.next_u64();
    double u = static_cast<double>(r >> 40) * (1.0 / 16777216.0);
    v = static_cast<float>(u * 0.2 - 0.1);
  }
}

}  // namespace

WeightSet init_weights(const LayerGraph& graph, uint64_t seed) {
  WeightSet w;
  w.seed = seed;
  w.params.resize(graph.layers.size());
  for (size_t li = 0; li < graph.layers.size(); ++li) {
    auto shapes = layer_param_shapes(graph.layers[li]);
    w.params[li].reserve(shapes.size());
    for (size_t pi = 0; pi < shapes.size(); ++pi) {
      Tensor t(shapes[pi]);
      fill_param(t, stream_key(seed, li, pi));
      w.params[li].push_back(std::move(t));
    }
  }
  return w;
}

}  // namespace splitreloc
