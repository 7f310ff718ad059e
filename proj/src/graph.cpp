#include "splitreloc/graph.hpp"

#include <array>

#include "splitreloc/errors.hpp"

namespace splitreloc {

const std::array<const char*, 11> kCutNames = {
    "null",   "conv1",  "bn1",    "relu",    "maxpool", "layer1",
    "layer2", "layer3", "layer4", "avgpool", "fc"};

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::residual_block: return "residual_block";
    case LayerKind::avgpool_global: return "avgpool_global";
    case LayerKind::fully_connected: return "fully_connected";
  }
  return "unknown";
}

std::string Shape::to_string() const {
  std::string s;
  for (uint32_t i = 0; i < rank; ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

namespace {

uint32_t conv_out_dim(uint32_t in, uint32_t kernel, uint32_t stride, uint32_t pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

uint64_t conv_flops(const ConvSpec& c, const Shape& out) {
  return 2ull * c.out_ch * c.in_ch * c.kernel * c.kernel * out.dims[1] * out.dims[2];
}

LayerDescriptor make_conv(std::string name, ConvSpec c, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::conv;
  d.params = c;
  d.in_shape = in;
  d.out_shape = Shape::chw(c.out_ch, conv_out_dim(in.dims[1], c.kernel, c.stride, c.pad),
                           conv_out_dim(in.dims[2], c.kernel, c.stride, c.pad));
  d.flops = conv_flops(c, d.out_shape);
  return d;
}

LayerDescriptor make_bn(std::string name, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::batchnorm;
  d.in_shape = in;
  d.out_shape = in;
  d.flops = 2ull * in.elems();
  return d;
}

LayerDescriptor make_relu(std::string name, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::relu;
  d.in_shape = in;
  d.out_shape = in;
  d.flops = in.elems();
  return d;
}

LayerDescriptor make_maxpool(std::string name, PoolSpec p, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::maxpool;
  d.params = p;
  d.in_shape = in;
  d.out_shape = Shape::chw(in.dims[0], conv_out_dim(in.dims[1], p.kernel, p.stride, p.pad),
                           conv_out_dim(in.dims[2], p.kernel, p.stride, p.pad));
  d.flops = static_cast<uint64_t>(p.kernel) * p.kernel * d.out_shape.elems();
  return d;
}

LayerDescriptor make_block(std::string name, BlockSpec b, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::residual_block;
  d.params = b;
  d.in_shape = in;
  uint32_t h = conv_out_dim(in.dims[1], 3, b.stride, 1);
  uint32_t w = conv_out_dim(in.dims[2], 3, b.stride, 1);
  d.out_shape = Shape::chw(b.out_ch, h, w);
  uint64_t body_elems = d.out_shape.elems();
  ConvSpec c1{b.in_ch, b.out_ch, 3, b.stride, 1};
  ConvSpec c2{b.out_ch, b.out_ch, 3, 1, 1};
  uint64_t f = conv_flops(c1, d.out_shape) + 2 * body_elems + body_elems  // conv1,bn1,relu
               + conv_flops(c2, d.out_shape) + 2 * body_elems;            // conv2,bn2
  if (b.downsample) {
    ConvSpec cd{b.in_ch, b.out_ch, 1, b.stride, 0};
    f += conv_flops(cd, d.out_shape) + 2 * body_elems;  // projection conv + bn
  }
  f += body_elems;  // skip add
  f += body_elems;  // final relu
  d.flops = f;
  return d;
}

LayerDescriptor make_avgpool(std::string name, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::avgpool_global;
  d.in_shape = in;
  d.out_shape = Shape::flat(in.dims[0]);
  // per-channel running sum plus one divide
  d.flops = in.elems() + in.dims[0];
  return d;
}

LayerDescriptor make_fc(std::string name, FcSpec f, Shape in) {
  LayerDescriptor d;
  d.name = std::move(name);
  d.kind = LayerKind::fully_connected;
  d.params = f;
  d.in_shape = in;
  d.out_shape = Shape::flat(f.out_units);
  d.flops = 2ull * f.in_units * f.out_units;
  return d;
}

}  // namespace

LayerGraph build_backbone(uint32_t input_resolution, uint32_t feature_dim) {
  if (input_resolution != 56 && input_resolution != 112 && input_resolution != 224) {
    raise(Errc::invalid_argument,
          "unsupported input resolution " + std::to_string(input_resolution) +
              " (expected 56, 112 or 224)");
  }
  if (feature_dim < 8) {
    raise(Errc::invalid_argument, "feature_dim must be >= 8");
  }

  LayerGraph g;
  g.resolution = input_resolution;
  g.feature_dim = feature_dim;
  g.input_shape = Shape::chw(3, input_resolution, input_resolution);

  Shape cur = g.input_shape;
  auto push = [&](LayerDescriptor d) {
    cur = d.out_shape;
    g.layers.push_back(std::move(d));
  };

  push(make_conv("conv1", ConvSpec{3, 64, 7, 2, 3}, cur));
  push(make_bn("bn1", cur));
  push(make_relu("relu", cur));
  push(make_maxpool("maxpool", PoolSpec{3, 2, 1}, cur));

  const struct {
    const char* stage;
    uint32_t blocks, out_ch, stride;
  } stages[] = {
      {"layer1", 3, 64, 1},
      {"layer2", 4, 128, 2},
      {"layer3", 6, 256, 2},
      {"layer4", 3, 512, 2},
  };
  for (const auto& st : stages) {
    for (uint32_t b = 0; b < st.blocks; ++b) {
      uint32_t in_ch = cur.dims[0];
      uint32_t stride = (b == 0) ? st.stride : 1;
      bool down = (b == 0) && (stride != 1 || in_ch != st.out_ch);
      std::string name = std::string(st.stage) + "_block" + std::to_string(b);
      push(make_block(std::move(name), BlockSpec{in_ch, st.out_ch, stride, down}, cur));
    }
  }

  push(make_avgpool("avgpool", cur));
  push(make_fc("fc_feat", FcSpec{cur.dims[0], feature_dim}, cur));
  push(make_relu("relu_feat", cur));

  // Parallel heads, both reading the feature vector. The executor treats
  // everything past the `fc` cut as one tail segment.
  Shape feat = cur;
  g.layers.push_back(make_fc("fc_xyz", FcSpec{feature_dim, 3}, feat));
  g.layers.push_back(make_fc("fc_logq", FcSpec{feature_dim, 3}, feat));

  auto index_of = [&](std::string_view name) -> size_t {
    for (size_t i = 0; i < g.layers.size(); ++i) {
      if (g.layers[i].name == name) return i;
    }
    raise(Errc::invalid_argument, "layer not found: " + std::string(name));
  };
  g.cut_points = {
      {"null", 0},
      {"conv1", index_of("conv1") + 1},
      {"bn1", index_of("bn1") + 1},
      {"relu", index_of("relu") + 1},
      {"maxpool", index_of("maxpool") + 1},
      {"layer1", index_of("layer1_block2") + 1},
      {"layer2", index_of("layer2_block3") + 1},
      {"layer3", index_of("layer3_block5") + 1},
      {"layer4", index_of("layer4_block2") + 1},
      {"avgpool", index_of("avgpool") + 1},
      {"fc", index_of("fc_feat") + 1},
  };
  return g;
}

size_t LayerGraph::cut_pos(std::string_view name) const {
  for (size_t i = 0; i < cut_points.size(); ++i) {
    if (cut_points[i].name == name) return i;
  }
  raise(Errc::invalid_argument, "unknown cut: " + std::string(name));
}

Shape LayerGraph::activation_shape_at(size_t cut_position) const {
  const CutPoint& c = cut_points.at(cut_position);
  if (c.layer_index == 0) return input_shape;
  return layers[c.layer_index - 1].out_shape;
}

uint64_t LayerGraph::total_flops() const {
  uint64_t t = 0;
  for (const auto& l : layers) t += l.flops;
  return t;
}

uint64_t LayerGraph::prefix_flops_at(size_t cut_position) const {
  const CutPoint& c = cut_points.at(cut_position);
  uint64_t t = 0;
  for (size_t i = 0; i < c.layer_index; ++i) t += layers[i].flops;
  return t;
}

uint64_t cut_payload_bytes(const LayerGraph& graph, std::string_view cut_name) {
  return graph.activation_shape_at(graph.cut_pos(cut_name)).elems() * 4;
}

FlopsReport count_flops(const LayerGraph& graph) {
  FlopsReport r;
  r.per_layer.reserve(graph.layers.size());
  for (const auto& l : graph.layers) {
    r.per_layer.emplace_back(l.name, l.flops);
    r.total += l.flops;
  }
  r.prefix_at_cut.reserve(graph.cut_points.size());
  for (size_t i = 0; i < graph.cut_points.size(); ++i) {
    r.prefix_at_cut.push_back(graph.prefix_flops_at(i));
  }
  return r;
}

}  // namespace splitreloc
