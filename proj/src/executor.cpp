#include "splitreloc/executor.hpp"

#include <cmath>
#include <cstring>

#include "splitreloc/checksum.hpp"
#include "splitreloc/errors.hpp"

namespace splitreloc {

Tensor preprocess(const Frame& frame, uint32_t res) {
  if (frame.height < res || frame.width < res) {
    raise(Errc::invalid_argument,
          "frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
              " smaller than input resolution " + std::to_string(res));
  }
  if (frame.rgb.size() != static_cast<size_t>(frame.height) * frame.width * 3) {
    raise(Errc::invalid_argument, "frame byte count does not match dimensions");
  }
  uint32_t oy = (frame.height - res) / 2;
  uint32_t ox = (frame.width - res) / 2;
  Tensor out(Shape::chw(3, res, res));
  for (uint32_t c = 0; c < 3; ++c) {
    float* plane = out.data.data() + static_cast<size_t>(c) * res * res;
    for (uint32_t y = 0; y < res; ++y) {
      const uint8_t* row = frame.rgb.data() +
                           (static_cast<size_t>(y + oy) * frame.width + ox) * 3 + c;
      for (uint32_t x = 0; x < res; ++x) {
        plane[static_cast<size_t>(y) * res + x] =
            static_cast<float>(row[x * 3]) / 255.0f - 0.5f;
      }
    }
  }
  return out;
}

namespace {

// Zero-padded copy of one (C,H,W) activation. The pad ring participates in
// the documented accumulation order like any other input position.
std::vector<float> pad_activation(const float* src, uint32_t c, uint32_t h,
                                  uint32_t w, uint32_t pad) {
  uint32_t hp = h + 2 * pad;
  uint32_t wp = w + 2 * pad;
  std::vector<float> out(static_cast<size_t>(c) * hp * wp, 0.0f);
  for (uint32_t ic = 0; ic < c; ++ic) {
    for (uint32_t y = 0; y < h; ++y) {
      std::memcpy(out.data() + (static_cast<size_t>(ic) * hp + y + pad) * wp + pad,
                  src + (static_cast<size_t>(ic) * h + y) * w, w * sizeof(float));
    }
  }
  return out;
}

// Direct convolution. Each output element accumulates its terms in
// (in-channel, kernel-row, kernel-col) order; the inner loop walks output
// columns so the per-element order is preserved while staying vectorizable.
void conv2d(const float* in, Shape in_shape, const Tensor& weight, uint32_t stride,
            uint32_t pad, float* out, Shape out_shape) {
  uint32_t cin = in_shape.dims[0], hin = in_shape.dims[1], win = in_shape.dims[2];
  uint32_t cout = out_shape.dims[0], hout = out_shape.dims[1], wout = out_shape.dims[2];
  uint32_t k = weight.shape.dims[2];
  uint32_t hp = hin + 2 * pad, wp = win + 2 * pad;
  std::vector<float> padded = pad_activation(in, cin, hin, win, pad);

  size_t plane_out = static_cast<size_t>(hout) * wout;
  for (uint32_t oc = 0; oc < cout; ++oc) {
    float* oplane = out + oc * plane_out;
    std::memset(oplane, 0, plane_out * sizeof(float));
    const float* wbase = weight.data.data() + static_cast<size_t>(oc) * cin * k * k;
    for (uint32_t ic = 0; ic < cin; ++ic) {
      const float* iplane = padded.data() + static_cast<size_t>(ic) * hp * wp;
      for (uint32_t ky = 0; ky < k; ++ky) {
        for (uint32_t kx = 0; kx < k; ++kx) {
          float wv = wbase[(static_cast<size_t>(ic) * k + ky) * k + kx];
          for (uint32_t oy = 0; oy < hout; ++oy) {
            const float* irow = iplane + (static_cast<size_t>(oy) * stride + ky) * wp + kx;
            float* orow = oplane + static_cast<size_t>(oy) * wout;
            if (stride == 1) {
              for (uint32_t ox = 0; ox < wout; ++ox) orow[ox] += wv * irow[ox];
            } else {
              for (uint32_t ox = 0; ox < wout; ++ox) orow[ox] += wv * irow[ox * stride];
            }
          }
        }
      }
    }
  }
}

// Inference-folded batchnorm: per-channel y = scale*x + shift.
void batchnorm(float* data, uint32_t c, size_t plane, const Tensor& scale,
               const Tensor& shift) {
  for (uint32_t ic = 0; ic < c; ++ic) {
    float a = scale.data[ic];
    float b = shift.data[ic];
    float* p = data + ic * plane;
    for (size_t i = 0; i < plane; ++i) p[i] = a * p[i] + b;
  }
}

void relu_inplace(float* data, size_t n) {
  for (size_t i = 0; i < n; ++i) data[i] = data[i] > 0.0f ? data[i] : 0.0f;
}

// Max over the window, padded positions excluded.
void maxpool2d(const float* in, Shape in_shape, const PoolSpec& p, float* out,
               Shape out_shape) {
  uint32_t c = in_shape.dims[0], hin = in_shape.dims[1], win = in_shape.dims[2];
  uint32_t hout = out_shape.dims[1], wout = out_shape.dims[2];
  for (uint32_t ic = 0; ic < c; ++ic) {
    const float* iplane = in + static_cast<size_t>(ic) * hin * win;
    float* oplane = out + static_cast<size_t>(ic) * hout * wout;
    for (uint32_t oy = 0; oy < hout; ++oy) {
      for (uint32_t ox = 0; ox < wout; ++ox) {
        int64_t y0 = static_cast<int64_t>(oy) * p.stride - p.pad;
        int64_t x0 = static_cast<int64_t>(ox) * p.stride - p.pad;
        float m = -HUGE_VALF;
        for (uint32_t ky = 0; ky < p.kernel; ++ky) {
          int64_t y = y0 + ky;
          if (y < 0 || y >= hin) continue;
          for (uint32_t kx = 0; kx < p.kernel; ++kx) {
            int64_t x = x0 + kx;
            if (x < 0 || x >= win) continue;
            float v = iplane[y * win + x];
            if (v > m) m = v;
          }
        }
        oplane[static_cast<size_t>(oy) * wout + ox] = m;
      }
    }
  }
}

void avgpool_global(const float* in, Shape in_shape, float* out) {
  uint32_t c = in_shape.dims[0];
  size_t plane = static_cast<size_t>(in_shape.dims[1]) * in_shape.dims[2];
  float inv_count = static_cast<float>(plane);
  for (uint32_t ic = 0; ic < c; ++ic) {
    const float* p = in + ic * plane;
    float acc = 0.0f;
    for (size_t i = 0; i < plane; ++i) acc += p[i];
    out[ic] = acc / inv_count;
  }
}

// Per output unit: start from the bias, add products in ascending input
// index.
void fully_connected(const float* in, const Tensor& weight, const Tensor& bias,
                     float* out) {
  uint32_t nout = weight.shape.dims[0];
  uint32_t nin = weight.shape.dims[1];
  for (uint32_t o = 0; o < nout; ++o) {
    const float* wrow = weight.data.data() + static_cast<size_t>(o) * nin;
    float acc = bias.data[o];
    for (uint32_t i = 0; i < nin; ++i) acc += wrow[i] * in[i];
    out[o] = acc;
  }
}

Tensor run_residual_block(const Tensor& input, const LayerDescriptor& layer,
                          const std::vector<Tensor>& params) {
  const auto& b = std::get<BlockSpec>(layer.params);
  Shape body_shape = layer.out_shape;
  size_t plane = static_cast<size_t>(body_shape.dims[1]) * body_shape.dims[2];

  Tensor t1(body_shape);
  conv2d(input.data.data(), input.shape, params[0], b.stride, 1, t1.data.data(), body_shape);
  batchnorm(t1.data.data(), b.out_ch, plane, params[1], params[2]);
  relu_inplace(t1.data.data(), t1.data.size());

  Tensor t2(body_shape);
  conv2d(t1.data.data(), body_shape, params[3], 1, 1, t2.data.data(), body_shape);
  batchnorm(t2.data.data(), b.out_ch, plane, params[4], params[5]);

  if (b.downsample) {
    Tensor skip(body_shape);
    conv2d(input.data.data(), input.shape, params[6], b.stride, 0, skip.data.data(),
           body_shape);
    batchnorm(skip.data.data(), b.out_ch, plane, params[7], params[8]);
    for (size_t i = 0; i < t2.data.size(); ++i) t2.data[i] += skip.data[i];
  } else {
    for (size_t i = 0; i < t2.data.size(); ++i) t2.data[i] += input.data[i];
  }
  relu_inplace(t2.data.data(), t2.data.size());
  return t2;
}

Tensor run_layer(const Tensor& input, const LayerDescriptor& layer,
                 const std::vector<Tensor>& params) {
  switch (layer.kind) {
    case LayerKind::conv: {
      const auto& c = std::get<ConvSpec>(layer.params);
      Tensor out(layer.out_shape);
      conv2d(input.data.data(), input.shape, params[0], c.stride, c.pad,
             out.data.data(), layer.out_shape);
      return out;
    }
    case LayerKind::batchnorm: {
      Tensor out = input;
      size_t plane = static_cast<size_t>(input.shape.dims[1]) * input.shape.dims[2];
      batchnorm(out.data.data(), input.shape.dims[0], plane, params[0], params[1]);
      return out;
    }
    case LayerKind::relu: {
      Tensor out = input;
      relu_inplace(out.data.data(), out.data.size());
      return out;
    }
    case LayerKind::maxpool: {
      Tensor out(layer.out_shape);
      maxpool2d(input.data.data(), input.shape, std::get<PoolSpec>(layer.params),
                out.data.data(), layer.out_shape);
      return out;
    }
    case LayerKind::avgpool_global: {
      Tensor out(layer.out_shape);
      avgpool_global(input.data.data(), input.shape, out.data.data());
      return out;
    }
    case LayerKind::fully_connected: {
      Tensor out(layer.out_shape);
      fully_connected(input.data.data(), params[0], params[1], out.data.data());
      return out;
    }
    case LayerKind::residual_block:
      return run_residual_block(input, layer, params);
  }
  raise(Errc::invalid_argument, "unknown layer kind");
}

void check_finite(const Tensor& t, const std::string& layer_name) {
  for (float v : t.data) {
    if (!std::isfinite(v)) {
      raise(Errc::numeric_error, "non-finite activation after layer " + layer_name);
    }
  }
}

}  // namespace

Tensor execute(const LayerGraph& graph, const WeightSet& weights,
               const Tensor& input, std::string_view from_cut,
               std::string_view to_cut) {
  if (weights.params.size() != graph.layers.size()) {
    raise(Errc::invalid_argument, "weight set does not match graph");
  }
  size_t from_pos = graph.cut_pos(from_cut);
  size_t from_idx = graph.cut_points[from_pos].layer_index;
  bool to_end = (to_cut == kEndCut);
  size_t to_idx;
  if (to_end) {
    to_idx = graph.layers.size();
  } else {
    size_t to_pos = graph.cut_pos(to_cut);
    to_idx = graph.cut_points[to_pos].layer_index;
  }
  if (from_idx >= to_idx) {
    raise(Errc::invalid_argument, "from_cut must precede to_cut");
  }
  Shape expected = graph.activation_shape_at(from_pos);
  if (input.shape != expected) {
    raise(Errc::shape_error, "input shape " + input.shape.to_string() +
                                 " does not match activation shape " +
                                 expected.to_string() + " at cut " +
                                 std::string(from_cut));
  }
  if (input.data.size() != input.shape.elems()) {
    raise(Errc::shape_error, "tensor data length does not match its shape");
  }
  check_finite(input, "(input)");

  // The two head layers both read the feature vector, so the plain chain
  // stops before them.
  size_t chain_end = std::min(to_idx, graph.layers.size() - 2);
  Tensor cur = input;
  for (size_t i = from_idx; i < chain_end; ++i) {
    cur = run_layer(cur, graph.layers[i], weights.params[i]);
    check_finite(cur, graph.layers[i].name);
  }
  if (!to_end) return cur;

  size_t xyz_idx = graph.layers.size() - 2;
  size_t logq_idx = graph.layers.size() - 1;
  Tensor xyz = run_layer(cur, graph.layers[xyz_idx], weights.params[xyz_idx]);
  Tensor logq = run_layer(cur, graph.layers[logq_idx], weights.params[logq_idx]);
  check_finite(xyz, graph.layers[xyz_idx].name);
  check_finite(logq, graph.layers[logq_idx].name);

  Tensor head(Shape::flat(6));
  for (int i = 0; i < 3; ++i) {
    head.data[i] = xyz.data[i];
    head.data[3 + i] = logq.data[i];
  }
  return head;
}

Pose decode_pose(const Tensor& head6) {
  if (head6.shape != Shape::flat(6)) {
    raise(Errc::shape_error, "pose head must be a 6-float vector");
  }
  Pose p;
  p.t = {head6.data[0], head6.data[1], head6.data[2]};
  p.q = quat_exp(LogQuat{head6.data[3], head6.data[4], head6.data[5]});
  return p;
}

Pose run_local(const LayerGraph& graph, const WeightSet& weights, const Frame& frame) {
  Tensor x = preprocess(frame, graph.resolution);
  return decode_pose(execute(graph, weights, x, "null", kEndCut));
}

std::vector<std::pair<std::string, uint32_t>> activation_checksums(
    const LayerGraph& graph, const WeightSet& weights, const Tensor& input) {
  std::vector<std::pair<std::string, uint32_t>> out;
  out.reserve(graph.cut_points.size() + 1);
  Tensor cur = input;
  auto crc_of = [](const Tensor& t) {
    return crc32_ieee(t.data.data(), t.data.size() * sizeof(float));
  };
  size_t prev_idx = 0;
  for (size_t pos = 0; pos < graph.cut_points.size(); ++pos) {
    const auto& cp = graph.cut_points[pos];
    if (cp.layer_index > prev_idx) {
      cur = execute(graph, weights, cur, graph.cut_points[pos - 1].name, cp.name);
      prev_idx = cp.layer_index;
    }
    out.emplace_back(cp.name, crc_of(cur));
  }
  Tensor head = execute(graph, weights, cur, graph.cut_points.back().name, kEndCut);
  out.emplace_back(std::string(kEndCut), crc_of(head));
  return out;
}

}  // namespace splitreloc
