#include "splitreloc/wire.hpp"

#include <bit>
#include <cstring>

#include "splitreloc/checksum.hpp"
#include "splitreloc/errors.hpp"

namespace splitreloc {

namespace {

constexpr uint8_t kMagic[4] = {'S', 'P', 'L', 'T'};
// Largest tensor payload a peer will accept; the 224-res input is ~0.6 MB,
// the largest activation ~3.2 MB.
constexpr uint64_t kMaxPayloadBytes = 256ull * 1024 * 1024;

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& b, float v) {
  put_u32(b, std::bit_cast<uint32_t>(v));
}

uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

float get_f32(const uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

void append_crc(std::vector<uint8_t>& b) {
  put_u32(b, crc32_ieee(b.data(), b.size()));
}

void check_crc(std::span<const uint8_t> frame) {
  uint32_t stored = get_u32(frame.data() + frame.size() - 4);
  uint32_t computed = crc32_ieee(frame.data(), frame.size() - 4);
  if (stored != computed) {
    raise(Errc::integrity_error, "frame crc mismatch");
  }
}

// Common 16-byte frame head: magic, version, expected type, reserved zeros.
uint64_t check_head(std::span<const uint8_t> frame, MsgType expected) {
  if (std::memcmp(frame.data(), kMagic, 4) != 0) {
    raise(Errc::protocol_error, "bad magic");
  }
  if (frame[4] != kWireVersion) {
    raise(Errc::protocol_error, "unknown protocol version " + std::to_string(frame[4]));
  }
  if (frame[5] != static_cast<uint8_t>(expected)) {
    raise(Errc::protocol_error, "unexpected frame type " + std::to_string(frame[5]));
  }
  if (get_u16(frame.data() + 6) != 0) {
    raise(Errc::protocol_error, "nonzero reserved field");
  }
  return get_u64(frame.data() + 8);
}

}  // namespace

size_t request_frame_size(const Shape& shape) {
  return kRequestPreludeSize + 4ull * shape.rank + 4 + shape.elems() * 4 + 4;
}

std::vector<uint8_t> encode_request(const InferRequest& req) {
  if (req.shape.rank < 1 || req.shape.rank > 4) {
    raise(Errc::invalid_argument, "tensor rank must be 1..4");
  }
  if (req.dtype != kDtypeFloat32) {
    raise(Errc::invalid_argument, "only float32 payloads are defined");
  }
  if (req.payload.size() != req.shape.elems()) {
    raise(Errc::invalid_argument, "payload length does not match shape");
  }
  uint64_t payload_bytes = req.payload.size() * 4;
  if (payload_bytes > kMaxPayloadBytes) {
    raise(Errc::invalid_argument, "payload too large");
  }

  std::vector<uint8_t> b;
  b.reserve(request_frame_size(req.shape));
  b.insert(b.end(), kMagic, kMagic + 4);
  b.push_back(kWireVersion);
  b.push_back(static_cast<uint8_t>(MsgType::request));
  put_u16(b, 0);
  put_u64(b, req.request_id);
  b.push_back(req.cut_index);
  b.push_back(req.dtype);
  b.push_back(static_cast<uint8_t>(req.shape.rank));
  b.push_back(0);  // flags
  for (uint32_t i = 0; i < req.shape.rank; ++i) put_u32(b, req.shape.dims[i]);
  put_u32(b, static_cast<uint32_t>(payload_bytes));
  size_t data_off = b.size();
  b.resize(b.size() + payload_bytes);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(b.data() + data_off, req.payload.data(), payload_bytes);
  } else {
    for (size_t i = 0; i < req.payload.size(); ++i) {
      uint32_t u = std::bit_cast<uint32_t>(req.payload[i]);
      for (int k = 0; k < 4; ++k) {
        b[data_off + 4 * i + k] = static_cast<uint8_t>(u >> (8 * k));
      }
    }
  }
  append_crc(b);
  return b;
}

RequestPrelude parse_request_prelude(std::span<const uint8_t> prelude20) {
  if (prelude20.size() < kRequestPreludeSize) {
    raise(Errc::incomplete_frame, "request prelude shorter than 20 bytes");
  }
  RequestPrelude p;
  p.request_id = check_head(prelude20, MsgType::request);
  p.cut_index = prelude20[16];
  p.dtype = prelude20[17];
  p.ndim = prelude20[18];
  if (prelude20[19] != 0) {
    raise(Errc::protocol_error, "nonzero flags field");
  }
  if (p.ndim < 1 || p.ndim > 4) {
    raise(Errc::protocol_error, "tensor rank " + std::to_string(p.ndim) + " out of range");
  }
  return p;
}

InferRequest decode_request(std::span<const uint8_t> frame) {
  RequestPrelude p = parse_request_prelude(frame);
  size_t dims_off = kRequestPreludeSize;
  size_t min_size = dims_off + 4ull * p.ndim + 4 + 4;
  if (frame.size() < min_size) {
    raise(Errc::incomplete_frame, "request frame truncated before payload length");
  }
  Shape shape;
  shape.rank = p.ndim;
  uint64_t elems = 1;
  for (uint32_t i = 0; i < p.ndim; ++i) {
    shape.dims[i] = get_u32(frame.data() + dims_off + 4 * i);
    elems *= shape.dims[i];
    if (elems * 4 > kMaxPayloadBytes) {
      raise(Errc::protocol_error, "declared tensor exceeds payload limit");
    }
  }
  uint32_t payload_len = get_u32(frame.data() + dims_off + 4ull * p.ndim);
  if (payload_len != elems * 4) {
    raise(Errc::protocol_error, "payload length does not equal 4 * product(shape)");
  }
  size_t expected = dims_off + 4ull * p.ndim + 4 + payload_len + 4;
  if (frame.size() < expected) {
    raise(Errc::incomplete_frame, "request frame shorter than declared");
  }
  if (frame.size() > expected) {
    raise(Errc::protocol_error, "trailing bytes after request frame");
  }
  check_crc(frame);
  if (p.dtype != kDtypeFloat32) {
    raise(Errc::protocol_error, "unsupported dtype " + std::to_string(p.dtype));
  }

  InferRequest req;
  req.request_id = p.request_id;
  req.cut_index = p.cut_index;
  req.dtype = p.dtype;
  req.shape = shape;
  req.payload.resize(elems);
  const uint8_t* data = frame.data() + dims_off + 4ull * p.ndim + 4;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(req.payload.data(), data, payload_len);
  } else {
    for (uint64_t i = 0; i < elems; ++i) req.payload[i] = get_f32(data + 4 * i);
  }
  return req;
}

std::vector<uint8_t> encode_response(const InferResponse& resp) {
  std::vector<uint8_t> b;
  b.reserve(kResponseFrameSize);
  b.insert(b.end(), kMagic, kMagic + 4);
  b.push_back(kWireVersion);
  b.push_back(static_cast<uint8_t>(MsgType::response));
  put_u16(b, 0);
  put_u64(b, resp.request_id);
  b.push_back(static_cast<uint8_t>(resp.status));
  b.push_back(0);
  b.push_back(0);
  b.push_back(0);
  for (float v : resp.pose) put_f32(b, v);
  put_u64(b, resp.server_compute_ns);
  append_crc(b);
  return b;
}

InferResponse decode_response(std::span<const uint8_t> frame) {
  if (frame.size() < kResponseFrameSize) {
    raise(Errc::incomplete_frame, "response frame shorter than 56 bytes");
  }
  if (frame.size() > kResponseFrameSize) {
    raise(Errc::protocol_error, "trailing bytes after response frame");
  }
  uint64_t request_id = check_head(frame, MsgType::response);
  uint8_t status = frame[16];
  if (status > static_cast<uint8_t>(Status::internal)) {
    raise(Errc::protocol_error, "unknown status " + std::to_string(status));
  }
  if (frame[17] != 0 || frame[18] != 0 || frame[19] != 0) {
    raise(Errc::protocol_error, "nonzero padding in response");
  }
  check_crc(frame);

  InferResponse resp;
  resp.request_id = request_id;
  resp.status = static_cast<Status>(status);
  for (int i = 0; i < 6; ++i) resp.pose[i] = get_f32(frame.data() + 20 + 4 * i);
  resp.server_compute_ns = get_u64(frame.data() + 44);
  return resp;
}

}  // namespace splitreloc
