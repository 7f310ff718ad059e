#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "splitreloc/tensor.hpp"

namespace splitreloc {

// Framed binary protocol for split-inference offloading. All multi-byte
// fields are little-endian; every frame ends with a CRC-32 (IEEE) over all
// preceding bytes. The normative byte layout lives in PROTOCOL.md.

enum class MsgType : uint8_t { request = 1, response = 2 };

enum class Status : uint8_t {
  ok = 0,
  bad_cut = 1,
  shape_mismatch = 2,
  internal = 3,
};

inline constexpr uint8_t kWireVersion = 1;
inline constexpr uint8_t kDtypeFloat32 = 1;
// magic(4) version(1) type(1) reserved(2) request_id(8) cut(1) dtype(1)
// ndim(1) flags(1)
inline constexpr size_t kRequestPreludeSize = 20;
inline constexpr size_t kResponseFrameSize = 56;

struct InferRequest {
  uint64_t request_id = 0;
  uint8_t cut_index = 0;  // index into the 11 named cuts, 0 = null
  uint8_t dtype = kDtypeFloat32;
  Shape shape;
  std::vector<float> payload;
};

struct InferResponse {
  uint64_t request_id = 0;
  Status status = Status::ok;
  // t_xyz then log-quat v; meaningful only when status == ok
  std::array<float, 6> pose{};
  uint64_t server_compute_ns = 0;
};

// Total request frame size for a tensor shape: prelude + dims + payload_len
// field + payload + crc.
size_t request_frame_size(const Shape& shape);

std::vector<uint8_t> encode_request(const InferRequest& req);
std::vector<uint8_t> encode_response(const InferResponse& resp);

// Decoders take one complete frame and either return the message or raise a
// typed error: protocol_error (magic/version/type/layout), integrity_error
// (crc mismatch), incomplete_frame (buffer shorter than declared).
InferRequest decode_request(std::span<const uint8_t> frame);
InferResponse decode_response(std::span<const uint8_t> frame);

// Parsed fixed-size request prelude, enough for a stream reader to size the
// rest of the frame. Validates magic/version/type/reserved/flags/ndim.
struct RequestPrelude {
  uint64_t request_id;
  uint8_t cut_index;
  uint8_t dtype;
  uint8_t ndim;
};

RequestPrelude parse_request_prelude(std::span<const uint8_t> prelude20);

}  // namespace splitreloc
