#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace splitreloc {

// Dimension list, rank 1..4. Activations are (C,H,W) or flat (N); conv
// weights use all four slots.
struct Shape {
  std::array<uint32_t, 4> dims{0, 0, 0, 0};
  uint32_t rank = 0;

  static Shape chw(uint32_t c, uint32_t h, uint32_t w) { return {{c, h, w, 0}, 3}; }
  static Shape flat(uint32_t n) { return {{n, 0, 0, 0}, 1}; }
  static Shape of4(uint32_t a, uint32_t b, uint32_t c, uint32_t d) {
    return {{a, b, c, d}, 4};
  }

  uint64_t elems() const {
    uint64_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) n *= dims[i];
    return rank == 0 ? 0 : n;
  }

  bool operator==(const Shape& o) const {
    if (rank != o.rank) return false;
    for (uint32_t i = 0; i < rank; ++i) {
      if (dims[i] != o.dims[i]) return false;
    }
    return true;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  // "3x224x224"
  std::string to_string() const;
};

// Row-major 32-bit float tensor.
struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), data(s.elems(), 0.0f) {}
  Tensor(Shape s, std::vector<float> d) : shape(s), data(std::move(d)) {}

  uint64_t elems() const { return shape.elems(); }
};

}  // namespace splitreloc
