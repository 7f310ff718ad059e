#pragma once

#include <optional>

#include "splitreloc/errors.hpp"
#include "splitreloc/pose.hpp"
#include "splitreloc/rng.hpp"

namespace test_helpers {

// Runs f and reports the Errc it raised, if any.
template <typename F>
std::optional<splitreloc::Errc> thrown_code(F&& f) {
  try {
    f();
  } catch (const splitreloc::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Seeded uniform-ish random unit quaternion from four gaussians.
inline splitreloc::Quaternion random_unit_quat(splitreloc::SplitMix64& rng) {
  splitreloc::Quaternion q{rng.next_gaussian(), rng.next_gaussian(),
                           rng.next_gaussian(), rng.next_gaussian()};
  return splitreloc::normalized(q);
}

}  // namespace test_helpers
