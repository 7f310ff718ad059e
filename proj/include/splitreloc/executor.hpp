#pragma once

#include <string_view>
#include <vector>

#include "splitreloc/frame.hpp"
#include "splitreloc/graph.hpp"
#include "splitreloc/pose.hpp"
#include "splitreloc/tensor.hpp"
#include "splitreloc/weights.hpp"

namespace splitreloc {

// Center-crops to res x res, converts to channel-planar float32 with
// value = pixel/255 - 0.5. Crop offsets use the floor rule. The frame must
// be at least res in both dimensions.
Tensor preprocess(const Frame& frame, uint32_t res);

// Runs layers [from_cut, to_cut). `to_cut` may be kEndCut ("end"), which
// runs through the parallel heads and returns the 6-float pose vector
// (t_xyz then log-quat v). Arithmetic is float32 with a fixed accumulation
// order and contraction disabled, so any prefix/suffix split composes
// bit-exactly with a straight-through run, across processes and machines.
Tensor execute(const LayerGraph& graph, const WeightSet& weights,
               const Tensor& input, std::string_view from_cut,
               std::string_view to_cut);

// Interprets the 6-float head vector: translation, then quat_exp of the
// regressed log quaternion.
Pose decode_pose(const Tensor& head6);

// Full local inference, frame to pose.
Pose run_local(const LayerGraph& graph, const WeightSet& weights, const Frame& frame);

// CRC-32 of the activation bytes crossing every cut plus the final head
// vector (cut name "end"). Regression anchor for the golden files.
std::vector<std::pair<std::string, uint32_t>> activation_checksums(
    const LayerGraph& graph, const WeightSet& weights, const Tensor& input);

}  // namespace splitreloc
