#pragma once

#include <string>
#include <vector>

#include "splitreloc/pose.hpp"

namespace splitreloc {

struct TrajectorySample {
  double t = 0.0;  // seconds
  Pose pose;
};

// Timestamped pose sequence. Timestamps are strictly increasing; a loaded
// trajectory is never empty.
struct Trajectory {
  std::vector<TrajectorySample> samples;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// CSV lines `t,x,y,z,qw,qx,qy,qz`, optional header. Quaternions are
// normalized on load when they deviate from unit norm by more than 1e-12,
// so save/load round-trips are textually stable.
Trajectory load_trajectory_csv(const std::string& path);

// Writes the header plus one `%.12g`-formatted line per sample.
void save_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace splitreloc
