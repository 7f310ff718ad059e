#include "splitreloc/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splitreloc/errors.hpp"

namespace splitreloc {

namespace {

constexpr const char* kHeader = "t,x,y,z,qw,qx,qy,qz";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, size_t line_no) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    raise(Errc::parse_error,
          "trajectory csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos != s.size()) {
    raise(Errc::parse_error,
          "trajectory csv line " + std::to_string(line_no) + ": trailing characters in '" + s + "'");
  }
  return v;
}

}  // namespace

Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open trajectory csv: " + path);

  Trajectory traj;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == kHeader) continue;

    auto fields = split_csv_line(line);
    if (fields.size() != 8) {
      raise(Errc::parse_error, "trajectory csv line " + std::to_string(line_no) +
                                   ": expected 8 fields, got " + std::to_string(fields.size()));
    }
    TrajectorySample s;
    s.t = parse_real(fields[0], line_no);
    s.pose.t = {parse_real(fields[1], line_no), parse_real(fields[2], line_no),
                parse_real(fields[3], line_no)};
    s.pose.q = {parse_real(fields[4], line_no), parse_real(fields[5], line_no),
                parse_real(fields[6], line_no), parse_real(fields[7], line_no)};
    if (!is_finite(s.pose.t) || !std::isfinite(s.t)) {
      raise(Errc::validation_error,
            "trajectory csv line " + std::to_string(line_no) + ": non-finite value");
    }
    double n2 = dot(s.pose.q, s.pose.q);
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
      raise(Errc::validation_error,
            "trajectory csv line " + std::to_string(line_no) + ": zero or non-finite quaternion");
    }
    if (std::abs(n2 - 1.0) > 1e-12) s.pose.q = normalized(s.pose.q);
    if (!traj.samples.empty() && !(s.t > traj.samples.back().t)) {
      raise(Errc::validation_error,
            "trajectory csv line " + std::to_string(line_no) +
                ": timestamps must be strictly increasing");
    }
    traj.samples.push_back(s);
  }
  if (traj.samples.empty()) {
    raise(Errc::validation_error, "trajectory csv has no samples: " + path);
  }
  return traj;
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
  for (size_t i = 1; i < traj.samples.size(); ++i) {
    if (!(traj.samples[i].t > traj.samples[i - 1].t)) {
      raise(Errc::validation_error, "trajectory timestamps must be strictly increasing");
    }
  }
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write trajectory csv: " + path);
  out << kHeader << '\n';
  char buf[256];
  for (const auto& s : traj.samples) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g",
                  s.t, s.pose.t.x, s.pose.t.y, s.pose.t.z, s.pose.q.w, s.pose.q.x,
                  s.pose.q.y, s.pose.q.z);
    out << buf << '\n';
  }
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

}  // namespace splitreloc
