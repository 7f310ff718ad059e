#include "splitreloc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "splitreloc/errors.hpp"

namespace splitreloc {

double predict_latency(const LayerGraph& graph, const CostProfile& profile,
                       std::string_view cut_name) {
  if (!(profile.bandwidth_bytes_per_s > 0.0)) {
    raise(Errc::invalid_argument, "bandwidth must be positive");
  }
  size_t pos = graph.cut_pos(cut_name);
  double prefix_gflops = static_cast<double>(graph.prefix_flops_at(pos)) * 1e-9;
  double suffix_gflops =
      static_cast<double>(graph.total_flops()) * 1e-9 - prefix_gflops;
  double payload = static_cast<double>(cut_payload_bytes(graph, cut_name));
  return profile.preprocess_s + profile.c_client_s_per_gflop * prefix_gflops +
         profile.rtt_overhead_s + payload / profile.bandwidth_bytes_per_s +
         profile.c_server_s_per_gflop * suffix_gflops +
         profile.response_bytes / profile.bandwidth_bytes_per_s;
}

SplitPlan plan(const LayerGraph& graph, const CostProfile& profile) {
  SplitPlan p;
  p.predicted.reserve(graph.cut_points.size());
  for (const auto& cp : graph.cut_points) {
    p.predicted.emplace_back(cp.name, predict_latency(graph, profile, cp.name));
  }
  std::vector<size_t> order(p.predicted.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return p.predicted[a].second < p.predicted[b].second;
  });
  p.ranking.reserve(order.size());
  for (size_t i : order) p.ranking.push_back(p.predicted[i].first);
  p.best_cut = p.ranking.front();
  return p;
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    raise(Errc::invalid_argument, "spearman_rho needs two equal vectors, n >= 2");
  }
  auto ranks = [](const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t x, size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> ra = ranks(a), rb = ranks(b);
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

namespace {

// One calibration row: y ~ constant + delta * prefix_gflops + beta * megabytes.
struct FitRow {
  double p;  // prefix GFLOPs
  double b;  // (payload + response) megabytes
  double y;  // measured seconds
  double weight;
};

struct ReducedFit {
  double constant, delta, beta;  // kappa, c_client - c_server, s per MB
  double rss;
};

// Solves the weighted LS subproblem with the given variables free
// (mask bit set = variable participates, otherwise pinned at 0).
// Returns false when the normal matrix is singular.
bool solve_subset(const std::vector<FitRow>& rows, bool use_const, bool use_beta,
                  ReducedFit& out) {
  // variables in order: constant, delta, beta; delta always free
  std::vector<int> vars;
  if (use_const) vars.push_back(0);
  vars.push_back(1);
  if (use_beta) vars.push_back(2);
  size_t m = vars.size();
  double M[3][3] = {{0}};
  double rhs[3] = {0};
  for (const auto& r : rows) {
    double col[3] = {1.0, r.p, r.b};
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < m; ++j) {
        M[i][j] += r.weight * col[vars[i]] * col[vars[j]];
      }
      rhs[i] += r.weight * col[vars[i]] * r.y;
    }
  }
  // Gaussian elimination with partial pivoting on the m x m system.
  double aug[3][4];
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) aug[i][j] = M[i][j];
    aug[i][m] = rhs[i];
  }
  for (size_t c = 0; c < m; ++c) {
    size_t piv = c;
    for (size_t r = c + 1; r < m; ++r) {
      if (std::abs(aug[r][c]) > std::abs(aug[piv][c])) piv = r;
    }
    if (std::abs(aug[piv][c]) < 1e-12) return false;
    if (piv != c) {
      for (size_t j = 0; j <= m; ++j) std::swap(aug[piv][j], aug[c][j]);
    }
    for (size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      double f = aug[r][c] / aug[c][c];
      for (size_t j = c; j <= m; ++j) aug[r][j] -= f * aug[c][j];
    }
  }
  double sol[3] = {0, 0, 0};
  for (size_t i = 0; i < m; ++i) sol[vars[i]] = aug[i][m] / aug[i][i];
  out.constant = sol[0];
  out.delta = sol[1];
  out.beta = sol[2];
  out.rss = 0.0;
  for (const auto& r : rows) {
    double e = out.constant + out.delta * r.p + out.beta * r.b - r.y;
    out.rss += r.weight * e * e;
  }
  return true;
}

}  // namespace

CalibrationResult calibrate(const LayerGraph& graph,
                            const std::vector<CutMeasurement>& measurements,
                            bool include_single_frames) {
  std::set<std::string> distinct;
  for (const auto& m : measurements) {
    graph.cut_pos(m.cut_name);  // validates the name
    if (!(m.mean_latency_s > 0.0)) {
      raise(Errc::invalid_argument, "non-positive latency for cut " + m.cut_name);
    }
    distinct.insert(m.cut_name);
  }
  if (distinct.size() < 5) {
    raise(Errc::insufficient_data,
          "calibration needs measurements for at least 5 distinct cuts, got " +
              std::to_string(distinct.size()));
  }

  double total_gflops = static_cast<double>(graph.total_flops()) * 1e-9;
  std::vector<FitRow> rows;
  rows.reserve(measurements.size() * 2);
  CostProfile probe;  // only response_bytes is read below
  for (const auto& m : measurements) {
    size_t pos = graph.cut_pos(m.cut_name);
    FitRow r;
    r.p = static_cast<double>(graph.prefix_flops_at(pos)) * 1e-9;
    r.b = (static_cast<double>(cut_payload_bytes(graph, m.cut_name)) +
           probe.response_bytes) *
          1e-6;
    r.y = m.mean_latency_s;
    r.weight = 1.0;
    rows.push_back(r);
    if (m.single_frame_s && include_single_frames) {
      if (!(*m.single_frame_s > 0.0)) {
        raise(Errc::invalid_argument,
              "non-positive single-frame latency for cut " + m.cut_name);
      }
      FitRow s = r;
      s.y = *m.single_frame_s;
      s.weight = 0.25;
      rows.push_back(s);
    }
  }

  // Active-set over the two sign-constrained variables (constant >= 0,
  // beta >= 0; delta is free). Four candidate subsets; the optimum of this
  // convex problem is the feasible candidate with the smallest RSS.
  bool found = false;
  ReducedFit best{};
  for (int use_const = 1; use_const >= 0; --use_const) {
    for (int use_beta = 1; use_beta >= 0; --use_beta) {
      ReducedFit f{};
      if (!solve_subset(rows, use_const != 0, use_beta != 0, f)) continue;
      if (f.constant < 0.0 || f.beta < 0.0) continue;
      if (!found || f.rss < best.rss) {
        best = f;
        found = true;
      }
    }
  }
  if (!found) {
    raise(Errc::degenerate_fit, "singular calibration system (payloads or "
                                "prefix FLOPs do not vary across cuts)");
  }

  CalibrationResult result;
  result.notes =
      "rtt_overhead_s carries the lumped constant (rtt + preprocess); "
      "c_client/c_server are reported in the canonical decomposition with the "
      "faster side at 0 (only their difference is identifiable from one graph)";
  result.notes += include_single_frames
                      ? "; single-frame rows included at 0.25x weight"
                      : "; fit uses mean-latency rows only";
  CostProfile prof;
  double beta_per_byte = best.beta * 1e-6;
  prof.bandwidth_bytes_per_s = beta_per_byte > 0.0 ? 1.0 / beta_per_byte : 1e300;
  prof.preprocess_s = 0.0;
  if (best.delta >= 0.0) {
    prof.c_client_s_per_gflop = best.delta;
    prof.c_server_s_per_gflop = 0.0;
    prof.rtt_overhead_s = best.constant;
  } else {
    // Server slower than client: shift the rate difference onto the server
    // and take its whole-network share back out of the constant.
    double c_server = std::min(-best.delta, best.constant / total_gflops);
    prof.c_server_s_per_gflop = c_server;
    prof.c_client_s_per_gflop = best.delta + c_server;  // <= 0 only when clamped
    if (prof.c_client_s_per_gflop < 0.0) {
      prof.c_client_s_per_gflop = 0.0;
      result.notes += "; fitted rate difference clipped to keep the profile nonnegative";
    }
    prof.rtt_overhead_s = best.constant - c_server * total_gflops;
  }
  result.profile = prof;
  result.rss = best.rss;

  std::vector<double> predicted, measured;
  for (const auto& m : measurements) {
    double pred = predict_latency(graph, prof, m.cut_name);
    result.residuals.push_back(pred - m.mean_latency_s);
    predicted.push_back(pred);
    measured.push_back(m.mean_latency_s);
  }
  result.spearman = spearman_rho(predicted, measured);
  return result;
}

std::vector<CutMeasurement> load_measurements_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open measurements csv: " + path);
  std::vector<CutMeasurement> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (line_no == 1 && !fields.empty() && fields[0] == "cut") continue;
    if (fields.size() != 2 && fields.size() != 3) {
      raise(Errc::parse_error, "measurements csv line " + std::to_string(line_no) +
                                   ": expected 2 or 3 fields");
    }
    CutMeasurement m;
    m.cut_name = fields[0];
    try {
      m.mean_latency_s = std::stod(fields[1]);
      if (fields.size() == 3 && !fields[2].empty()) {
        m.single_frame_s = std::stod(fields[2]);
      }
    } catch (const std::exception&) {
      raise(Errc::parse_error,
            "measurements csv line " + std::to_string(line_no) + ": bad number");
    }
    out.push_back(std::move(m));
  }
  return out;
}

CostProfile load_profile_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open profile json: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::parse_error, "profile json: " + std::string(e.what()));
  }
  CostProfile p;
  try {
    p.c_client_s_per_gflop = j.at("c_client_s_per_gflop").get<double>();
    p.c_server_s_per_gflop = j.at("c_server_s_per_gflop").get<double>();
    p.bandwidth_bytes_per_s = j.at("bandwidth_bytes_per_s").get<double>();
    p.rtt_overhead_s = j.at("rtt_overhead_s").get<double>();
    p.preprocess_s = j.at("preprocess_s").get<double>();
    if (j.contains("response_bytes")) p.response_bytes = j["response_bytes"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::validation_error, "profile json: " + std::string(e.what()));
  }
  if (p.c_client_s_per_gflop < 0 || p.c_server_s_per_gflop < 0 ||
      !(p.bandwidth_bytes_per_s > 0) || p.rtt_overhead_s < 0 || p.preprocess_s < 0 ||
      p.response_bytes < 0) {
    raise(Errc::validation_error, "profile json: negative rate or non-positive bandwidth");
  }
  return p;
}

void save_profile_json(const CostProfile& profile, const std::string& path) {
  nlohmann::json j{
      {"c_client_s_per_gflop", profile.c_client_s_per_gflop},
      {"c_server_s_per_gflop", profile.c_server_s_per_gflop},
      {"bandwidth_bytes_per_s", profile.bandwidth_bytes_per_s},
      {"rtt_overhead_s", profile.rtt_overhead_s},
      {"preprocess_s", profile.preprocess_s},
      {"response_bytes", profile.response_bytes},
  };
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write profile json: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace splitreloc
