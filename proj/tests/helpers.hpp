#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "bwest/curve.hpp"
#include "bwest/rng.hpp"
#include "bwest/traffic.hpp"

namespace testutil {

using namespace bwest;

// Random convex piecewise-linear curve whose breakpoints sit on the grid, so
// grid infima coincide with the exact ones.
inline Curve random_convex_curve(Rng& rng, const GridConfig& grid, int max_segments = 4) {
  const int n_seg = 1 + static_cast<int>(rng.uniform() * max_segments);
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  double slope = rng.uniform() * 0.01; // Mb/ms
  double t = 0.0, v = 0.0;
  for (int i = 0; i < n_seg; ++i) {
    const double len = grid.dt * (1 + std::floor(rng.uniform() * (grid.t_max / grid.dt / 8)));
    t += len;
    v += slope * len;
    pts.push_back({t, v});
    slope += rng.uniform() * 0.02;
  }
  return Curve(std::move(pts), CurveMode::Linear, Extension::FinalSlope, slope);
}

// Random non-decreasing piecewise-linear curve (not necessarily convex),
// grid-aligned breakpoints.
inline Curve random_pwl_curve(Rng& rng, const GridConfig& grid, int max_segments = 5) {
  const int n_seg = 1 + static_cast<int>(rng.uniform() * max_segments);
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  double t = 0.0, v = 0.0;
  for (int i = 0; i < n_seg; ++i) {
    t += grid.dt * (1 + std::floor(rng.uniform() * (grid.t_max / grid.dt / 8)));
    v += rng.uniform() * 0.5;
    pts.push_back({t, v});
  }
  return Curve(std::move(pts), CurveMode::Linear, Extension::FinalSlope,
               rng.uniform() * 0.05);
}

// Random packet staircase.
inline Curve random_staircase(Rng& rng, double horizon_ms, int max_packets = 40) {
  PacketEvents ev;
  const int n = 2 + static_cast<int>(rng.uniform() * max_packets);
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += rng.uniform() * horizon_ms / max_packets;
    ev.events.push_back({t, 0.001 + rng.uniform() * 0.05});
  }
  return to_curve(ev);
}

// O(n^2) grid oracle for the min-plus convolution.
inline std::vector<double> grid_convolve_oracle(const Curve& f, const Curve& g,
                                                const GridConfig& grid) {
  const auto fv = f.sample(grid);
  const auto gv = g.sample(grid);
  std::vector<double> out(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i) {
    double best = bwest::kInfinity;
    for (std::size_t j = 0; j <= i; ++j) best = std::min(best, fv[j] + gv[i - j]);
    out[i] = best;
  }
  return out;
}

// sup over the grid of f - g.
inline double sup_gap(const Curve& f, const Curve& g, const GridConfig& grid) {
  const auto fv = f.sample(grid);
  const auto gv = g.sample(grid);
  double m = -bwest::kInfinity;
  for (std::size_t i = 0; i < fv.size(); ++i) m = std::max(m, fv[i] - gv[i]);
  return m;
}

inline bool leq_on_grid(const Curve& f, const Curve& g, const GridConfig& grid, double eps) {
  return sup_gap(f, g, grid) <= eps;
}

} // namespace testutil
