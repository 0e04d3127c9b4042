#pragma once

#include <algorithm>
#include <deque>
#include <vector>

#include "curve.hpp"
#include "types.hpp"

namespace bwest {

namespace detail {

// One linear piece of a curve: value(x) = v0 + slope*(x - x0) on [x0, x1],
// half-open at x1 for step plateaus (right-continuity). x1 = +infinity marks
// the extension ray.
struct Piece {
  double x0, x1, v0, slope;
  bool open_end;
};

inline std::vector<Piece> pieces_of(const Curve& c) {
  const auto& p = c.breakpoints();
  const bool step = c.mode() == CurveMode::StepRightContinuous;
  std::vector<Piece> out;
  out.reserve(p.size() + 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (step)
      out.push_back({p[i].t, p[i + 1].t, p[i].v, 0.0, true});
    else
      out.push_back({p[i].t, p[i + 1].t, p[i].v, c.segment_slope(i), false});
  }
  switch (c.extension()) {
    case Extension::PlusInfinity:
      // finite domain ends at the wall; the point itself still counts
      out.push_back({p.back().t, p.back().t, p.back().v, 0.0, false});
      break;
    case Extension::Clamp:
      out.push_back({p.back().t, kInfinity, p.back().v, 0.0, false});
      break;
    case Extension::FinalSlope:
      out.push_back({p.back().t, kInfinity, p.back().v, c.final_slope(), false});
      break;
  }
  return out;
}

// Exact min-plus convolution of two convex piecewise-linear curves by
// merging their segments in slope order.
inline Curve convolve_convex_exact(const Curve& f, const Curve& g) {
  struct Seg {
    double slope, len;
  };
  std::vector<Seg> segs;
  double tail_slope = kInfinity; // min of the final rays, +inf if both end in walls
  double wall_at = 0.0;          // finite-domain length when both curves have walls
  bool f_wall = false, g_wall = false;

  auto collect = [&](const Curve& c, bool& wall) {
    const auto& p = c.breakpoints();
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      segs.push_back({c.segment_slope(i), p[i + 1].t - p[i].t});
    if (c.extension() == Extension::PlusInfinity) {
      wall = true;
      wall_at += p.back().t;
    } else {
      tail_slope = std::min(tail_slope, c.final_slope());
    }
  };
  collect(f, f_wall);
  collect(g, g_wall);
  const bool walled = f_wall && g_wall;

  std::sort(segs.begin(), segs.end(), [](const Seg& a, const Seg& b) { return a.slope < b.slope; });

  std::vector<CurvePoint> pts{{0.0, 0.0}};
  for (const auto& s : segs) {
    if (s.len <= 0) continue;
    if (!walled && s.slope >= tail_slope - 1e-12) break; // absorbed by the final ray
    const auto& last = pts.back();
    if (pts.size() > 1 && nearly_equal((last.v - pts[pts.size() - 2].v) /
                                           (last.t - pts[pts.size() - 2].t),
                                       s.slope, 1e-12)) {
      pts.back() = {last.t + s.len, last.v + s.slope * s.len};
    } else {
      pts.push_back({last.t + s.len, last.v + s.slope * s.len});
    }
  }
  if (walled) {
    if (pts.back().t < wall_at - 1e-12) {
      // float noise only: segment lengths sum to the combined domain
      pts.push_back({wall_at, pts.back().v});
    }
    return Curve(std::move(pts), CurveMode::Linear, Extension::PlusInfinity);
  }
  return Curve(std::move(pts), CurveMode::Linear, Extension::FinalSlope, tail_slope);
}

inline long floor_eps(double x) { return static_cast<long>(std::floor(x + 1e-9)); }
inline long ceil_eps(double x) { return static_cast<long>(std::ceil(x - 1e-9)); }

// Grid convolution against a curve with few linear pieces:
//   out[i] = min_k min_{j in window_k(i)} f[j] + g(t_i - t_j)
// Each piece contributes a sliding window over j handled by a monotone deque,
// so the total cost is O(n * pieces) instead of O(n^2).
inline std::vector<double> convolve_grid_pieces(const std::vector<double>& fv, const Curve& g,
                                                const GridConfig& grid) {
  const std::size_t n = fv.size();
  std::vector<double> out(n, kInfinity);
  const auto pieces = pieces_of(g);

  struct Win {
    long m_lo, m_hi; // offsets i-j covered by this piece; m_hi < 0 means unbounded
    double v0, slope, x0;
    std::deque<std::size_t> dq; // indices j, increasing; keys non-decreasing
    long next_j = 0;            // next j to feed into the deque
  };
  std::vector<Win> wins;
  wins.reserve(pieces.size());
  for (const auto& pc : pieces) {
    Win w;
    w.m_lo = ceil_eps(pc.x0 / grid.dt);
    if (std::isinf(pc.x1))
      w.m_hi = -1;
    else if (pc.open_end)
      w.m_hi = ceil_eps(pc.x1 / grid.dt) - 1; // [x0, x1): exclude an exact-multiple end
    else
      w.m_hi = floor_eps(pc.x1 / grid.dt);
    w.v0 = pc.v0;
    w.slope = pc.slope;
    w.x0 = pc.x0;
    if (w.m_hi >= 0 && w.m_hi < w.m_lo) continue; // piece narrower than the grid
    wins.push_back(std::move(w));
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.time(i);
    double best = kInfinity;
    for (auto& w : wins) {
      // key minimized per piece: f[j] - slope * t_j
      const long j_hi = static_cast<long>(i) - w.m_lo;
      const long j_lo = (w.m_hi < 0) ? 0 : static_cast<long>(i) - w.m_hi;
      if (j_hi < 0) continue;
      while (w.next_j <= j_hi) {
        const std::size_t j = static_cast<std::size_t>(w.next_j++);
        const double key = fv[j] - w.slope * grid.time(j);
        while (!w.dq.empty() && fv[w.dq.back()] - w.slope * grid.time(w.dq.back()) >= key)
          w.dq.pop_back();
        w.dq.push_back(j);
      }
      while (!w.dq.empty() && static_cast<long>(w.dq.front()) < j_lo) w.dq.pop_front();
      if (w.dq.empty()) continue;
      const std::size_t j = w.dq.front();
      const double gx = w.v0 + w.slope * (t - grid.time(j) - w.x0);
      best = std::min(best, fv[j] + gx);
    }
    out[i] = best;
  }
  return out;
}

inline std::vector<double> convolve_grid_dense(const std::vector<double>& fv,
                                               const std::vector<double>& gv) {
  const std::size_t n = fv.size();
  std::vector<double> out(n, kInfinity);
  for (std::size_t i = 0; i < n; ++i) {
    double best = kInfinity;
    for (std::size_t j = 0; j <= i; ++j) {
      const double s = fv[j] + gv[i - j];
      if (s < best) best = s;
    }
    out[i] = best;
  }
  return out;
}

inline std::size_t piece_count(const Curve& c) { return c.breakpoints().size(); }

} // namespace detail

/*!
 * Min-plus convolution (f*g)(t) = inf_{0<=tau<=t} { f(tau) + g(t-tau) }.
 *
 * Pure delays (burst functions) shift the other operand exactly. Convex
 * piecewise-linear pairs are convolved exactly by merging segments in slope
 * order. Everything else is evaluated on the grid over [0, grid.t_max]; when
 * one operand has few linear pieces the grid pass costs O(n * pieces).
 */
inline Curve convolve(const Curve& f, const Curve& g, const GridConfig& grid) {
  grid.validate();
  if (f.is_pure_delay()) return g.shifted_right(f.domain_end());
  if (g.is_pure_delay()) return f.shifted_right(g.domain_end());
  if (f.mode() == CurveMode::Linear && g.mode() == CurveMode::Linear && f.is_convex() &&
      g.is_convex())
    return detail::convolve_convex_exact(f, g);

  constexpr std::size_t kMaxPieces = 64;
  const std::size_t nf = detail::piece_count(f);
  const std::size_t ng = detail::piece_count(g);
  std::vector<double> out;
  if (std::min(nf, ng) <= kMaxPieces) {
    const Curve& dense = (ng <= nf) ? f : g;
    const Curve& sparse = (ng <= nf) ? g : f;
    out = detail::convolve_grid_pieces(dense.sample(grid), sparse, grid);
  } else {
    out = detail::convolve_grid_dense(f.sample(grid), g.sample(grid));
  }
  return Curve::from_grid_samples(grid, out);
}

/*!
 * Min-plus deconvolution restricted to the observation window:
 *   (f (/) g)(t) = sup_{0<=tau<=horizon-t} { f(t+tau) - g(tau) }
 * evaluated on the grid. Restricting tau to the window can only lower the
 * sup, so the result stays a valid lower service curve for the system that
 * produced f = g*S. The result is clamped below at zero and re-anchored to
 * pass through the origin.
 *
 * out_t_max limits how far the result is evaluated (the sup still ranges over
 * the full window); by default the result covers [0, horizon].
 */
inline Curve deconvolve(const Curve& f, const Curve& g, double horizon, const GridConfig& grid,
                        double out_t_max = -1.0) {
  grid.validate();
  if (horizon > grid.t_max + grid.eps_t)
    throw InvariantError("deconvolve: horizon exceeds grid.t_max");
  if (!f.defined_on(horizon, grid.eps_t) || !g.defined_on(horizon, grid.eps_t))
    throw InvariantError("deconvolve: horizon exceeds curve domain");
  if (out_t_max < 0) out_t_max = horizon;

  const std::size_t H = static_cast<std::size_t>(std::floor(horizon / grid.dt + 0.5));
  GridConfig win = grid;
  win.t_max = grid.time(H);
  const auto fv = f.sample(win);
  const auto gv = g.sample(win);
  const std::size_t n_out =
      std::min(H, static_cast<std::size_t>(std::floor(out_t_max / grid.dt + 0.5))) + 1;

  std::vector<double> out(n_out, 0.0);
  for (std::size_t i = 0; i < n_out; ++i) {
    double best = -kInfinity;
    for (std::size_t j = 0; i + j <= H; ++j) {
      const double d = fv[i + j] - gv[j];
      if (d > best) best = d;
    }
    out[i] = std::max(best, 0.0);
  }
  out[0] = 0.0;
  GridConfig out_grid = grid;
  out_grid.t_max = grid.time(n_out - 1);
  return Curve::from_grid_samples(out_grid, out);
}

struct BacklogMax {
  double mb = 0.0;
  double at_ms = 0.0;
};

/*!
 * sup over the grid of A - D on [0, horizon]; ties resolved to the first
 * attaining grid point. A must dominate D within eps_v, else the data is
 * non-causal.
 */
inline BacklogMax max_backlog(const Curve& arrivals, const Curve& departures, double horizon,
                              const GridConfig& grid) {
  grid.validate();
  GridConfig win = grid;
  win.t_max = std::min(horizon, grid.t_max);
  const auto av = arrivals.sample(win);
  const auto dv = departures.sample(win);
  BacklogMax best;
  best.mb = -kInfinity;
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (std::isinf(av[i]) || std::isinf(dv[i]))
      throw InvariantError("max_backlog: curves must be finite on the horizon");
    const double b = av[i] - dv[i];
    if (b < -grid.eps_v)
      throw DataError("max_backlog: departures exceed arrivals (non-causal input)");
    if (b > best.mb) {
      best.mb = b;
      best.at_ms = win.time(i);
    }
  }
  if (best.mb < 0) best.mb = 0;
  return best;
}

} // namespace bwest
