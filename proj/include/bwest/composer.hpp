#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <vector>

#include "legendre.hpp"
#include "minplus.hpp"
#include "types.hpp"

namespace bwest {

/*!
 * End-to-end composition of a tandem: the min-plus convolution of all per-hop
 * curves. When every curve is convex (and finite everywhere) the convolution
 * is computed in the Legendre domain, where it becomes a plain addition of
 * transforms; otherwise the curves are convolved iteratively on the grid.
 */
inline Curve compose(std::span<const Curve> curves, const GridConfig& grid) {
  if (curves.empty()) throw InvariantError("compose: need at least one curve");
  if (curves.size() == 1) return curves.front();

  bool legendre_path = true;
  for (const auto& c : curves)
    if (!(c.mode() == CurveMode::Linear && c.is_convex() &&
          c.extension() == Extension::FinalSlope))
      legendre_path = false;

  if (!legendre_path) {
    Curve acc = curves[0];
    for (std::size_t i = 1; i < curves.size(); ++i) acc = convolve(acc, curves[i], grid);
    return acc;
  }

  // rate grid: every distinct segment slope, capped at the smallest final
  // slope; the result's kinks all sit on these rates
  double cap = kInfinity;
  std::set<double> slope_set{0.0};
  for (const auto& c : curves) {
    const auto& p = c.breakpoints();
    for (std::size_t i = 0; i + 1 < p.size(); ++i) slope_set.insert(c.segment_slope(i));
    cap = std::min(cap, c.final_slope());
  }
  slope_set.insert(cap);
  std::vector<double> rates;
  for (double s : slope_set)
    if (s <= cap + 1e-15 && s >= 0) rates.push_back(slope_to_mbps(s));
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());

  std::vector<LegendreSample> sum;
  sum.reserve(rates.size());
  for (const double r : rates) {
    double v = 0.0;
    for (const auto& c : curves) v += detail::conjugate_at_slope(c, mbps_to_slope(r));
    sum.push_back({r, v});
  }
  return legendre_back(LegendreFn(std::move(sum), slope_to_mbps(cap)));
}

struct MinRate {
  double mbps;
  std::size_t tight_link; // argmin index, lowest index on ties
};

/// Path available bandwidth as the minimum of per-link rates, with the
/// tight-link index. Equals compose() on constant-rate curves.
inline MinRate min_rate_compose(std::span<const double> rates_mbps) {
  if (rates_mbps.empty()) throw InvariantError("min_rate_compose: need at least one rate");
  std::size_t idx = 0;
  for (std::size_t i = 1; i < rates_mbps.size(); ++i)
    if (rates_mbps[i] < rates_mbps[idx]) idx = i;
  return {rates_mbps[idx], idx};
}

/// Forward-difference slope per grid step, in Mbps. Step-mode curves are
/// rejected (their derivative is a spike train, not a rate profile).
/// smooth_window > 1 applies a centered moving average of that many taps.
inline std::vector<std::pair<double, double>> derivative(const Curve& c, const GridConfig& grid,
                                                         int smooth_window = 0) {
  if (c.mode() != CurveMode::Linear) throw InvariantError("derivative: step-mode curve");
  const auto v = c.sample(grid);
  std::vector<std::pair<double, double>> out;
  out.reserve(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (std::isinf(v[i + 1])) break;
    out.push_back({grid.time(i), slope_to_mbps((v[i + 1] - v[i]) / grid.dt)});
  }
  if (smooth_window > 1) {
    const int w = smooth_window | 1; // centered: force odd
    const int half = w / 2;
    std::vector<std::pair<double, double>> smoothed = out;
    for (std::size_t i = 0; i < out.size(); ++i) {
      double acc = 0;
      int cnt = 0;
      for (int j = -half; j <= half; ++j) {
        const long k = static_cast<long>(i) + j;
        if (k < 0 || k >= static_cast<long>(out.size())) continue;
        acc += out[static_cast<std::size_t>(k)].second;
        ++cnt;
      }
      smoothed[i].second = acc / cnt;
    }
    return smoothed;
  }
  return out;
}

} // namespace bwest
