#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "curve.hpp"
#include "types.hpp"

namespace bwest {

struct LegendreSample {
  double r_mbps;   // rate
  double value_mb; // L_f(r), finite at every stored sample
};

/*!
 * Convex conjugate on the rate domain, stored as samples at selected rates.
 * The function is +infinity for r > rate_limit when a limit is present.
 */
class LegendreFn {
 public:
  LegendreFn(std::vector<LegendreSample> samples, std::optional<double> rate_limit_mbps)
      : samples_(std::move(samples)), rate_limit_(rate_limit_mbps) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].value_mb) || !std::isfinite(samples_[i].r_mbps))
        throw InvariantError("LegendreFn: samples must be finite");
      if (i > 0 && samples_[i].r_mbps <= samples_[i - 1].r_mbps)
        throw InvariantError("LegendreFn: rates must be strictly increasing");
    }
  }

  const std::vector<LegendreSample>& samples() const { return samples_; }
  std::optional<double> rate_limit_mbps() const { return rate_limit_; }
  bool empty() const { return samples_.empty(); }

  /// Replace the samples by their lower convex hull in the (r, value) plane.
  LegendreFn convexify() const {
    std::vector<LegendreSample> hull;
    for (const auto& s : samples_) {
      while (hull.size() >= 2) {
        const auto& a = hull[hull.size() - 2];
        const auto& b = hull[hull.size() - 1];
        const double lhs = (b.value_mb - a.value_mb) * (s.r_mbps - b.r_mbps);
        const double rhs = (s.value_mb - b.value_mb) * (b.r_mbps - a.r_mbps);
        if (lhs <= rhs) break;
        hull.pop_back();
      }
      hull.push_back(s);
    }
    return LegendreFn(std::move(hull), rate_limit_);
  }

 private:
  std::vector<LegendreSample> samples_;
  std::optional<double> rate_limit_; // Mbps
};

namespace detail {

// Candidate points where sup_t { k*t - f(t) } can be attained: breakpoints,
// and for step curves the pre-jump corners (t_{i+1}, v_i). On a linear piece
// the objective is linear in t, so interior points never beat the ends.
inline double conjugate_at_slope(const Curve& f, double k) {
  const auto& p = f.breakpoints();
  double best = 0.0; // t = 0 candidate: k*0 - 0
  for (const auto& q : p) best = std::max(best, k * q.t - q.v);
  if (f.mode() == CurveMode::StepRightContinuous) {
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      best = std::max(best, k * p[i + 1].t - p[i].v);
  }
  // beyond the last breakpoint the objective slope is k - final_slope <= 0
  // whenever the rate is within the limit, so no further candidates
  return best;
}

} // namespace detail

/*!
 * Legendre transform L_f(r) = sup_t { r*t - f(t) }, evaluated exactly from
 * the breakpoints at each requested rate.
 *
 * Extension handling: a FinalSlope s means the transform is +infinity for
 * rates above s (rate_limit is set accordingly and such samples dropped);
 * Clamp bounds the curve, so every positive rate diverges (rate_limit 0);
 * PlusInfinity at t_cut restricts the sup to [0, t_cut] and leaves the
 * transform finite at every rate.
 */
inline LegendreFn legendre(const Curve& f, std::span<const double> rates_mbps) {
  if (rates_mbps.empty()) throw InvariantError("legendre: rates must be non-empty");
  for (std::size_t i = 0; i < rates_mbps.size(); ++i) {
    if (rates_mbps[i] < 0) throw InvariantError("legendre: rates must be >= 0");
    if (i > 0 && rates_mbps[i] <= rates_mbps[i - 1])
      throw InvariantError("legendre: rates must be increasing");
  }

  std::optional<double> limit;
  switch (f.extension()) {
    case Extension::FinalSlope:
      limit = slope_to_mbps(f.final_slope());
      break;
    case Extension::Clamp:
      limit = 0.0;
      break;
    case Extension::PlusInfinity:
      break;
  }

  std::vector<LegendreSample> samples;
  samples.reserve(rates_mbps.size());
  for (const double r : rates_mbps) {
    if (limit && r > *limit + 1e-9) continue; // +infinity past the rate limit
    samples.push_back({r, detail::conjugate_at_slope(f, mbps_to_slope(r))});
  }
  return LegendreFn(std::move(samples), limit);
}

/*!
 * Back transform L(L)(t) = sup_r { r*t - L(r) } over the stored samples,
 * constructed exactly as the upper envelope of the lines r*t - value. Rates
 * beyond the rate limit carry value +infinity and never contribute. The
 * result is a convex curve through the origin whose final slope is the
 * largest stored rate.
 */
inline Curve legendre_back(const LegendreFn& L) {
  if (L.empty()) throw InvariantError("legendre_back: needs at least one sample");

  struct Line {
    double m, b; // y = m*t + b, m in Mb/ms
  };
  std::vector<Line> lines;
  lines.reserve(L.samples().size());
  for (const auto& s : L.samples()) lines.push_back({mbps_to_slope(s.r_mbps), -s.value_mb});

  // upper envelope; lines arrive in ascending slope order
  std::vector<Line> env;
  std::vector<double> start; // start[i]: abscissa where env[i] becomes the max
  auto cross = [](const Line& a, const Line& b) { return (a.b - b.b) / (b.m - a.m); };
  for (const auto& ln : lines) {
    if (!env.empty() && nearly_equal(ln.m, env.back().m, 1e-15)) {
      if (ln.b <= env.back().b) continue;
      env.pop_back();
      start.pop_back();
    }
    double x = -kInfinity;
    while (!env.empty()) {
      x = cross(env.back(), ln);
      if (x <= start.back()) {
        env.pop_back();
        start.pop_back();
      } else {
        break;
      }
    }
    if (env.empty()) x = -kInfinity;
    env.push_back(ln);
    start.push_back(x);
  }

  // vertices of max(0, envelope) on t >= 0: piece boundaries plus each
  // piece's zero crossing (the envelope is non-decreasing, slopes are >= 0)
  std::vector<double> ts{0.0};
  for (std::size_t i = 1; i < start.size(); ++i)
    if (start[i] > 0) ts.push_back(start[i]);
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (env[i].m <= 0) continue;
    const double t0 = -env[i].b / env[i].m;
    const double a = std::max(start[i], 0.0);
    const double b_end = (i + 1 < env.size()) ? start[i + 1] : kInfinity;
    if (t0 > 0 && t0 >= a - 1e-12 && t0 <= b_end + 1e-12) ts.push_back(t0);
  }
  std::sort(ts.begin(), ts.end());

  auto env_at = [&](double t) {
    std::size_t i = env.size() - 1;
    while (i > 0 && start[i] > t) --i;
    return env[i].m * t + env[i].b;
  };

  std::vector<CurvePoint> pts;
  for (const double t : ts) {
    const double v = std::max(0.0, env_at(t));
    if (!pts.empty() && t <= pts.back().t + 1e-12) continue;
    if (!pts.empty() && pts.size() >= 2) {
      // drop interior collinear vertices (flat zero prefix in particular)
      const auto& a = pts[pts.size() - 2];
      const auto& b = pts.back();
      const double cross = (b.t - a.t) * (v - a.v) - (t - a.t) * (b.v - a.v);
      if (std::fabs(cross) <= 1e-12 * std::max(1.0, std::fabs(v))) pts.pop_back();
    }
    pts.push_back({t, std::max(v, pts.empty() ? 0.0 : pts.back().v)});
  }
  if (pts.empty() || pts.front().t != 0.0) pts.insert(pts.begin(), {0.0, 0.0});
  pts.front().v = 0.0;
  return Curve(std::move(pts), CurveMode::Linear, Extension::FinalSlope,
               std::max(env.back().m, 0.0));
}

/*!
 * Largest convex function below f (the biconjugate L(L_f)), built directly:
 * the lower convex hull of the breakpoint corners, with the extension ray
 * folded in. A bounded curve (Clamp) has hull identically zero, since any
 * rising convex minorant would eventually exceed the bound.
 */
inline Curve convex_hull(const Curve& f) {
  if (f.extension() == Extension::Clamp)
    return Curve({{0.0, 0.0}}, CurveMode::Linear, Extension::FinalSlope, 0.0);

  const auto& p = f.breakpoints();
  std::vector<CurvePoint> cand;
  cand.reserve(p.size());
  if (f.mode() == CurveMode::StepRightContinuous) {
    cand.push_back({0.0, 0.0});
    for (std::size_t i = 0; i + 1 < p.size(); ++i) cand.push_back({p[i + 1].t, p[i].v});
    if (f.extension() == Extension::FinalSlope || f.extension() == Extension::PlusInfinity)
      cand.push_back(p.back()); // ray anchor / wall corner
  } else {
    cand.assign(p.begin(), p.end());
  }

  std::vector<CurvePoint> hull;
  for (const auto& q : cand) {
    if (!hull.empty() && q.t <= hull.back().t + 1e-15) {
      if (q.v < hull.back().v && hull.size() > 1) hull.back().v = q.v;
      continue;
    }
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      if ((b.v - a.v) * (q.t - b.t) <= (q.v - b.v) * (b.t - a.t) + 1e-15) break;
      hull.pop_back();
    }
    hull.push_back(q);
  }

  if (f.extension() == Extension::PlusInfinity)
    return Curve(std::move(hull), CurveMode::Linear, Extension::PlusInfinity);

  const double tail = f.final_slope();
  while (hull.size() >= 2) {
    const auto& a = hull[hull.size() - 2];
    const auto& b = hull[hull.size() - 1];
    if ((b.v - a.v) / (b.t - a.t) <= tail + 1e-15) break;
    hull.pop_back();
  }
  return Curve(std::move(hull), CurveMode::Linear, Extension::FinalSlope, tail);
}

} // namespace bwest
