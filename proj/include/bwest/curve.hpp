#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "types.hpp"

namespace bwest {

enum class CurveMode { Linear, StepRightContinuous };
enum class Extension { FinalSlope, PlusInfinity, Clamp };

struct CurvePoint {
  double t; // ms
  double v; // Mb
};

/*!
 * Cumulative traffic/service function: non-decreasing, non-negative,
 * passing through the origin.
 *
 * The function is described by ordered breakpoints, interpolated linearly
 * (Linear) or held right-continuously (StepRightContinuous), and continued
 * past the last breakpoint by the extension rule:
 *   FinalSlope   - continue at a fixed slope (stored, or the last segment's);
 *   PlusInfinity - the value is +infinity beyond the last breakpoint;
 *   Clamp        - hold the last value forever.
 *
 * Breakpoint values are always finite; +infinity exists only through the
 * PlusInfinity extension and is represented by the IEEE infinity sentinel.
 */
class Curve {
 public:
  /// The zero curve.
  Curve() : pts_{{0.0, 0.0}}, mode_(CurveMode::Linear), ext_(Extension::Clamp) {}

  Curve(std::vector<CurvePoint> pts, CurveMode mode, Extension ext,
        std::optional<double> final_slope = std::nullopt)
      : pts_(std::move(pts)), mode_(mode), ext_(ext), final_slope_(final_slope) {
    validate();
  }

  static Curve from_grid_samples(const GridConfig& grid, std::span<const double> v,
                                 Extension ext = Extension::FinalSlope) {
    std::vector<CurvePoint> pts;
    pts.reserve(v.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double vi = v[i];
      if (std::isinf(vi)) {
        // trailing +infinity region becomes a PlusInfinity extension
        ext = Extension::PlusInfinity;
        break;
      }
      if (i == 0) vi = 0.0;
      vi = std::max(vi, prev); // absorb float noise in monotonicity
      pts.push_back({grid.time(i), vi});
      prev = vi;
    }
    if (pts.empty()) pts.push_back({0.0, 0.0});
    compress(pts);
    std::optional<double> slope;
    if (ext == Extension::FinalSlope && pts.size() < 2) slope = 0.0;
    return Curve(std::move(pts), CurveMode::Linear, ext, slope);
  }

  const std::vector<CurvePoint>& breakpoints() const { return pts_; }
  CurveMode mode() const { return mode_; }
  Extension extension() const { return ext_; }
  std::optional<double> stored_final_slope() const { return final_slope_; }

  double domain_end() const { return pts_.back().t; }

  /// True when the curve is finite on all of [0, horizon].
  bool defined_on(double horizon, double eps_t = 1e-9) const {
    return ext_ != Extension::PlusInfinity || horizon <= domain_end() + eps_t;
  }

  /// Effective slope beyond the last breakpoint, in Mb/ms.
  double final_slope() const {
    switch (ext_) {
      case Extension::Clamp:
        return 0.0;
      case Extension::PlusInfinity:
        return kInfinity;
      case Extension::FinalSlope:
        if (final_slope_) return *final_slope_;
        // validated: at least two breakpoints when no slope is stored
        return segment_slope(pts_.size() - 2);
    }
    return 0.0;
  }

  /// f(t). Total for t >= 0; +infinity only via the PlusInfinity extension.
  double value(double t) const {
    if (t < 0) throw InvariantError("Curve::value: t must be >= 0");
    const auto& p = pts_;
    if (t >= p.back().t) {
      const double dt = t - p.back().t;
      switch (ext_) {
        case Extension::Clamp:
          return p.back().v;
        case Extension::PlusInfinity:
          return dt > 1e-9 ? kInfinity : p.back().v;
        case Extension::FinalSlope:
          return p.back().v + final_slope() * dt;
      }
    }
    // binary search for the segment containing t
    const auto it = std::upper_bound(p.begin(), p.end(), t,
                                     [](double x, const CurvePoint& q) { return x < q.t; });
    const std::size_t i = static_cast<std::size_t>(it - p.begin()) - 1;
    if (mode_ == CurveMode::StepRightContinuous) return p[i].v;
    const double w = (t - p[i].t) / (p[i + 1].t - p[i].t);
    return p[i].v + w * (p[i + 1].v - p[i].v);
  }

  /// Values at every grid point, +infinity included.
  std::vector<double> sample(const GridConfig& grid) const {
    const std::size_t n = grid.size();
    std::vector<double> out(n);
    // walk breakpoints in step with the grid instead of per-point search
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = grid.time(i);
      if (t >= pts_.back().t) {
        out[i] = value(t);
        continue;
      }
      while (seg + 1 < pts_.size() && pts_[seg + 1].t <= t) ++seg;
      if (mode_ == CurveMode::StepRightContinuous) {
        out[i] = pts_[seg].v;
      } else {
        const double w = (t - pts_[seg].t) / (pts_[seg + 1].t - pts_[seg].t);
        out[i] = pts_[seg].v + w * (pts_[seg + 1].v - pts_[seg].v);
      }
    }
    return out;
  }

  double segment_slope(std::size_t i) const {
    return (pts_[i + 1].v - pts_[i].v) / (pts_[i + 1].t - pts_[i].t);
  }

  /// Successive slopes non-decreasing within tol. Step curves with more than
  /// one breakpoint contain jumps and are never treated as convex here.
  bool is_convex(double slope_tol = 1e-9) const {
    if (mode_ == CurveMode::StepRightContinuous && pts_.size() > 1) return false;
    double prev = -kInfinity;
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const double s = segment_slope(i);
      if (s < prev - slope_tol) return false;
      prev = s;
    }
    if (ext_ == Extension::FinalSlope || ext_ == Extension::Clamp) {
      if (final_slope() < prev - slope_tol) return false;
    }
    return true;
  }

  /// A time-shifted burst: zero up to some T, +infinity after.
  bool is_pure_delay() const {
    return ext_ == Extension::PlusInfinity && pts_.back().v == 0.0;
  }

  /// f(t - delta) for delta >= 0 (curve starts later).
  Curve shifted_right(double delta) const {
    if (delta < 0) throw InvariantError("shifted_right: delta must be >= 0");
    if (delta == 0) return *this;
    std::vector<CurvePoint> pts;
    pts.reserve(pts_.size() + 1);
    pts.push_back({0.0, 0.0});
    if (mode_ == CurveMode::Linear && pts_.size() > 1 && pts_[1].v > 0.0)
      pts.push_back({delta, 0.0});
    for (std::size_t i = 1; i < pts_.size(); ++i) pts.push_back({pts_[i].t + delta, pts_[i].v});
    if (pts.size() == 1 && pts_.size() == 1) pts.push_back({delta, 0.0});
    return Curve(std::move(pts), mode_, ext_, final_slope_);
  }

  /// f(t + delta) for delta >= 0 (curve starts earlier). Mass that would move
  /// before the origin is pinned just after it, preserving the origin rule.
  Curve shifted_left(double delta, double eps_t = 1e-9) const {
    if (delta < 0) throw InvariantError("shifted_left: delta must be >= 0");
    if (delta == 0) return *this;
    std::vector<CurvePoint> pts;
    pts.push_back({0.0, 0.0});
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      double t = pts_[i].t - delta;
      const double v = pts_[i].v;
      if (v <= 0.0 && t <= 0.0) continue;
      t = std::max(t, (pts.size() == 1) ? eps_t : pts.back().t + eps_t);
      pts.push_back({t, v});
    }
    return Curve(std::move(pts), mode_, ext_, final_slope_);
  }

 private:
  void validate() const {
    if (pts_.empty()) throw InvariantError("Curve: needs at least one breakpoint");
    if (pts_.front().t != 0.0 || pts_.front().v != 0.0)
      throw InvariantError("Curve: first breakpoint must be (0, 0)");
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (!std::isfinite(pts_[i].t) || !std::isfinite(pts_[i].v))
        throw InvariantError("Curve: breakpoints must be finite");
      if (i > 0) {
        if (pts_[i].t <= pts_[i - 1].t) throw InvariantError("Curve: breakpoint times must increase");
        if (pts_[i].v < pts_[i - 1].v) throw InvariantError("Curve: values must be non-decreasing");
      }
    }
    if (ext_ == Extension::FinalSlope && !final_slope_ && pts_.size() < 2)
      throw InvariantError("Curve: FinalSlope needs two breakpoints or a stored slope");
    if (final_slope_ && (!std::isfinite(*final_slope_) || *final_slope_ < 0))
      throw InvariantError("Curve: stored final slope must be finite and >= 0");
  }

  // drop interior points that are exactly collinear
  static void compress(std::vector<CurvePoint>& pts) {
    if (pts.size() < 3) return;
    std::vector<CurvePoint> out;
    out.reserve(pts.size());
    out.push_back(pts[0]);
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      const auto& a = out.back();
      const auto& b = pts[i];
      const auto& c = pts[i + 1];
      const double cross = (b.t - a.t) * (c.v - a.v) - (c.t - a.t) * (b.v - a.v);
      const double scale = std::max({std::fabs(c.t - a.t), std::fabs(c.v - a.v), 1.0});
      if (std::fabs(cross) > 1e-12 * scale) out.push_back(b);
    }
    out.push_back(pts.back());
    pts = std::move(out);
  }

  std::vector<CurvePoint> pts_;
  CurveMode mode_;
  Extension ext_;
  std::optional<double> final_slope_; // Mb/ms
};

// ---------------------------------------------------------------------------
// Canonical curve constructors
// ---------------------------------------------------------------------------

/// Burst function delta(t - shift): 0 on [0, shift], +infinity after.
/// The min-plus impulse; convolving with it shifts a curve in time.
inline Curve burst(double shift_ms = 0.0) {
  if (shift_ms < 0) throw InvariantError("burst: shift must be >= 0");
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  if (shift_ms > 0) pts.push_back({shift_ms, 0.0});
  return Curve(std::move(pts), CurveMode::Linear, Extension::PlusInfinity);
}

/// R * (t - T)_+ with R in Mbps and T in ms.
inline Curve rate_latency(double rate_mbps, double latency_ms) {
  if (rate_mbps < 0 || latency_ms < 0) throw InvariantError("rate_latency: negative parameter");
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  if (latency_ms > 0) pts.push_back({latency_ms, 0.0});
  return Curve(std::move(pts), CurveMode::Linear, Extension::FinalSlope, mbps_to_slope(rate_mbps));
}

/// C * t.
inline Curve constant_rate(double rate_mbps) {
  if (rate_mbps < 0) throw InvariantError("constant_rate: negative rate");
  return Curve({{0.0, 0.0}}, CurveMode::Linear, Extension::FinalSlope, mbps_to_slope(rate_mbps));
}

/// sigma + rho*t for t > 0, and 0 at t = 0. The jump at 0+ is realized as a
/// right-continuous step one eps_t after the origin.
inline Curve token_bucket(double burst_mb, double rate_mbps, double eps_t = 1e-9) {
  if (burst_mb < 0 || rate_mbps < 0) throw InvariantError("token_bucket: negative parameter");
  return Curve({{0.0, 0.0}, {eps_t, burst_mb}}, CurveMode::StepRightContinuous,
               Extension::FinalSlope, mbps_to_slope(rate_mbps));
}

/// a * t^2 (Mb, t in ms), sampled on the grid as a piecewise-linear curve.
inline Curve quadratic(double a_mb_per_ms2, const GridConfig& grid) {
  if (a_mb_per_ms2 < 0) throw InvariantError("quadratic: negative coefficient");
  grid.validate();
  const std::size_t n = grid.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.time(i);
    v[i] = a_mb_per_ms2 * t * t;
  }
  return Curve::from_grid_samples(grid, v, Extension::FinalSlope);
}

} // namespace bwest
