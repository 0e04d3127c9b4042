#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "legendre.hpp"
#include "minplus.hpp"
#include "netsim.hpp"
#include "types.hpp"

namespace bwest {

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

enum class EstimatorMethod { Passive, RateScan, Chirp };

struct Estimate {
  Curve curve;
  EstimatorMethod method;
};

/// Average slope of a curve between two times, in Mbps.
inline double long_run_rate_mbps(const Curve& c, double t1_ms, double t2_ms) {
  if (!(t2_ms > t1_ms)) throw InvariantError("long_run_rate_mbps: need t2 > t1");
  return slope_to_mbps((c.value(t2_ms) - c.value(t1_ms)) / (t2_ms - t1_ms));
}

/*!
 * Passive estimator: the deconvolution of departures and arrivals,
 *   S~ = D (/) A,
 * restricted to the observation window. For a min-plus linear system the
 * result is a lower service curve that reconstructs D from A exactly:
 * A * S~ = D on the window. Curves must share one clock; known propagation
 * delay or clock offset is removed from D first (an unknown offset simply
 * time-shifts the estimate).
 */
inline Estimate passive_estimate(const Curve& arrivals, const Curve& departures_aligned,
                                 const GridConfig& grid, double out_t_max = -1.0) {
  return {deconvolve(departures_aligned, arrivals, grid.t_max, grid, out_t_max),
          EstimatorMethod::Passive};
}

inline Estimate passive_estimate(const ProbeRecord& rec, const GridConfig& grid,
                                 double out_t_max = -1.0) {
  if (rec.arrivals.breakpoints().size() < 2) throw DataError("passive_estimate: empty record");
  return passive_estimate(rec.arrivals, rec.departures_aligned(), grid, out_t_max);
}

// ---------------------------------------------------------------------------
// Probe targets
// ---------------------------------------------------------------------------

struct TrainSpec {
  int n_packets = 400;
  double pkt_size_mb = 0.011776; // 1472 bytes
  double volume_mb() const { return n_packets * pkt_size_mb; }
};

/// Anything a rate scan can probe with constant-rate trains.
class ProbeTarget {
 public:
  virtual ~ProbeTarget() = default;
  virtual ProbeRecord send_train(double rate_mbps, const TrainSpec& train) = 0;
};

/// Ideal fluid min-plus linear system D = A * S. Trains are fluid ramps,
/// unbounded by default (clip_to_volume limits them to the train volume).
class FluidLinearTarget : public ProbeTarget {
 public:
  FluidLinearTarget(Curve service, GridConfig grid, bool clip_to_volume = false)
      : service_(std::move(service)), grid_(grid), clip_(clip_to_volume) {}

  ProbeRecord send_train(double rate_mbps, const TrainSpec& train) override {
    Curve arrivals = clip_ ? clipped_ramp(rate_mbps, train.volume_mb()) : constant_rate(rate_mbps);
    ProbeRecord rec{arrivals, linear_server(arrivals, service_, grid_), 0, {}};
    rec.meta.rate_mbps = rate_mbps;
    rec.meta.n_packets = train.n_packets;
    rec.meta.pkt_size_mb = train.pkt_size_mb;
    return rec;
  }

 private:
  static Curve clipped_ramp(double rate_mbps, double volume_mb) {
    const double t_end = volume_mb / mbps_to_slope(rate_mbps);
    return Curve({{0.0, 0.0}, {t_end, volume_mb}}, CurveMode::Linear, Extension::Clamp);
  }

  Curve service_;
  GridConfig grid_;
  bool clip_;
};

/// Packet-level probing of a single link; each train sees fresh cross traffic.
class PacketLinkTarget : public ProbeTarget {
 public:
  PacketLinkTarget(LinkSpec link, double until_ms, std::uint64_t seed)
      : link_(std::move(link)), until_(until_ms), seed_(seed) {}

  ProbeRecord send_train(double rate_mbps, const TrainSpec& train) override {
    const auto probe = cbr_train(rate_mbps, train.n_packets, train.pkt_size_mb);
    auto out = simulate_link(probe, link_, until_, Rng::derive(seed_, ++counter_));
    out.record.meta.rate_mbps = rate_mbps;
    return out.record;
  }

 private:
  LinkSpec link_;
  double until_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Packet-level probing end-to-end over a tandem of links.
class PacketPathTarget : public ProbeTarget {
 public:
  PacketPathTarget(std::vector<LinkSpec> links, double until_ms, std::uint64_t seed)
      : links_(std::move(links)), until_(until_ms), seed_(seed) {}

  ProbeRecord send_train(double rate_mbps, const TrainSpec& train) override {
    const auto probe = cbr_train(rate_mbps, train.n_packets, train.pkt_size_mb);
    auto out = simulate_path(probe, links_, until_, Rng::derive(seed_, ++counter_));
    out.end_to_end.meta.rate_mbps = rate_mbps;
    return out.end_to_end;
  }

 private:
  std::vector<LinkSpec> links_;
  double until_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Rate scanning and stopping criteria
// ---------------------------------------------------------------------------

enum class ScanDecision { Continue, Stop };

struct BacklogConvexityCriterion {
  double alpha_ms = 4.0;
  int window = 3;
};
struct NonLinearityCriterion {
  double eps_b_mb = 0.011776; // one probe packet of slack
};
struct NoCriterion {};
using ScanCriterion = std::variant<NoCriterion, BacklogConvexityCriterion, NonLinearityCriterion>;

/// Accumulating rate-scan state: one entry per probed rate.
struct ScanState {
  struct Sample {
    double r_mbps = 0.0;
    double b_max_mb = 0.0;
    double delta_b_over_r_ms = 0.0;
    bool accepted = true; // consistent with the linear hypothesis so far
    bool warning = false; // train did not drain / record truncated
  };
  std::vector<Sample> samples;                   // all probed rates, r increasing
  std::vector<std::pair<double, double>> delta_b; // (r, dB(r)/r in ms)
  std::optional<double> stopped_at;               // first rate that broke linearity
  double alpha_ms = 4.0;
  int window = 3;

  bool stopped() const { return stopped_at.has_value(); }
};

namespace detail {

// Lower convex hull of (x, y) samples, queried with final-slope extrapolation.
class LowerHull {
 public:
  void add(double x, double y) {
    while (pts_.size() >= 2) {
      const auto& a = pts_[pts_.size() - 2];
      const auto& b = pts_.back();
      if ((b.second - a.second) * (x - b.first) <= (y - b.second) * (b.first - a.first)) break;
      pts_.pop_back();
    }
    pts_.push_back({x, y});
  }

  double extrapolate(double x) const {
    if (pts_.empty()) return 0.0;
    if (pts_.size() == 1) return pts_.back().second;
    if (x >= pts_.back().first) {
      const auto& a = pts_[pts_.size() - 2];
      const auto& b = pts_.back();
      const double slope = (b.second - a.second) / (b.first - a.first);
      return b.second + slope * (x - b.first);
    }
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      if (x <= pts_[i + 1].first) {
        const double w = (x - pts_[i].first) / (pts_[i + 1].first - pts_[i].first);
        return pts_[i].second + w * (pts_[i + 1].second - pts_[i].second);
      }
    }
    return pts_.back().second;
  }

 private:
  std::vector<std::pair<double, double>> pts_;
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

/*!
 * Backlog-convexity stopping test, applied to the newest sample in `state`.
 *
 * In the linear regime the measured B_max(r) samples trace a convex function
 * of r, so the newest sample must agree with the convex (biconjugate)
 * extrapolation of the samples accepted so far. dB(r) is that excess,
 * clamped at zero; dB(r)/r (in ms) is pushed into the state, and the scan
 * stops once the median of the trailing `window` values exceeds alpha.
 * Median filtering keeps a single outlier from ending a scan.
 *
 * Samples whose dB/r exceeds alpha do not extend the accepted prefix, so a
 * nonlinear jump keeps measuring against the linear-regime hull instead of
 * absorbing it. On Stop, stopped_at reports the first offending rate of the
 * trailing window.
 */
inline ScanDecision backlog_convexity_criterion(ScanState& state) {
  if (state.samples.empty()) throw InvariantError("backlog_convexity_criterion: no samples");
  auto& newest = state.samples.back();

  detail::LowerHull hull;
  hull.add(0.0, 0.0);
  for (std::size_t i = 0; i + 1 < state.samples.size(); ++i)
    if (state.samples[i].accepted) hull.add(state.samples[i].r_mbps, state.samples[i].b_max_mb);

  const double predicted = hull.extrapolate(newest.r_mbps);
  const double db = std::max(0.0, newest.b_max_mb - predicted);
  const double db_ms = db / mbps_to_slope(newest.r_mbps);
  newest.delta_b_over_r_ms = db_ms;
  newest.accepted = db_ms <= state.alpha_ms;
  state.delta_b.push_back({newest.r_mbps, db_ms});

  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(state.window),
                                              state.delta_b.size());
  std::vector<double> tail(w);
  for (std::size_t i = 0; i < w; ++i)
    tail[i] = state.delta_b[state.delta_b.size() - w + i].second;
  if (detail::median_of(std::move(tail)) > state.alpha_ms) {
    for (std::size_t i = state.delta_b.size() - w; i < state.delta_b.size(); ++i) {
      if (state.delta_b[i].second > state.alpha_ms) {
        state.stopped_at = state.delta_b[i].first;
        break;
      }
    }
    if (!state.stopped_at) state.stopped_at = newest.r_mbps;
    return ScanDecision::Stop;
  }
  return ScanDecision::Continue;
}

/*!
 * Non-linearity test over a history of probes with non-decreasing intensity:
 * a lower service curve obtained under the linearity hypothesis must satisfy
 * D_i >= A_i * S~_k for every earlier probe. Returns the smallest k whose
 * estimate is contradicted by some probe i <= k at some grid point (beyond
 * eps_b of slack), or nothing if all are consistent.
 */
inline std::optional<std::size_t> nonlinearity_criterion(std::span<const Curve> arrivals,
                                                         std::span<const Curve> departures,
                                                         std::span<const Curve> estimates,
                                                         double eps_b_mb, const GridConfig& grid) {
  if (arrivals.size() != departures.size() || arrivals.size() != estimates.size())
    throw InvariantError("nonlinearity_criterion: size mismatch");
  std::vector<std::vector<double>> dep_samples(departures.size());
  for (std::size_t i = 0; i < departures.size(); ++i) dep_samples[i] = departures[i].sample(grid);
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    for (std::size_t i = 0; i <= k; ++i) {
      const auto lhs = convolve(arrivals[i], estimates[k], grid).sample(grid);
      for (std::size_t t = 0; t < lhs.size(); ++t) {
        if (dep_samples[i][t] < lhs[t] - eps_b_mb) return k;
      }
    }
  }
  return std::nullopt;
}

inline std::optional<std::size_t> nonlinearity_criterion(std::span<const ProbeRecord> history,
                                                         std::span<const Curve> estimates,
                                                         double eps_b_mb, const GridConfig& grid) {
  std::vector<Curve> a, d;
  a.reserve(history.size());
  d.reserve(history.size());
  for (const auto& rec : history) {
    a.push_back(rec.arrivals);
    d.push_back(rec.departures_aligned());
  }
  return nonlinearity_criterion(a, d, estimates, eps_b_mb, grid);
}

struct ScanOptions {
  bool refine = false; // bisect the stop rate after the criterion fires
  int refine_iters = 3;
};

struct ScanResult {
  Estimate estimate;
  ScanState state;
  std::vector<ProbeRecord> records;
  std::vector<Curve> step_estimates; // estimate after each probed rate
};

namespace detail {

inline Curve estimate_from_samples(const ScanState& state) {
  std::vector<LegendreSample> samples;
  for (const auto& s : state.samples)
    if (s.accepted) samples.push_back({s.r_mbps, s.b_max_mb});
  if (samples.empty()) return Curve({{0.0, 0.0}}, CurveMode::Linear, Extension::FinalSlope, 0.0);
  const double limit = samples.back().r_mbps; // B_max treated as +infinity past it
  return legendre_back(LegendreFn(std::move(samples), limit));
}

} // namespace detail

/*!
 * Rate scanning: probe with constant-rate trains of increasing rate, record
 * B_max(r) = sup { A - D } per rate (departures moved into the sender clock
 * first, so queueing rather than propagation is measured), and stop at the
 * criterion or the rate limit. The estimate is the back transform of the
 * measured B_max samples treated as +infinity past the last accepted rate;
 * it is convex piecewise-linear with final slope equal to that rate.
 */
inline ScanResult rate_scan(ProbeTarget& target, double r_start_mbps, double r_inc_mbps,
                            double r_limit_mbps, const TrainSpec& train,
                            const ScanCriterion& criterion, const GridConfig& grid,
                            const ScanOptions& options = {}) {
  if (!(r_start_mbps > 0) || !(r_inc_mbps > 0))
    throw InvariantError("rate_scan: r_start and r_inc must be > 0");

  ScanResult out;
  if (const auto* bc = std::get_if<BacklogConvexityCriterion>(&criterion)) {
    out.state.alpha_ms = bc->alpha_ms;
    out.state.window = bc->window;
  }

  auto measure = [&](double r) {
    ProbeRecord rec = target.send_train(r, train);
    const auto bm = max_backlog(rec.arrivals, rec.departures_aligned(), grid.t_max, grid);
    ScanState::Sample s;
    s.r_mbps = r;
    s.b_max_mb = bm.mb;
    s.warning = rec.meta.partial;
    out.records.push_back(std::move(rec));
    return s;
  };

  for (double r = r_start_mbps; r <= r_limit_mbps + 1e-9; r += r_inc_mbps) {
    out.state.samples.push_back(measure(r));
    bool stop = false;
    if (std::holds_alternative<BacklogConvexityCriterion>(criterion)) {
      stop = backlog_convexity_criterion(out.state) == ScanDecision::Stop;
      out.step_estimates.push_back(detail::estimate_from_samples(out.state));
    } else if (const auto* nl = std::get_if<NonLinearityCriterion>(&criterion)) {
      // estimate under the linearity hypothesis from everything seen so far
      std::vector<LegendreSample> ls;
      for (const auto& s : out.state.samples) ls.push_back({s.r_mbps, s.b_max_mb});
      out.step_estimates.push_back(legendre_back(LegendreFn(std::move(ls), std::nullopt)));
      const auto fired = nonlinearity_criterion(out.records, out.step_estimates, nl->eps_b_mb, grid);
      if (fired) {
        out.state.stopped_at = out.state.samples[*fired].r_mbps;
        for (std::size_t i = *fired; i < out.state.samples.size(); ++i)
          out.state.samples[i].accepted = false;
        stop = true;
      }
    } else {
      out.step_estimates.push_back(detail::estimate_from_samples(out.state));
    }
    if (stop) break;
  }

  if (options.refine && out.state.stopped() &&
      std::holds_alternative<BacklogConvexityCriterion>(criterion)) {
    // narrow the boundary between the last accepted and the stop rate
    double lo = r_start_mbps - r_inc_mbps;
    for (const auto& s : out.state.samples)
      if (s.accepted) lo = std::max(lo, s.r_mbps);
    double hi = *out.state.stopped_at;
    detail::LowerHull hull;
    hull.add(0.0, 0.0);
    for (const auto& s : out.state.samples)
      if (s.accepted) hull.add(s.r_mbps, s.b_max_mb);
    for (int it = 0; it < options.refine_iters && hi - lo > 1e-6; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > 0)) break;
      const auto s = measure(mid);
      const double db = std::max(0.0, s.b_max_mb - hull.extrapolate(mid));
      if (db / mbps_to_slope(mid) > out.state.alpha_ms)
        hi = mid;
      else
        lo = mid;
    }
    out.state.stopped_at = hi;
  }

  out.estimate = {detail::estimate_from_samples(out.state), EstimatorMethod::RateScan};
  return out;
}

// ---------------------------------------------------------------------------
// Chirp estimation
// ---------------------------------------------------------------------------

/*!
 * Chirp estimator. The arrival staircase is treated as +infinity past the
 * last transmission (its transform stays finite at every rate) and the
 * departure staircase is continued at its final observed slope. The estimate
 * is the back transform of the samplewise difference of the two transforms,
 * taken on the chirp's own instantaneous-rate grid; it is convex and lower
 * bounds the service of a linear system, with equality for convex service
 * curves in the fluid case.
 */
inline Estimate chirp_estimate(const ProbeRecord& rec, const GridConfig& grid) {
  (void)grid; // transforms are exact on breakpoints; no grid pass needed
  const auto& a_pts = rec.arrivals.breakpoints();
  if (a_pts.size() < 4) throw DataError("chirp_estimate: degenerate chirp (< 3 packets)");
  const Curve d_aligned = rec.departures_aligned();
  const auto& d_pts = d_aligned.breakpoints();
  if (d_pts.size() < 3) throw DataError("chirp_estimate: degenerate departures");

  // keep the recorded interpolation mode (packet staircases or fluid ramps)
  const Curve a_ext(std::vector<CurvePoint>(a_pts), rec.arrivals.mode(),
                    Extension::PlusInfinity);
  // departures continue at the slope observed at the last measurement: the
  // final gap for staircases, the existing ray for fluid curves
  const std::size_t n = d_pts.size();
  const double d_slope =
      (d_aligned.mode() == CurveMode::Linear && d_aligned.extension() == Extension::FinalSlope)
          ? d_aligned.final_slope()
          : (d_pts[n - 1].v - d_pts[n - 2].v) / (d_pts[n - 1].t - d_pts[n - 2].t);
  const Curve d_ext(std::vector<CurvePoint>(d_pts), d_aligned.mode(), Extension::FinalSlope,
                    d_slope);

  std::vector<double> rates = rec.meta.chirp_rates_mbps;
  if (rates.empty()) {
    // fall back to the rates implied by the recorded transmission gaps
    for (std::size_t i = 2; i < a_pts.size(); ++i)
      rates.push_back(
          slope_to_mbps((a_pts[i].v - a_pts[i - 1].v) / (a_pts[i].t - a_pts[i - 1].t)));
  }
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());

  const double limit = slope_to_mbps(d_slope);
  std::vector<LegendreSample> diff;
  diff.reserve(rates.size());
  for (const double r : rates) {
    if (r > limit + 1e-9) continue;
    const double k = mbps_to_slope(r);
    const double vd = detail::conjugate_at_slope(d_ext, k);
    const double va = detail::conjugate_at_slope(a_ext, k);
    diff.push_back({r, std::max(0.0, vd - va)});
  }
  if (diff.empty()) diff.push_back({0.0, 0.0});
  return {legendre_back(LegendreFn(std::move(diff), limit)), EstimatorMethod::Chirp};
}

/// Receiver-side overload heuristic for a single chirp: index of the first
/// packet opening a run of `persistence` consecutive increasing one-way
/// delays, if any.
inline std::optional<std::size_t> chirp_overload_index(const ProbeRecord& rec,
                                                       int persistence = 5) {
  const auto& a = rec.arrivals.breakpoints();
  const auto& d = rec.departures.breakpoints();
  const std::size_t n = std::min(a.size(), d.size());
  if (n < 2) return std::nullopt;
  std::vector<double> delay;
  delay.reserve(n - 1);
  for (std::size_t i = 1; i < n; ++i) delay.push_back(d[i].t - a[i].t);
  int run = 0;
  for (std::size_t i = 1; i < delay.size(); ++i) {
    run = (delay[i] > delay[i - 1] + 1e-12) ? run + 1 : 0;
    if (run >= persistence) return i - static_cast<std::size_t>(persistence);
  }
  return std::nullopt;
}

/// Keep only the first n_packets of a chirp record.
inline ProbeRecord truncate_chirp(const ProbeRecord& rec, std::size_t n_packets) {
  auto cut = [&](const Curve& c) {
    const auto& p = c.breakpoints();
    const std::size_t keep = std::min(p.size(), n_packets + 1);
    return Curve(std::vector<CurvePoint>(p.begin(), p.begin() + keep),
                 CurveMode::StepRightContinuous, Extension::Clamp);
  };
  ProbeRecord out = rec;
  out.arrivals = cut(rec.arrivals);
  out.departures = cut(rec.departures);
  if (out.meta.chirp_rates_mbps.size() > n_packets) out.meta.chirp_rates_mbps.resize(n_packets);
  out.meta.n_packets = static_cast<int>(n_packets);
  return out;
}

// ---------------------------------------------------------------------------
// Analytic oracles
// ---------------------------------------------------------------------------

/// Maximum backlog a train of L megabits at rate r builds in a FIFO link with
/// capacity C and CBR cross rate r_c: zero in the linear regime, else
/// L * (1 - C / (r + r_c)).
inline double fifo_theoretical_bmax(double train_mb, double capacity_mbps, double cross_mbps,
                                    double rate_mbps) {
  if (!(train_mb > 0) || !(capacity_mbps > 0) || !(cross_mbps > 0) || !(rate_mbps > 0))
    throw InvariantError("fifo_theoretical_bmax: parameters must be > 0");
  if (rate_mbps <= capacity_mbps - cross_mbps) return 0.0;
  return train_mb * (1.0 - capacity_mbps / (rate_mbps + cross_mbps));
}

struct AvailBw {
  double mbps = 0.0;
  bool saturated = false; // true when the raw value was negative and clamped
};

/// Ground-truth available bandwidth of a constant-capacity link over
/// [t, t+tau] given the cumulative cross-traffic curve.
inline AvailBw available_bandwidth_oracle(double capacity_mbps, const Curve& cross, double t_ms,
                                          double tau_ms) {
  if (!(tau_ms > 0)) throw InvariantError("available_bandwidth_oracle: tau must be > 0");
  if (!cross.defined_on(t_ms + tau_ms))
    throw InvariantError("available_bandwidth_oracle: window beyond cross-traffic domain");
  const double lambda = slope_to_mbps((cross.value(t_ms + tau_ms) - cross.value(t_ms)) / tau_ms);
  AvailBw out;
  out.mbps = capacity_mbps - lambda;
  if (out.mbps < 0) {
    out.mbps = 0;
    out.saturated = true;
  }
  return out;
}

} // namespace bwest
