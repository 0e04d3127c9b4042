#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "curve.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace bwest {

enum class TrafficLabel { Probe, Cross };

struct PacketEvent {
  double t_ms;    // non-decreasing
  double size_mb; // > 0
};

struct PacketEvents {
  std::vector<PacketEvent> events;
  TrafficLabel label = TrafficLabel::Probe;

  double total_mb() const {
    double s = 0;
    for (const auto& e : events) s += e.size_mb;
    return s;
  }
  double last_time_ms() const { return events.empty() ? 0.0 : events.back().t_ms; }

  void validate() const {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!(events[i].size_mb > 0)) throw InvariantError("PacketEvents: sizes must be > 0");
      if (i > 0 && events[i].t_ms < events[i - 1].t_ms)
        throw InvariantError("PacketEvents: times must be non-decreasing");
    }
  }
};

/// Cumulative staircase of the events; the total volume is preserved exactly.
/// An event at t = 0 steps one eps_t after the origin.
inline Curve to_curve(const PacketEvents& ev, double eps_t = 1e-9) {
  ev.validate();
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  double cum = 0.0;
  for (std::size_t i = 0; i < ev.events.size(); ++i) {
    cum += ev.events[i].size_mb;
    if (i + 1 < ev.events.size() && ev.events[i + 1].t_ms == ev.events[i].t_ms)
      continue; // merge simultaneous packets into one step
    double t = std::max(ev.events[i].t_ms, eps_t);
    if (t <= pts.back().t) t = pts.back().t + eps_t;
    pts.push_back({t, cum});
  }
  return Curve(std::move(pts), CurveMode::StepRightContinuous, Extension::Clamp);
}

/// Constant-rate train: packet i leaves the sender at start + i*pkt/rate.
inline PacketEvents cbr_train(double rate_mbps, int n_packets, double pkt_size_mb,
                              double start_ms = 0.0) {
  if (!(rate_mbps > 0)) throw InvariantError("cbr_train: rate must be > 0");
  if (n_packets < 2) throw InvariantError("cbr_train: need at least 2 packets");
  if (!(pkt_size_mb > 0)) throw InvariantError("cbr_train: packet size must be > 0");
  const double gap = pkt_size_mb / mbps_to_slope(rate_mbps);
  PacketEvents out;
  out.label = TrafficLabel::Probe;
  out.events.reserve(static_cast<std::size_t>(n_packets));
  for (int i = 0; i < n_packets; ++i) out.events.push_back({start_ms + i * gap, pkt_size_mb});
  return out;
}

struct ChirpParams {
  double r_start_mbps;
  double r_max_mbps;
  double gamma; // spread factor > 1
  double pkt_size_mb;

  void validate() const {
    if (!(r_start_mbps > 0) || !(r_start_mbps < r_max_mbps))
      throw InvariantError("ChirpParams: need 0 < r_start < r_max");
    if (!(gamma > 1)) throw InvariantError("ChirpParams: gamma must be > 1");
    if (!(pkt_size_mb > 0)) throw InvariantError("ChirpParams: packet size must be > 0");
  }
};

struct ChirpTrain {
  PacketEvents events;
  std::vector<double> rates_mbps; // instantaneous rate of each packet
};

/*!
 * Single train with geometrically shrinking inter-packet gaps. Packet k
 * (1-based) carries instantaneous rate r_start*gamma^(k-1) and follows its
 * predecessor after pkt_size/rate. Emission halts once the instantaneous
 * rate reaches r_max (inclusive); the terminating packet is not sent.
 */
inline ChirpTrain rate_chirp(const ChirpParams& p) {
  p.validate();
  ChirpTrain out;
  out.events.label = TrafficLabel::Probe;
  double t = 0.0;
  double rate = p.r_start_mbps;
  while (rate < p.r_max_mbps) {
    out.events.events.push_back({t, p.pkt_size_mb});
    out.rates_mbps.push_back(rate);
    t += p.pkt_size_mb / mbps_to_slope(rate);
    rate *= p.gamma;
  }
  return out;
}

/// Fluid idealization of a chirp: piecewise-linear arrivals whose slope steps
/// through the same geometric rate ladder, one packet volume per segment.
inline Curve fluid_chirp(const ChirpParams& p) {
  p.validate();
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  double t = 0.0, v = 0.0, rate = p.r_start_mbps;
  while (rate < p.r_max_mbps) {
    t += p.pkt_size_mb / mbps_to_slope(rate);
    v += p.pkt_size_mb;
    pts.push_back({t, v});
    rate *= p.gamma;
  }
  if (pts.size() < 2) throw InvariantError("fluid_chirp: parameters produce no segments");
  return Curve(std::move(pts), CurveMode::Linear, Extension::PlusInfinity);
}

struct OnOffParams {
  int n_sources = 1;
  double peak_rate_mbps = 0.0;
  double p_on_off = 0.0; // On -> Off per slot
  double q_off_on = 0.0; // Off -> On per slot
  double slot_ms = 1.0;
  double duration_ms = 0.0;
  std::uint64_t seed = 0;
  double warmup_ms = 1000.0; // sources start Off; this much lead-in is discarded

  void validate() const {
    if (n_sources < 1) throw InvariantError("OnOffParams: need at least one source");
    if (p_on_off < 0 || p_on_off > 1 || q_off_on < 0 || q_off_on > 1)
      throw InvariantError("OnOffParams: probabilities must lie in [0, 1]");
    if (!(slot_ms > 0)) throw InvariantError("OnOffParams: slot must be > 0");
    if (peak_rate_mbps < 0 || duration_ms < 0 || warmup_ms < 0)
      throw InvariantError("OnOffParams: negative parameter");
  }
};

/*!
 * Aggregate of independent two-state Markov On-Off sources sampled per slot.
 * A source in On emits its full per-slot fluid volume as one event at the
 * slot end. Long-run mean rate: n * peak * q / (p + q).
 */
inline PacketEvents onoff_trace(const OnOffParams& p) {
  p.validate();
  const auto warm_slots = static_cast<std::size_t>(std::ceil(p.warmup_ms / p.slot_ms));
  const auto total_slots =
      warm_slots + static_cast<std::size_t>(std::ceil(p.duration_ms / p.slot_ms));
  std::vector<std::uint32_t> on_count(total_slots, 0);
  for (int s = 0; s < p.n_sources; ++s) {
    Rng rng(Rng::derive(p.seed, static_cast<std::uint64_t>(s)));
    bool on = false;
    for (std::size_t k = 0; k < total_slots; ++k) {
      if (on) ++on_count[k];
      on = on ? !rng.bernoulli(p.p_on_off) : rng.bernoulli(p.q_off_on);
    }
  }
  const double per_slot = p.peak_rate_mbps * p.slot_ms * 1e-3; // Mb per on-source slot
  PacketEvents out;
  out.label = TrafficLabel::Cross;
  for (std::size_t k = warm_slots; k < total_slots; ++k) {
    if (on_count[k] == 0) continue;
    const double t_end = (k + 1 - warm_slots) * p.slot_ms;
    if (t_end > p.duration_ms + p.slot_ms * 0.5) break;
    out.events.push_back({t_end, on_count[k] * per_slot});
  }
  return out;
}

enum class CrossDist { Cbr, Exponential, Pareto };

/*!
 * Renewal packet process with the given mean rate. Interarrival mean is
 * pkt_size/mean_rate; the Pareto scale is mean*(shape-1)/shape so the mean
 * matches exactly. CBR gets a seeded random phase so repeated experiments
 * decorrelate.
 */
inline PacketEvents renewal_cross(CrossDist dist, double mean_rate_mbps, double pkt_size_mb,
                                  double duration_ms, std::uint64_t seed, double pareto_shape = 1.5) {
  if (!(mean_rate_mbps > 0)) throw InvariantError("renewal_cross: rate must be > 0");
  if (!(pkt_size_mb > 0)) throw InvariantError("renewal_cross: packet size must be > 0");
  if (dist == CrossDist::Pareto && !(pareto_shape > 1))
    throw InvariantError("renewal_cross: Pareto shape must be > 1 (finite mean)");
  const double mean_gap = pkt_size_mb / mbps_to_slope(mean_rate_mbps);
  Rng rng(Rng::derive(seed, 0x7261ffULL));
  auto next_gap = [&]() {
    switch (dist) {
      case CrossDist::Exponential:
        return rng.exponential(mean_gap);
      case CrossDist::Pareto:
        return rng.pareto(pareto_shape, mean_gap);
      case CrossDist::Cbr:
      default:
        return mean_gap;
    }
  };
  PacketEvents out;
  out.label = TrafficLabel::Cross;
  double t = (dist == CrossDist::Cbr) ? rng.uniform() * mean_gap : next_gap();
  while (t <= duration_ms) {
    out.events.push_back({t, pkt_size_mb});
    t += next_gap();
  }
  return out;
}

struct FrameTraceParams {
  double mean_rate_mbps = 17.1;
  double peak_rate_mbps = 154.0;
  double frame_interval_ms = 33.0;
  double big_frame_prob = 0.2;
  double big_frame_scale = 3.0;
  double pkt_size_mb = 0.011776;
  double duration_ms = 2000.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(mean_rate_mbps > 0) || !(peak_rate_mbps > mean_rate_mbps))
      throw InvariantError("FrameTraceParams: need peak > mean > 0");
    if (!(frame_interval_ms > 0) || !(pkt_size_mb > 0) || !(duration_ms > 0))
      throw InvariantError("FrameTraceParams: non-positive parameter");
    if (big_frame_prob < 0 || big_frame_prob >= 1 || big_frame_prob * big_frame_scale >= 1)
      throw InvariantError("FrameTraceParams: frame size mixture must keep a positive mean");
    // the largest frame must finish transmitting within its own interval
    if (big_frame_scale * mean_rate_mbps > peak_rate_mbps)
      throw InvariantError("FrameTraceParams: peak rate too low for the largest frame");
  }
};

/*!
 * Video-like bursty trace: one frame per interval, sent as a back-to-back
 * packet burst at the peak rate. Frame sizes follow a two-point mixture
 * (occasional large frames, scaled-down small ones) whose mean matches the
 * requested rate exactly.
 */
inline PacketEvents frame_burst_trace(const FrameTraceParams& p) {
  p.validate();
  Rng rng(Rng::derive(p.seed, 0xf7a3e5ULL));
  const double mean_frame = p.mean_rate_mbps * p.frame_interval_ms * 1e-3;
  const double small_scale = (1.0 - p.big_frame_prob * p.big_frame_scale) / (1.0 - p.big_frame_prob);
  PacketEvents out;
  out.label = TrafficLabel::Probe;
  for (double t0 = 0.0; t0 < p.duration_ms; t0 += p.frame_interval_ms) {
    const double frame =
        mean_frame * (rng.bernoulli(p.big_frame_prob) ? p.big_frame_scale : small_scale);
    double sent = 0.0;
    while (sent + p.pkt_size_mb <= frame + 1e-12) {
      sent += p.pkt_size_mb;
      out.events.push_back({t0 + sent / mbps_to_slope(p.peak_rate_mbps), p.pkt_size_mb});
    }
    const double rest = frame - sent;
    if (rest > 1e-9)
      out.events.push_back({t0 + frame / mbps_to_slope(p.peak_rate_mbps), rest});
  }
  return out;
}

/// Split fluid per-slot volumes into wire-sized packets at the same
/// timestamps; remainders carry over so the total volume is preserved.
inline PacketEvents packetize(const PacketEvents& fluid, double pkt_size_mb) {
  if (!(pkt_size_mb > 0)) throw InvariantError("packetize: packet size must be > 0");
  PacketEvents out;
  out.label = fluid.label;
  double carry = 0.0;
  for (const auto& e : fluid.events) {
    carry += e.size_mb;
    while (carry >= pkt_size_mb) {
      out.events.push_back({e.t_ms, pkt_size_mb});
      carry -= pkt_size_mb;
    }
  }
  if (carry > 1e-12) out.events.push_back({fluid.last_time_ms(), carry});
  return out;
}

/// Trace ingestion: CSV rows `t_ms,size_mb`, sorted by time. A header row and
/// `#` comment lines are permitted.
inline PacketEvents load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_trace: cannot open " + path);
  PacketEvents out;
  out.label = TrafficLabel::Probe;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find("t_ms") != std::string::npos) continue;
    std::istringstream ls(line);
    double t, sz;
    char comma;
    if (!(ls >> t >> comma >> sz) || comma != ',')
      throw DataError("load_trace: malformed row at line " + std::to_string(lineno));
    if (!out.events.empty() && t < out.events.back().t_ms)
      throw DataError("load_trace: non-monotone times at line " + std::to_string(lineno));
    if (!(sz > 0)) throw DataError("load_trace: non-positive size at line " + std::to_string(lineno));
    out.events.push_back({t, sz});
  }
  return out;
}

} // namespace bwest
