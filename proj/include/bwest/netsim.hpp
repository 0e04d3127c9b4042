#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "curve.hpp"
#include "minplus.hpp"
#include "traffic.hpp"
#include "types.hpp"

namespace bwest {

enum class Scheduler { Fifo, Drr };

/// Per-link cross traffic, either generated on demand or fixed events.
struct CrossSpec {
  enum class Kind { None, Cbr, Exponential, Pareto, OnOff, Events };
  Kind kind = Kind::None;
  double rate_mbps = 0.0;
  double pkt_size_mb = 0.0064; // 800 bytes
  double pareto_shape = 1.5;
  OnOffParams onoff{};
  PacketEvents fixed{};

  PacketEvents generate(double duration_ms, std::uint64_t seed) const {
    switch (kind) {
      case Kind::None:
        return PacketEvents{{}, TrafficLabel::Cross};
      case Kind::Cbr:
        return renewal_cross(CrossDist::Cbr, rate_mbps, pkt_size_mb, duration_ms, seed);
      case Kind::Exponential:
        return renewal_cross(CrossDist::Exponential, rate_mbps, pkt_size_mb, duration_ms, seed);
      case Kind::Pareto:
        return renewal_cross(CrossDist::Pareto, rate_mbps, pkt_size_mb, duration_ms, seed,
                             pareto_shape);
      case Kind::OnOff: {
        OnOffParams p = onoff;
        p.duration_ms = duration_ms;
        p.seed = seed;
        return onoff_trace(p);
      }
      case Kind::Events:
        return fixed;
    }
    return PacketEvents{{}, TrafficLabel::Cross};
  }
};

struct LinkSpec {
  double capacity_mbps = 0.0;
  double prop_delay_ms = 0.0;
  Scheduler scheduler = Scheduler::Fifo;
  double drr_quantum_mb = 0.0064; // one cross packet
  CrossSpec cross{};
  std::optional<double> buffer_mb{}; // unbounded when absent

  void validate() const {
    if (!(capacity_mbps > 0)) throw InvariantError("LinkSpec: capacity must be > 0");
    if (prop_delay_ms < 0) throw InvariantError("LinkSpec: negative propagation delay");
    if (scheduler == Scheduler::Drr && !(drr_quantum_mb > 0))
      throw InvariantError("LinkSpec: DRR quantum must be > 0");
    if (buffer_mb && !(*buffer_mb > 0)) throw InvariantError("LinkSpec: buffer must be > 0");
  }
};

struct ProbeMeta {
  double prop_delay_ms = 0.0;   // total propagation delay baked into departures
  double clock_offset_ms = 0.0; // extra shift applied to departures, if any
  bool partial = false;         // probe not fully drained before `until`
  double pkt_size_mb = 0.0;
  int n_packets = 0;
  double rate_mbps = 0.0;                // CBR probes
  std::vector<double> chirp_rates_mbps{}; // chirp probes
};

/*!
 * One measured probe. Arrivals step at sender transmission completion,
 * departures at receiver reception completion; both are raw timestamp
 * curves, so departures include propagation delay. Causality holds per
 * packet (departure >= arrival), not pointwise between the raw curves.
 */
struct ProbeRecord {
  Curve arrivals;
  Curve departures;
  int dropped = 0;
  ProbeMeta meta{};

  /// Departures moved into the sender clock frame (known delay removed).
  Curve departures_aligned() const {
    return departures.shifted_left(meta.prop_delay_ms + meta.clock_offset_ms);
  }
};

struct LinkOutput {
  ProbeRecord record;
  PacketEvents probe_departures; // receiver-side events, for chaining
  PacketEvents cross_departures;
  double busy_ms = 0.0;
  double served_mb = 0.0;
  int cross_dropped = 0;
};

namespace detail {

struct SimPkt {
  double t;
  double size;
  bool probe;
};

inline std::vector<SimPkt> merge_arrivals(const PacketEvents& probe, const PacketEvents& cross) {
  std::vector<SimPkt> all;
  all.reserve(probe.events.size() + cross.events.size());
  std::size_t i = 0, j = 0;
  while (i < probe.events.size() || j < cross.events.size()) {
    const bool take_cross =
        j < cross.events.size() &&
        (i >= probe.events.size() || cross.events[j].t_ms <= probe.events[i].t_ms);
    // ties: cross before probe (conservative for the estimators)
    if (take_cross) {
      all.push_back({cross.events[j].t_ms, cross.events[j].size_mb, false});
      ++j;
    } else {
      all.push_back({probe.events[i].t_ms, probe.events[i].size_mb, true});
      ++i;
    }
  }
  return all;
}

} // namespace detail

/*!
 * Event-driven emulation of one link. Packets queue at arrival and transmit
 * at capacity; FIFO serves in arrival order (ties cross-first), DRR serves a
 * cross and a probe queue with per-queue deficit counters incremented by the
 * quantum each round. Departure timestamps are transmission completion plus
 * propagation delay. A probe that cannot drain before `until` leaves the
 * record flagged partial.
 */
inline LinkOutput simulate_link(const PacketEvents& probe, const LinkSpec& link, double until_ms,
                                std::uint64_t seed) {
  link.validate();
  probe.validate();
  if (!probe.events.empty() && probe.events.back().t_ms > until_ms)
    throw InvariantError("simulate_link: probe events beyond `until`");

  const PacketEvents cross = link.cross.generate(until_ms, seed);
  const auto arrivals = detail::merge_arrivals(probe, cross);
  const double cap = mbps_to_slope(link.capacity_mbps); // Mb/ms

  LinkOutput out;
  out.probe_departures.label = TrafficLabel::Probe;
  out.cross_departures.label = TrafficLabel::Cross;
  int probe_drops = 0;
  bool partial = false;

  if (link.scheduler == Scheduler::Fifo) {
    // FIFO order equals arrival order: a single pass suffices
    double busy_until = 0.0;
    for (const auto& pkt : arrivals) {
      const double backlog = std::max(0.0, busy_until - pkt.t) * cap;
      if (link.buffer_mb && backlog + pkt.size > *link.buffer_mb + 1e-12) {
        (pkt.probe ? probe_drops : out.cross_dropped)++;
        continue;
      }
      const double start = std::max(pkt.t, busy_until);
      const double done = start + pkt.size / cap;
      busy_until = done;
      if (done > until_ms) {
        if (pkt.probe) partial = true;
        continue;
      }
      out.busy_ms += pkt.size / cap;
      out.served_mb += pkt.size;
      auto& dst = pkt.probe ? out.probe_departures : out.cross_departures;
      dst.events.push_back({done + link.prop_delay_ms, pkt.size});
    }
  } else {
    // DRR over two queues: 0 = cross, 1 = probe (tie rule: cross first)
    std::deque<detail::SimPkt> q[2];
    double deficit[2] = {0.0, 0.0};
    double queued_mb = 0.0;
    std::size_t next = 0;
    double now = 0.0;
    bool over_horizon = false;

    auto ingest = [&](double upto) {
      while (next < arrivals.size() && arrivals[next].t <= upto) {
        const auto& pkt = arrivals[next++];
        if (link.buffer_mb && queued_mb + pkt.size > *link.buffer_mb + 1e-12) {
          (pkt.probe ? probe_drops : out.cross_dropped)++;
          continue;
        }
        q[pkt.probe ? 1 : 0].push_back(pkt);
        queued_mb += pkt.size;
      }
    };

    ingest(0.0);
    while (!over_horizon) {
      if (q[0].empty() && q[1].empty()) {
        if (next >= arrivals.size()) break;
        now = std::max(now, arrivals[next].t);
        ingest(now);
        continue;
      }
      for (int qi : {0, 1}) {
        ingest(now);
        if (q[qi].empty()) {
          deficit[qi] = 0.0;
          continue;
        }
        deficit[qi] += link.drr_quantum_mb;
        while (!q[qi].empty() && q[qi].front().size <= deficit[qi] + 1e-12) {
          const auto pkt = q[qi].front();
          q[qi].pop_front();
          queued_mb -= pkt.size;
          deficit[qi] -= pkt.size;
          const double done = now + pkt.size / cap;
          if (done > until_ms) {
            if (pkt.probe) partial = true;
            over_horizon = true;
            break;
          }
          now = done;
          out.busy_ms += pkt.size / cap;
          out.served_mb += pkt.size;
          auto& dst = pkt.probe ? out.probe_departures : out.cross_departures;
          dst.events.push_back({done + link.prop_delay_ms, pkt.size});
          ingest(now);
        }
        if (over_horizon) break;
        if (q[qi].empty()) deficit[qi] = 0.0;
      }
    }
    if (!q[1].empty()) partial = true;
  }

  if (out.probe_departures.events.size() + static_cast<std::size_t>(probe_drops) <
      probe.events.size())
    partial = true;

  out.record.arrivals = to_curve(probe);
  out.record.departures = to_curve(out.probe_departures);
  out.record.dropped = probe_drops;
  out.record.meta.prop_delay_ms = link.prop_delay_ms;
  out.record.meta.partial = partial;
  out.record.meta.n_packets = static_cast<int>(probe.events.size());
  if (!probe.events.empty()) out.record.meta.pkt_size_mb = probe.events.front().size_mb;
  return out;
}

struct PathOutput {
  std::vector<ProbeRecord> per_link; // probe seen entering/leaving each link
  ProbeRecord end_to_end;
};

/*!
 * Chain of links; cross traffic is injected and removed per hop (each link
 * derives its own cross seed). The end-to-end record pairs the sender
 * arrivals with the final link's probe departures.
 */
inline PathOutput simulate_path(const PacketEvents& probe, std::span<const LinkSpec> links,
                                double until_ms, std::uint64_t seed) {
  if (links.empty()) throw InvariantError("simulate_path: need at least one link");
  PathOutput out;
  PacketEvents current = probe;
  double total_prop = 0.0;
  bool partial = false;
  int dropped = 0;
  Curve entry = to_curve(probe);
  for (std::size_t i = 0; i < links.size(); ++i) {
    // the horizon slides with the propagation delay already accumulated, so
    // a hop never rejects arrivals its predecessors produced legitimately
    auto hop = simulate_link(current, links[i], until_ms + total_prop, Rng::derive(seed, i + 1));
    total_prop += links[i].prop_delay_ms;
    partial = partial || hop.record.meta.partial;
    dropped += hop.record.dropped;
    out.per_link.push_back(hop.record);
    current = std::move(hop.probe_departures);
  }
  out.end_to_end.arrivals = entry;
  out.end_to_end.departures = to_curve(current);
  out.end_to_end.dropped = dropped;
  out.end_to_end.meta.prop_delay_ms = total_prop;
  out.end_to_end.meta.partial = partial;
  out.end_to_end.meta.n_packets = static_cast<int>(probe.events.size());
  if (!probe.events.empty()) out.end_to_end.meta.pkt_size_mb = probe.events.front().size_mb;
  return out;
}

/// Ideal min-plus linear reference system: D = A * S.
inline Curve linear_server(const Curve& arrivals, const Curve& service, const GridConfig& grid) {
  return convolve(arrivals, service, grid);
}

/*!
 * Closed-form fluid departure curve of a FIFO link with CBR cross traffic:
 * r*t while r <= C - r_c, else C*r/(r + r_c)*t. The analytic oracle used to
 * validate the packet simulator.
 */
inline Curve fifo_fluid(double r_mbps, double capacity_mbps, double cross_mbps,
                        double horizon_ms) {
  if (!(r_mbps > 0) || !(capacity_mbps > 0) || !(cross_mbps > 0))
    throw InvariantError("fifo_fluid: rates must be > 0");
  const double rate = (r_mbps <= capacity_mbps - cross_mbps)
                          ? r_mbps
                          : capacity_mbps * r_mbps / (r_mbps + cross_mbps);
  const double slope = mbps_to_slope(rate);
  std::vector<CurvePoint> pts{{0.0, 0.0}};
  if (horizon_ms > 0) pts.push_back({horizon_ms, slope * horizon_ms});
  return Curve(std::move(pts), CurveMode::Linear, Extension::FinalSlope, slope);
}

/// Shift departures to emulate a fixed receiver clock offset.
inline ProbeRecord with_clock_offset(const ProbeRecord& rec, double offset_ms) {
  ProbeRecord out = rec;
  out.departures = rec.departures.shifted_right(offset_ms);
  out.meta.clock_offset_ms = rec.meta.clock_offset_ms + offset_ms;
  return out;
}

} // namespace bwest
