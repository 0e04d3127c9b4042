#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <thread>

#include "composer.hpp"
#include "estimator.hpp"
#include "io.hpp"
#include "scenario.hpp"
#include "traffic.hpp"

namespace bwest::cli {

namespace detail {

template <typename F>
void parallel_for(int jobs, int n, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int w = std::min(jobs, n);
  workers.reserve(static_cast<std::size_t>(w));
  for (int k = 0; k < w; ++k)
    workers.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& t : workers) t.join();
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n == 0 ? 0.0 : (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
}

inline double percentile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double idx = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (idx - lo) * (v[hi] - v[lo]);
}

// mean and 5/95 percentile bands of per-run derivative profiles
inline std::string derivative_band_csv(const std::vector<std::vector<std::pair<double, double>>>& runs) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "t_ms,mean_mbps,p5_mbps,p95_mbps\n";
  if (runs.empty()) return os.str();
  std::size_t n = runs[0].size();
  for (const auto& r : runs) n = std::min(n, r.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col;
    col.reserve(runs.size());
    for (const auto& r : runs) col.push_back(r[i].second);
    os << io::detail::fmt(runs[0][i].first) << ',' << io::detail::fmt(mean_of(col)) << ','
       << io::detail::fmt(percentile_of(col, 0.05)) << ','
       << io::detail::fmt(percentile_of(col, 0.95)) << '\n';
  }
  return os.str();
}


inline double sup_gap_vs(const Curve& ref, const Curve& est, double t_lo, double t_hi,
                         double step) {
  double gap = 0;
  for (double t = t_lo; t <= t_hi; t += step) gap = std::max(gap, ref.value(t) - est.value(t));
  return gap;
}

inline std::string method_name(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::Passive:
      return "passive";
    case EstimatorMethod::RateScan:
      return "rate_scan";
    case EstimatorMethod::Chirp:
      return "chirp";
  }
  return "?";
}

} // namespace detail

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

/// Estimate export: curve CSV plus a JSON sidecar carrying the method, the
/// stop rate and the per-step criterion trace when one exists.
inline void write_estimate(const std::filesystem::path& dir, const std::string& name,
                           const Estimate& est, const ScanState* state = nullptr) {
  io::write_file((dir / (name + ".csv")).string(), io::curve_to_csv(est.curve));
  json meta;
  meta["method"] = detail::method_name(est.method);
  if (state) {
    meta["stop_rate_mbps"] = state->stopped_at ? json(*state->stopped_at) : json();
    meta["alpha_ms"] = state->alpha_ms;
    meta["window"] = state->window;
    json trace = json::array();
    for (const auto& s : state->samples) {
      trace.push_back({{"r_mbps", s.r_mbps},
                       {"b_max_mb", s.b_max_mb},
                       {"delta_b_over_r_ms", s.delta_b_over_r_ms},
                       {"decision", s.accepted ? "continue" : "flagged"},
                       {"warning", s.warning}});
    }
    meta["criterion_trace"] = std::move(trace);
  }
  io::write_file((dir / (name + "_meta.json")).string(), meta.dump(2) + "\n");
}

/// ProbeRecord export: arrival and departure curve CSVs plus a metadata sidecar.
inline void write_probe_record(const std::filesystem::path& dir, const std::string& name,
                               const ProbeRecord& rec) {
  io::write_file((dir / (name + "_arrivals.csv")).string(), io::curve_to_csv(rec.arrivals));
  io::write_file((dir / (name + "_departures.csv")).string(), io::curve_to_csv(rec.departures));
  json meta{{"prop_delay_ms", rec.meta.prop_delay_ms},
            {"clock_offset_ms", rec.meta.clock_offset_ms},
            {"partial", rec.meta.partial},
            {"dropped", rec.dropped},
            {"n_packets", rec.meta.n_packets},
            {"pkt_size_mb", rec.meta.pkt_size_mb},
            {"rate_mbps", rec.meta.rate_mbps}};
  io::write_file((dir / (name + "_meta.json")).string(), meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Scenario kinds
// ---------------------------------------------------------------------------

namespace detail {

inline json run_passive_onoff(const json& cfg, const std::filesystem::path& out, int jobs) {
  require_keys(cfg,
               {"version", "kind", "seed", "runs", "service", "horizons_ms", "burstiness",
                "loads", "report_t_ms"},
               {"grid"}, "passive_onoff");
  const auto& sv = cfg.at("service");
  require_keys(sv, {"bucket_mb", "bucket_rate_mbps", "rl_rate_mbps", "rl_latency_ms"}, {},
               "service");
  const GridConfig grid = parse_grid(cfg, GridConfig{1.0, 10000.0, 1e-9, 1e-6});
  const Curve service =
      convolve(token_bucket(sv.at("bucket_mb"), sv.at("bucket_rate_mbps")),
               rate_latency(sv.at("rl_rate_mbps"), sv.at("rl_latency_ms")), grid);
  io::write_file((out / "service_curve.csv").string(), io::curve_to_csv(service));

  const int runs = cfg.at("runs").get<int>();
  const std::uint64_t seed0 = cfg.at("seed").get<std::uint64_t>();
  const double report_t = cfg.at("report_t_ms").get<double>();
  json combos = json::array();

  for (const auto& load : cfg.at("loads")) {
    for (const auto& burst : cfg.at("burstiness")) {
      for (const auto& hjson : cfg.at("horizons_ms")) {
        const double horizon = hjson.get<double>();
        std::vector<double> gaps(static_cast<std::size_t>(runs));
        std::vector<std::string> curve0(1);
        parallel_for(jobs, runs, [&](int i) {
          OnOffParams op;
          op.n_sources = burst.at("n_sources").get<int>();
          op.peak_rate_mbps = burst.at("peak_rate_mbps").get<double>();
          op.p_on_off = load.at("p_on_off").get<double>();
          op.q_off_on = load.at("q_off_on").get<double>();
          op.duration_ms = grid.t_max;
          op.seed = Rng::derive(seed0, static_cast<std::uint64_t>(i));
          const Curve A = to_curve(onoff_trace(op));
          const Curve D = linear_server(A, service, grid);
          GridConfig g = grid;
          g.t_max = horizon;
          const auto est = passive_estimate(A, D, g, report_t + 10.0);
          double gap = 0;
          for (double t = 0; t <= report_t; t += g.dt)
            gap = std::max(gap, service.value(t) - est.curve.value(t));
          gaps[static_cast<std::size_t>(i)] = gap;
          if (i == 0) curve0[0] = io::curve_to_csv(est.curve);
        });
        const std::string name = "est_" + load.at("name").get<std::string>() + "_" +
                                 burst.at("name").get<std::string>() + "_" +
                                 std::to_string(static_cast<int>(horizon)) + "ms";
        io::write_file((out / (name + ".csv")).string(), curve0[0]);
        combos.push_back({{"load", load.at("name")},
                          {"burstiness", burst.at("name")},
                          {"horizon_ms", horizon},
                          {"sup_gap_mb", gaps},
                          {"median_sup_gap_mb", median_of(gaps)},
                          {"reference_value_mb", service.value(report_t)}});
      }
    }
  }
  return json{{"combos", std::move(combos)}};
}

inline json run_passive_trace(const json& cfg, const std::filesystem::path& out, int jobs) {
  require_keys(cfg,
               {"version", "kind", "seed", "runs", "capacities_mbps", "schedulers",
                "prop_delay_ms", "cross_fraction", "cross_pkt_size_mb", "duration_ms", "trace",
                "rate_window_ms"},
               {"grid"}, "passive_trace");
  const double duration = cfg.at("duration_ms").get<double>();
  const GridConfig grid = parse_grid(cfg, GridConfig{0.5, duration, 1e-9, 1e-6});
  const int runs = cfg.at("runs").get<int>();
  const std::uint64_t seed0 = cfg.at("seed").get<std::uint64_t>();
  const auto& tj = cfg.at("trace");
  const double w0 = cfg.at("rate_window_ms")[0].get<double>();
  const double w1 = cfg.at("rate_window_ms")[1].get<double>();

  auto make_trace = [&](std::uint64_t seed) -> PacketEvents {
    const std::string source = tj.at("source").get<std::string>();
    if (source == "file") return load_trace(tj.at("path").get<std::string>());
    if (source != "frame_burst") throw ConfigError("trace: unknown source '" + source + "'");
    FrameTraceParams fp;
    fp.mean_rate_mbps = num_or(tj, "mean_rate_mbps", fp.mean_rate_mbps);
    fp.peak_rate_mbps = num_or(tj, "peak_rate_mbps", fp.peak_rate_mbps);
    fp.frame_interval_ms = num_or(tj, "frame_interval_ms", fp.frame_interval_ms);
    fp.big_frame_prob = num_or(tj, "big_frame_prob", fp.big_frame_prob);
    fp.big_frame_scale = num_or(tj, "big_frame_scale", fp.big_frame_scale);
    fp.pkt_size_mb = num_or(tj, "pkt_size_mb", fp.pkt_size_mb);
    fp.duration_ms = duration;
    fp.seed = seed;
    return frame_burst_trace(fp);
  };

  json cases = json::array();
  for (const auto& cj : cfg.at("capacities_mbps")) {
    const double C = cj.get<double>();
    for (const auto& sj : cfg.at("schedulers")) {
      const std::string sched = sj.get<std::string>();
      std::vector<double> rates(static_cast<std::size_t>(runs));
      std::vector<std::string> curve0(1);
      parallel_for(jobs, runs, [&](int i) {
        LinkSpec link;
        link.capacity_mbps = C;
        link.prop_delay_ms = cfg.at("prop_delay_ms").get<double>();
        link.scheduler = (sched == "drr") ? Scheduler::Drr : Scheduler::Fifo;
        link.cross.kind = CrossSpec::Kind::Cbr;
        link.cross.rate_mbps = C * cfg.at("cross_fraction").get<double>();
        link.cross.pkt_size_mb = cfg.at("cross_pkt_size_mb").get<double>();
        const auto probe = make_trace(Rng::derive(seed0, 1000 + static_cast<std::uint64_t>(i)));
        const auto sim = simulate_link(probe, link, duration + 5000.0,
                                       Rng::derive(seed0, static_cast<std::uint64_t>(i)));
        const auto est = passive_estimate(sim.record, grid, w1 + 100.0);
        rates[static_cast<std::size_t>(i)] = long_run_rate_mbps(est.curve, w0, w1);
        if (i == 0) curve0[0] = io::curve_to_csv(est.curve);
      });
      const std::string name =
          "est_c" + std::to_string(static_cast<int>(C)) + "_" + sched;
      io::write_file((out / (name + ".csv")).string(), curve0[0]);
      cases.push_back({{"capacity_mbps", C},
                       {"scheduler", sched},
                       {"available_mbps", C / 2},
                       {"est_rate_mbps", rates},
                       {"mean_est_rate_mbps", mean_of(rates)}});
    }
  }
  return json{{"cases", std::move(cases)}};
}

inline std::vector<LinkSpec> parse_links(const json& cfg) {
  std::vector<LinkSpec> links;
  for (const auto& lj : cfg.at("links")) links.push_back(parse_link(lj));
  if (links.empty()) throw ConfigError("links: need at least one");
  return links;
}

inline Curve reference_curve(const std::vector<LinkSpec>& links, double pkt_size_mb) {
  // a-priori bound: minimal one-way delay plus the unused capacity of the path
  double delay = 0.0, avail = kInfinity;
  for (const auto& l : links) {
    delay += l.prop_delay_ms + pkt_size_mb / mbps_to_slope(l.capacity_mbps);
    double cross = 0.0;
    if (l.cross.kind != CrossSpec::Kind::None)
      cross = (l.cross.kind == CrossSpec::Kind::OnOff)
                  ? l.cross.onoff.n_sources * l.cross.onoff.peak_rate_mbps *
                        l.cross.onoff.q_off_on /
                        (l.cross.onoff.p_on_off + l.cross.onoff.q_off_on)
                  : l.cross.rate_mbps;
    avail = std::min(avail, l.capacity_mbps - cross);
  }
  return rate_latency(std::max(avail, 0.0), delay);
}

inline json run_rate_scan_kind(const json& cfg, const std::filesystem::path& out, int jobs) {
  require_keys(cfg,
               {"version", "kind", "seed", "runs", "links", "probe", "scan", "criterion",
                "until_ms"},
               {"grid", "cross_kinds"}, "rate_scan");
  const GridConfig grid = parse_grid(cfg, GridConfig{0.1, 1700.0, 1e-9, 1e-6});
  const auto base_links = parse_links(cfg);
  const auto train = parse_probe(cfg.at("probe"));
  const auto scan = parse_scan(cfg.at("scan"));
  const auto criterion = parse_criterion(cfg.at("criterion"));
  const double until = cfg.at("until_ms").get<double>();
  const int runs = cfg.at("runs").get<int>();
  const std::uint64_t seed0 = cfg.at("seed").get<std::uint64_t>();

  std::vector<std::string> variants{"default"};
  if (cfg.contains("cross_kinds")) {
    variants.clear();
    for (const auto& v : cfg.at("cross_kinds")) variants.push_back(v.get<std::string>());
  }

  const auto ref = reference_curve(base_links, train.pkt_size_mb);
  io::write_file((out / "reference_curve.csv").string(), io::curve_to_csv(ref));

  json vjson = json::array();
  for (const auto& variant : variants) {
    auto links = base_links;
    if (variant != "default") {
      for (auto& l : links) {
        if (l.cross.kind == CrossSpec::Kind::None) continue;
        if (variant == "cbr")
          l.cross.kind = CrossSpec::Kind::Cbr;
        else if (variant == "exponential")
          l.cross.kind = CrossSpec::Kind::Exponential;
        else if (variant == "pareto")
          l.cross.kind = CrossSpec::Kind::Pareto;
        else
          throw ConfigError("cross_kinds: unknown kind '" + variant + "'");
      }
    }
    const auto vdir = out / variant;
    std::filesystem::create_directories(vdir);

    struct RunOut {
      ScanResult scan;
      std::vector<std::pair<double, double>> deriv;
    };
    std::vector<RunOut> results(static_cast<std::size_t>(runs));
    parallel_for(jobs, runs, [&](int i) {
      PacketPathTarget target(links, until, Rng::derive(seed0, 7000 + static_cast<std::uint64_t>(i)));
      auto& slot = results[static_cast<std::size_t>(i)];
      slot.scan = rate_scan(target, scan.r_start_mbps, scan.r_inc_mbps, scan.r_limit_mbps, train,
                            criterion, grid);
      GridConfig dgrid{0.5, 500.0, 1e-9, 1e-6};
      slot.deriv = derivative(slot.scan.estimate.curve, dgrid);
    });

    std::vector<double> stops, rates, ref_gaps;
    std::vector<std::vector<std::pair<double, double>>> derivs;
    for (int i = 0; i < runs; ++i) {
      const auto& r = results[static_cast<std::size_t>(i)];
      write_estimate(vdir, "estimate_run" + std::to_string(i), r.scan.estimate, &r.scan.state);
      if (r.scan.state.stopped_at) stops.push_back(*r.scan.state.stopped_at);
      rates.push_back(long_run_rate_mbps(r.scan.estimate.curve, 100.0, 500.0));
      ref_gaps.push_back(sup_gap_vs(ref, r.scan.estimate.curve, 0.0, 500.0, 0.5));
      derivs.push_back(r.deriv);
    }
    if (!results.empty() && !results[0].scan.records.empty())
      write_probe_record(vdir, "probe_run0_rate0", results[0].scan.records.front());
    io::write_file((vdir / "derivative_bands.csv").string(), derivative_band_csv(derivs));

    vjson.push_back({{"variant", variant},
                     {"stop_rates_mbps", stops},
                     {"n_stopped", stops.size()},
                     {"long_run_rate_mbps", rates},
                     {"mean_long_run_rate_mbps", mean_of(rates)},
                     {"std_long_run_rate_mbps", stddev_of(rates)},
                     {"mean_sup_gap_vs_reference_mb", mean_of(ref_gaps)}});
  }
  return json{{"variants", std::move(vjson)}};
}

inline json run_chirp_kind(const json& cfg, const std::filesystem::path& out, int jobs) {
  require_keys(cfg,
               {"version", "kind", "seed", "runs", "links", "chirp", "stop_persistence",
                "until_ms"},
               {"grid"}, "chirp");
  const GridConfig grid = parse_grid(cfg, GridConfig{0.1, 500.0, 1e-9, 1e-6});
  const auto links = parse_links(cfg);
  const auto& cj = cfg.at("chirp");
  require_keys(cj, {"r_start_mbps", "r_max_mbps", "gamma", "pkt_size_mb"}, {}, "chirp");
  const ChirpParams cp{cj.at("r_start_mbps").get<double>(), cj.at("r_max_mbps").get<double>(),
                       cj.at("gamma").get<double>(), cj.at("pkt_size_mb").get<double>()};
  const int persistence = cfg.at("stop_persistence").get<int>();
  const double until = cfg.at("until_ms").get<double>();
  const int runs = cfg.at("runs").get<int>();
  const std::uint64_t seed0 = cfg.at("seed").get<std::uint64_t>();

  const auto ref = reference_curve(links, cp.pkt_size_mb);
  io::write_file((out / "reference_curve.csv").string(), io::curve_to_csv(ref));

  struct RunOut {
    Estimate est{Curve{}, EstimatorMethod::Chirp};
    double stop_rate = -1;
    std::vector<std::pair<double, double>> deriv;
  };
  std::vector<RunOut> results(static_cast<std::size_t>(runs));
  parallel_for(jobs, runs, [&](int i) {
    const auto chirp = rate_chirp(cp);
    auto path = simulate_path(chirp.events, links, until,
                              Rng::derive(seed0, 9000 + static_cast<std::uint64_t>(i)));
    path.end_to_end.meta.chirp_rates_mbps = chirp.rates_mbps;
    ProbeRecord rec = path.end_to_end;
    // receiver-side overload heuristic: cut the record where one-way delays
    // grow persistently
    if (const auto idx = chirp_overload_index(rec, persistence)) {
      results[static_cast<std::size_t>(i)].stop_rate = chirp.rates_mbps[*idx];
      rec = truncate_chirp(rec, *idx + 1);
    }
    auto& slot = results[static_cast<std::size_t>(i)];
    slot.est = chirp_estimate(rec, grid);
    GridConfig dgrid{0.5, 500.0, 1e-9, 1e-6};
    slot.deriv = derivative(slot.est.curve, dgrid);
  });

  std::vector<double> stops, rates, ref_gaps;
  std::vector<std::vector<std::pair<double, double>>> derivs;
  for (int i = 0; i < runs; ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    write_estimate(out, "estimate_run" + std::to_string(i), r.est);
    if (r.stop_rate > 0) stops.push_back(r.stop_rate);
    rates.push_back(long_run_rate_mbps(r.est.curve, 100.0, 400.0));
    ref_gaps.push_back(sup_gap_vs(ref, r.est.curve, 0.0, 400.0, 0.5));
    derivs.push_back(r.deriv);
  }
  io::write_file((out / "derivative_bands.csv").string(), derivative_band_csv(derivs));
  return json{{"stop_rates_mbps", stops},
              {"long_run_rate_mbps", rates},
              {"mean_long_run_rate_mbps", mean_of(rates)},
              {"std_long_run_rate_mbps", stddev_of(rates)},
              {"mean_sup_gap_vs_reference_mb", mean_of(ref_gaps)}};
}

inline json run_tandem_kind(const json& cfg, const std::filesystem::path& out, int jobs) {
  require_keys(cfg,
               {"version", "kind", "seed", "runs", "n_links", "access", "bottleneck", "probe",
                "scan", "criterion", "until_ms"},
               {"grid"}, "tandem_scan");
  const GridConfig grid = parse_grid(cfg, GridConfig{0.1, 1700.0, 1e-9, 1e-6});
  const int n_links = cfg.at("n_links").get<int>();
  if (n_links < 1) throw ConfigError("tandem_scan: n_links must be >= 1");
  const LinkSpec access = parse_link(cfg.at("access"));
  const LinkSpec bottleneck = parse_link(cfg.at("bottleneck"));
  const auto train = parse_probe(cfg.at("probe"));
  const auto scan = parse_scan(cfg.at("scan"));
  const auto criterion = parse_criterion(cfg.at("criterion"));
  const double until = cfg.at("until_ms").get<double>();
  const int runs = cfg.at("runs").get<int>();
  const std::uint64_t seed0 = cfg.at("seed").get<std::uint64_t>();

  std::vector<LinkSpec> path{access};
  for (int i = 0; i < n_links; ++i) path.push_back(bottleneck);
  const Curve ref = reference_curve(path, train.pkt_size_mb);
  io::write_file((out / "reference_curve.csv").string(), io::curve_to_csv(ref));

  struct RunOut {
    std::vector<double> link_stop, link_rate;
    Curve conv, e2e;
    double conv_rate = 0, e2e_rate = 0;
    std::vector<std::pair<double, double>> conv_deriv, e2e_deriv;
    std::size_t tight_link = 0;
  };
  std::vector<RunOut> results(static_cast<std::size_t>(runs));
  parallel_for(jobs, runs, [&](int i) {
    auto& slot = results[static_cast<std::size_t>(i)];
    std::vector<Curve> per_link;
    for (int li = 0; li < n_links; ++li) {
      PacketLinkTarget tgt(bottleneck, until,
                           Rng::derive(seed0, 100 + 31ULL * static_cast<std::uint64_t>(i) +
                                                  static_cast<std::uint64_t>(li)));
      auto res = rate_scan(tgt, scan.r_start_mbps, scan.r_inc_mbps, scan.r_limit_mbps, train,
                           criterion, grid);
      slot.link_stop.push_back(res.state.stopped_at.value_or(-1.0));
      slot.link_rate.push_back(long_run_rate_mbps(res.estimate.curve, 100.0, 500.0));
      per_link.push_back(res.estimate.curve);
    }
    slot.conv = compose(per_link, grid);
    slot.tight_link = min_rate_compose(slot.link_rate).tight_link;

    GridConfig pgrid = grid;
    pgrid.t_max = grid.t_max + 200.0 * n_links;
    PacketPathTarget ptgt(path, until + 500.0 * n_links,
                          Rng::derive(seed0, 500 + static_cast<std::uint64_t>(i)));
    auto rese = rate_scan(ptgt, scan.r_start_mbps, scan.r_inc_mbps, scan.r_limit_mbps, train,
                          criterion, pgrid);
    slot.e2e = rese.estimate.curve;
    slot.conv_rate = long_run_rate_mbps(slot.conv, 100.0, 500.0);
    slot.e2e_rate = long_run_rate_mbps(slot.e2e, 100.0, 500.0);
    GridConfig dgrid{0.5, 500.0, 1e-9, 1e-6};
    slot.conv_deriv = derivative(slot.conv, dgrid);
    slot.e2e_deriv = derivative(slot.e2e, dgrid);
  });

  std::vector<std::vector<std::pair<double, double>>> conv_derivs, e2e_derivs;
  json per_run = json::array();
  for (int i = 0; i < runs; ++i) {
    auto& r = results[static_cast<std::size_t>(i)];
    conv_derivs.push_back(r.conv_deriv);
    e2e_derivs.push_back(r.e2e_deriv);
    if (i == 0) {
      io::write_file((out / "est0_convolution.csv").string(), io::curve_to_csv(r.conv));
      io::write_file((out / "est0_e2e.csv").string(), io::curve_to_csv(r.e2e));
    }
    per_run.push_back({{"link_stop_rates_mbps", r.link_stop},
                       {"link_long_run_rates_mbps", r.link_rate},
                       {"tight_link", r.tight_link},
                       {"convolution_rate_mbps", r.conv_rate},
                       {"e2e_rate_mbps", r.e2e_rate},
                       {"e2e_sup_gap_vs_reference_mb", sup_gap_vs(ref, r.e2e, 0.0, 500.0, 0.5)}});
  }
  io::write_file((out / "derivative_convolution.csv").string(),
                 derivative_band_csv(conv_derivs));
  io::write_file((out / "derivative_e2e.csv").string(), derivative_band_csv(e2e_derivs));

  std::vector<double> cr, er;
  for (const auto& r : results) {
    cr.push_back(r.conv_rate);
    er.push_back(r.e2e_rate);
  }
  return json{{"n_links", n_links},
              {"per_run", std::move(per_run)},
              {"mean_convolution_rate_mbps", mean_of(cr)},
              {"mean_e2e_rate_mbps", mean_of(er)}};
}

inline json run_fluid_demos(const json& cfg, const std::filesystem::path& out, int /*jobs*/) {
  require_keys(cfg,
               {"version", "kind", "seed", "runs", "quadratic_a_mb_per_ms2",
                "scan_slopes_mb_per_ms", "scan_rate_limits_mb_per_ms", "chirp", "gammas"},
               {"grid"}, "fluid_demos");
  const GridConfig grid = parse_grid(cfg, GridConfig{0.05, 500.0, 1e-9, 1e-6});
  const Curve S = quadratic(cfg.at("quadratic_a_mb_per_ms2").get<double>(), grid);
  io::write_file((out / "reference_quadratic.csv").string(), io::curve_to_csv(S));

  // rate scanning: one B_max sample per probing slope
  FluidLinearTarget target(S, grid);
  std::vector<LegendreSample> bmax;
  for (const auto& sj : cfg.at("scan_slopes_mb_per_ms")) {
    const double slope = sj.get<double>();
    auto rec = target.send_train(slope_to_mbps(slope), TrainSpec{});
    const auto bm = max_backlog(rec.arrivals, rec.departures_aligned(), grid.t_max, grid);
    bmax.push_back({slope_to_mbps(slope), bm.mb});
  }
  io::write_file((out / "bmax.csv").string(),
                 io::legendre_to_csv(LegendreFn(bmax, bmax.back().r_mbps)));

  // fixed comparison window: out to where the highest scanned slope is
  // tangent, so lower rate limits show their truncation loss
  const double slope_hi = cfg.at("scan_slopes_mb_per_ms").back().get<double>();
  const double t_window = slope_hi / (2.0 * cfg.at("quadratic_a_mb_per_ms2").get<double>());
  json recon = json::array();
  for (const auto& lj : cfg.at("scan_rate_limits_mb_per_ms")) {
    const double limit = lj.get<double>();
    std::vector<LegendreSample> kept;
    for (const auto& s : bmax)
      if (s.r_mbps <= slope_to_mbps(limit) + 1e-9) kept.push_back(s);
    const auto est = legendre_back(LegendreFn(kept, kept.back().r_mbps));
    const std::string name = "scan_recon_limit" + std::to_string(static_cast<int>(limit));
    io::write_file((out / (name + ".csv")).string(), io::curve_to_csv(est));
    double gap = 0;
    for (double t = 0; t <= t_window; t += grid.dt)
      gap = std::max(gap, S.value(t) - est.value(t));
    recon.push_back({{"rate_limit_mb_per_ms", limit}, {"sup_gap_mb", gap}});
  }

  // chirps with decreasing spread factors
  const auto& cj = cfg.at("chirp");
  json chirps = json::array();
  for (const auto& gj : cfg.at("gammas")) {
    const double gamma = gj.get<double>();
    const ChirpParams cp{slope_to_mbps(cj.at("r_start_mb_per_ms").get<double>()),
                         slope_to_mbps(cj.at("r_max_mb_per_ms").get<double>()), gamma,
                         cj.at("volume_step_mb").get<double>()};
    const auto A = fluid_chirp(cp);
    ProbeRecord rec{A, linear_server(A, S, grid), 0, {}};
    double r = cp.r_start_mbps;
    while (r < cp.r_max_mbps) {
      rec.meta.chirp_rates_mbps.push_back(r);
      r *= gamma;
    }
    const auto est = chirp_estimate(rec, grid);
    const int tag = static_cast<int>(std::lround(gamma * 100));
    io::write_file((out / ("chirp_recon_gamma" + std::to_string(tag) + ".csv")).string(),
                   io::curve_to_csv(est.curve));
    double gap = 0;
    const double t_lo = cj.at("r_start_mb_per_ms").get<double>() / 0.8;
    const double t_hi = std::min(grid.t_max, cj.at("r_max_mb_per_ms").get<double>() / 0.8);
    for (double t = t_lo; t <= t_hi; t += grid.dt)
      gap = std::max(gap, S.value(t) - est.curve.value(t));
    chirps.push_back({{"gamma", gamma}, {"sup_gap_mb", gap}});
  }
  return json{{"scan_reconstructions", std::move(recon)}, {"chirps", std::move(chirps)}};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/*!
 * Execute a scenario config and write its artifacts plus summary.json under
 * out_dir. Returns the summary. All artifacts are deterministic functions of
 * the config (seed included); wall-clock runtime is reported by the CLI, not
 * stored in files.
 */
inline json run_config(json cfg, const std::string& out_dir, int jobs = 1,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  for (const auto& [k, v] : overrides) apply_override(cfg, k, v);
  if (!cfg.is_object()) throw ConfigError("config: expected a JSON object");
  if (!cfg.contains("version") || cfg.at("version") != 1)
    throw ConfigError("config: unsupported or missing version (expected 1)");
  if (!cfg.contains("kind") || !cfg.at("kind").is_string())
    throw ConfigError("config: missing kind");
  if (!cfg.contains("seed")) cfg["seed"] = 0;
  if (!cfg.contains("runs")) cfg["runs"] = 20;
  if (cfg.at("runs").get<int>() < 1) throw ConfigError("config: runs must be >= 1");

  const std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);

  const std::string kind = cfg.at("kind").get<std::string>();
  json results;
  try {
    if (kind == "passive_onoff")
      results = detail::run_passive_onoff(cfg, out, jobs);
    else if (kind == "passive_trace")
      results = detail::run_passive_trace(cfg, out, jobs);
    else if (kind == "rate_scan")
      results = detail::run_rate_scan_kind(cfg, out, jobs);
    else if (kind == "chirp")
      results = detail::run_chirp_kind(cfg, out, jobs);
    else if (kind == "tandem_scan")
      results = detail::run_tandem_kind(cfg, out, jobs);
    else if (kind == "fluid_demos")
      results = detail::run_fluid_demos(cfg, out, jobs);
    else
      throw ConfigError("config: unknown kind '" + kind + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimError(e.what());
  }

  json summary{{"schema_version", 1},
               {"kind", kind},
               {"config_hash", config_hash(cfg)},
               {"seed", cfg.at("seed")},
               {"runs", cfg.at("runs")},
               {"results", std::move(results)}};
  io::write_file((out / "summary.json").string(), summary.dump(2) + "\n");
  io::write_file((out / "config.json").string(), cfg.dump(2) + "\n");
  return summary;
}

} // namespace bwest::cli
