#pragma once

#include <map>
#include <string>

// Built-in experiment presets. configs/<name>.json carries the same text for
// direct use with `bwest run`; a unit test keeps the two in sync.

namespace bwest::cli {

inline const std::map<std::string, std::string>& preset_configs() {
  static const std::map<std::string, std::string> presets{
      {"example1", R"json({
  "version": 1,
  "kind": "passive_onoff",
  "seed": 0,
  "runs": 10,
  "service": {"bucket_mb": 0.75, "bucket_rate_mbps": 25, "rl_rate_mbps": 100, "rl_latency_ms": 10},
  "grid": {"dt_ms": 1.0, "t_max_ms": 10000},
  "horizons_ms": [1000, 10000],
  "burstiness": [
    {"name": "high", "n_sources": 1, "peak_rate_mbps": 200},
    {"name": "med", "n_sources": 5, "peak_rate_mbps": 40},
    {"name": "low", "n_sources": 25, "peak_rate_mbps": 8}
  ],
  "loads": [
    {"name": "high", "p_on_off": 0.09, "q_off_on": 0.01},
    {"name": "low", "p_on_off": 0.19, "q_off_on": 0.01}
  ],
  "report_t_ms": 50
})json"},
      {"example2-generic", R"json({
  "version": 1,
  "kind": "passive_trace",
  "seed": 0,
  "runs": 5,
  "capacities_mbps": [70, 50, 30],
  "schedulers": ["fifo", "drr"],
  "prop_delay_ms": 10,
  "cross_fraction": 0.5,
  "cross_pkt_size_mb": 0.0064,
  "duration_ms": 2000,
  "trace": {
    "source": "frame_burst",
    "mean_rate_mbps": 17.1,
    "peak_rate_mbps": 154,
    "frame_interval_ms": 33,
    "big_frame_prob": 0.2,
    "big_frame_scale": 3.0,
    "pkt_size_mb": 0.011776
  },
  "rate_window_ms": [20, 200]
})json"},
      {"exp1-ratescan", R"json({
  "version": 1,
  "kind": "rate_scan",
  "seed": 0,
  "runs": 20,
  "links": [
    {"capacity_mbps": 100, "prop_delay_ms": 10, "cross": {"kind": "none"}},
    {"capacity_mbps": 50, "prop_delay_ms": 10,
     "cross": {"kind": "cbr", "rate_mbps": 25, "pkt_size_mb": 0.0064}}
  ],
  "probe": {"n_packets": 400, "pkt_size_mb": 0.011776},
  "scan": {"r_start_mbps": 4, "r_inc_mbps": 4, "r_limit_mbps": 60},
  "criterion": {"type": "backlog_convexity", "alpha_ms": 4, "window": 3},
  "until_ms": 2500,
  "grid": {"dt_ms": 0.1, "t_max_ms": 1700}
})json"},
      {"exp1-chirp", R"json({
  "version": 1,
  "kind": "chirp",
  "seed": 0,
  "runs": 20,
  "links": [
    {"capacity_mbps": 100, "prop_delay_ms": 10, "cross": {"kind": "none"}},
    {"capacity_mbps": 50, "prop_delay_ms": 10,
     "cross": {"kind": "cbr", "rate_mbps": 25, "pkt_size_mb": 0.0064}}
  ],
  "chirp": {"r_start_mbps": 4, "r_max_mbps": 100, "gamma": 1.05, "pkt_size_mb": 0.011776},
  "stop_persistence": 5,
  "until_ms": 2000,
  "grid": {"dt_ms": 0.1, "t_max_ms": 500}
})json"},
      {"exp2-crosstraffic", R"json({
  "version": 1,
  "kind": "rate_scan",
  "seed": 0,
  "runs": 20,
  "links": [
    {"capacity_mbps": 100, "prop_delay_ms": 10, "cross": {"kind": "none"}},
    {"capacity_mbps": 50, "prop_delay_ms": 10,
     "cross": {"kind": "cbr", "rate_mbps": 25, "pkt_size_mb": 0.0064}}
  ],
  "probe": {"n_packets": 400, "pkt_size_mb": 0.011776},
  "scan": {"r_start_mbps": 4, "r_inc_mbps": 4, "r_limit_mbps": 60},
  "criterion": {"type": "backlog_convexity", "alpha_ms": 4, "window": 3},
  "until_ms": 2500,
  "grid": {"dt_ms": 0.1, "t_max_ms": 1700},
  "cross_kinds": ["cbr", "exponential", "pareto"]
})json"},
      {"exp3-tandem", R"json({
  "version": 1,
  "kind": "tandem_scan",
  "seed": 0,
  "runs": 10,
  "n_links": 2,
  "access": {"capacity_mbps": 100, "prop_delay_ms": 10, "cross": {"kind": "none"}},
  "bottleneck": {"capacity_mbps": 50, "prop_delay_ms": 10,
                 "cross": {"kind": "exponential", "rate_mbps": 25, "pkt_size_mb": 0.0064}},
  "probe": {"n_packets": 400, "pkt_size_mb": 0.011776},
  "scan": {"r_start_mbps": 4, "r_inc_mbps": 4, "r_limit_mbps": 60},
  "criterion": {"type": "backlog_convexity", "alpha_ms": 4, "window": 3},
  "until_ms": 2500,
  "grid": {"dt_ms": 0.1, "t_max_ms": 1700}
})json"},
      {"fluid-demos", R"json({
  "version": 1,
  "kind": "fluid_demos",
  "seed": 0,
  "runs": 1,
  "quadratic_a_mb_per_ms2": 0.4,
  "scan_slopes_mb_per_ms": [10, 20, 30, 40, 50, 60, 70, 80],
  "scan_rate_limits_mb_per_ms": [40, 60, 80],
  "chirp": {"r_start_mb_per_ms": 10, "r_max_mb_per_ms": 200, "volume_step_mb": 10},
  "gammas": [1.2, 1.1, 1.05],
  "grid": {"dt_ms": 0.05, "t_max_ms": 500}
})json"},
  };
  return presets;
}

} // namespace bwest::cli
