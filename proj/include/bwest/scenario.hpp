#pragma once

#include <json.hpp>

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimator.hpp"
#include "netsim.hpp"
#include "types.hpp"

// JSON scenario schema, version 1. Shared building blocks:
//   link:  {capacity_mbps, prop_delay_ms, scheduler, drr_quantum_mb?,
//           buffer_mb?, cross: {kind, rate_mbps?, pkt_size_mb?, pareto_shape?}}
//   probe: {n_packets, pkt_size_mb}
//   scan:  {r_start_mbps, r_inc_mbps, r_limit_mbps}
// Top level: {version, kind, seed, runs, ...kind-specific...}

namespace bwest::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& required,
                         const std::set<std::string>& optional, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& k : required)
    if (!j.contains(k)) throw ConfigError(where + ": missing key '" + k + "'");
  for (const auto& [k, v] : j.items())
    if (!required.count(k) && !optional.count(k))
      throw ConfigError(where + ": unknown key '" + k + "'");
}

inline double num(const json& j, const std::string& key, const std::string& where) {
  if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

} // namespace detail

inline CrossSpec parse_cross(const json& j) {
  detail::require_keys(j, {"kind"},
                       {"rate_mbps", "pkt_size_mb", "pareto_shape", "n_sources", "peak_rate_mbps",
                        "p_on_off", "q_off_on", "slot_ms"},
                       "cross");
  CrossSpec c;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    c.kind = CrossSpec::Kind::None;
    return c;
  }
  if (kind == "cbr")
    c.kind = CrossSpec::Kind::Cbr;
  else if (kind == "exponential")
    c.kind = CrossSpec::Kind::Exponential;
  else if (kind == "pareto")
    c.kind = CrossSpec::Kind::Pareto;
  else if (kind == "onoff")
    c.kind = CrossSpec::Kind::OnOff;
  else
    throw ConfigError("cross: unknown kind '" + kind + "'");
  if (c.kind == CrossSpec::Kind::OnOff) {
    c.onoff.n_sources = static_cast<int>(detail::num_or(j, "n_sources", 1));
    c.onoff.peak_rate_mbps = detail::num(j, "peak_rate_mbps", "cross");
    c.onoff.p_on_off = detail::num(j, "p_on_off", "cross");
    c.onoff.q_off_on = detail::num(j, "q_off_on", "cross");
    c.onoff.slot_ms = detail::num_or(j, "slot_ms", 1.0);
  } else {
    c.rate_mbps = detail::num(j, "rate_mbps", "cross");
    c.pkt_size_mb = detail::num_or(j, "pkt_size_mb", 0.0064);
    c.pareto_shape = detail::num_or(j, "pareto_shape", 1.5);
  }
  return c;
}

inline LinkSpec parse_link(const json& j) {
  detail::require_keys(j, {"capacity_mbps"},
                       {"prop_delay_ms", "scheduler", "drr_quantum_mb", "buffer_mb", "cross"},
                       "link");
  LinkSpec l;
  l.capacity_mbps = detail::num(j, "capacity_mbps", "link");
  l.prop_delay_ms = detail::num_or(j, "prop_delay_ms", 0.0);
  if (j.contains("scheduler")) {
    const std::string s = j.at("scheduler").get<std::string>();
    if (s == "fifo")
      l.scheduler = Scheduler::Fifo;
    else if (s == "drr")
      l.scheduler = Scheduler::Drr;
    else
      throw ConfigError("link: unknown scheduler '" + s + "'");
  }
  l.drr_quantum_mb = detail::num_or(j, "drr_quantum_mb", 0.0064);
  if (j.contains("buffer_mb")) l.buffer_mb = j.at("buffer_mb").get<double>();
  if (j.contains("cross")) l.cross = parse_cross(j.at("cross"));
  try {
    l.validate();
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("link: ") + e.what());
  }
  return l;
}

inline GridConfig parse_grid(const json& j, GridConfig fallback) {
  if (!j.contains("grid")) return fallback;
  const auto& g = j.at("grid");
  detail::require_keys(g, {}, {"dt_ms", "t_max_ms"}, "grid");
  GridConfig out = fallback;
  out.dt = detail::num_or(g, "dt_ms", out.dt);
  out.t_max = detail::num_or(g, "t_max_ms", out.t_max);
  try {
    out.validate();
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  return out;
}

struct ScanParams {
  double r_start_mbps = 4.0;
  double r_inc_mbps = 4.0;
  double r_limit_mbps = 60.0;
};

inline ScanParams parse_scan(const json& j) {
  detail::require_keys(j, {"r_start_mbps", "r_inc_mbps", "r_limit_mbps"}, {}, "scan");
  return {j.at("r_start_mbps").get<double>(), j.at("r_inc_mbps").get<double>(),
          j.at("r_limit_mbps").get<double>()};
}

inline TrainSpec parse_probe(const json& j) {
  detail::require_keys(j, {"n_packets", "pkt_size_mb"}, {}, "probe");
  TrainSpec t;
  t.n_packets = j.at("n_packets").get<int>();
  t.pkt_size_mb = j.at("pkt_size_mb").get<double>();
  return t;
}

inline ScanCriterion parse_criterion(const json& j) {
  detail::require_keys(j, {"type"}, {"alpha_ms", "window", "eps_b_mb"}, "criterion");
  const std::string type = j.at("type").get<std::string>();
  if (type == "none") return NoCriterion{};
  if (type == "backlog_convexity") {
    BacklogConvexityCriterion c;
    c.alpha_ms = detail::num_or(j, "alpha_ms", 4.0);
    c.window = static_cast<int>(detail::num_or(j, "window", 3));
    return c;
  }
  if (type == "nonlinearity") {
    NonLinearityCriterion c;
    c.eps_b_mb = detail::num_or(j, "eps_b_mb", 0.011776);
    return c;
  }
  throw ConfigError("criterion: unknown type '" + type + "'");
}

/// Dotted-path overrides: `links.0.capacity_mbps=40`. Values parse as JSON
/// scalars and fall back to strings.
inline void apply_override(json& cfg, const std::string& key, const std::string& value) {
  json* node = &cfg;
  std::size_t pos = 0;
  std::string part;
  std::vector<std::string> parts;
  std::string rest = key;
  while ((pos = rest.find('.')) != std::string::npos) {
    parts.push_back(rest.substr(0, pos));
    rest = rest.substr(pos + 1);
  }
  parts.push_back(rest);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const auto& p = parts[i];
    if (node->is_array()) {
      const std::size_t idx = std::stoul(p);
      if (idx >= node->size()) throw ConfigError("--set: index out of range in '" + key + "'");
      node = &(*node)[idx];
    } else {
      if (!node->contains(p)) (*node)[p] = json::object();
      node = &(*node)[p];
    }
  }
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (...) {
    parsed = value;
  }
  if (node->is_array()) {
    const std::size_t idx = std::stoul(parts.back());
    if (idx >= node->size()) throw ConfigError("--set: index out of range in '" + key + "'");
    (*node)[idx] = parsed;
  } else {
    (*node)[parts.back()] = parsed;
  }
}

/// FNV-1a over the canonical (sorted-key) serialization.
inline std::string config_hash(const json& cfg) {
  const std::string s = cfg.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace bwest::cli
