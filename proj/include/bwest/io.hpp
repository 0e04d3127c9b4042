#pragma once

#include <fstream>
#include <iomanip>
#include <locale>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "curve.hpp"
#include "legendre.hpp"
#include "traffic.hpp"
#include "types.hpp"

// CSV formats. Curve files carry mode/extension in a leading comment line:
//   # mode=linear extension=final_slope final_slope_mbps=25
//   t_ms,v_mb
//   0,0
//   ...
// LegendreFn files carry `# rate_limit=<r|inf>` over `r_mbps,value_mb` rows.

namespace bwest::io {

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::map<std::string, std::string> parse_comment(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream ls(line.substr(1));
  std::string tok;
  while (ls >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed " + what + ": '" + s + "'");
  }
}

} // namespace detail

inline std::string curve_to_csv(const Curve& c) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "# mode=" << (c.mode() == CurveMode::Linear ? "linear" : "step") << " extension=";
  switch (c.extension()) {
    case Extension::FinalSlope:
      os << "final_slope final_slope_mbps=" << detail::fmt(slope_to_mbps(c.final_slope()));
      break;
    case Extension::PlusInfinity:
      os << "plus_infinity";
      break;
    case Extension::Clamp:
      os << "clamp";
      break;
  }
  os << "\nt_ms,v_mb\n";
  for (const auto& p : c.breakpoints())
    os << detail::fmt(p.t) << ',' << detail::fmt(p.v) << '\n';
  return os.str();
}

inline Curve curve_from_csv(std::istream& in) {
  std::string line;
  CurveMode mode = CurveMode::Linear;
  Extension ext = Extension::FinalSlope;
  std::optional<double> slope;
  std::vector<CurvePoint> pts;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto kv = detail::parse_comment(line);
      if (auto it = kv.find("mode"); it != kv.end())
        mode = (it->second == "step") ? CurveMode::StepRightContinuous : CurveMode::Linear;
      if (auto it = kv.find("extension"); it != kv.end()) {
        if (it->second == "plus_infinity")
          ext = Extension::PlusInfinity;
        else if (it->second == "clamp")
          ext = Extension::Clamp;
        else
          ext = Extension::FinalSlope;
      }
      if (auto it = kv.find("final_slope_mbps"); it != kv.end())
        slope = mbps_to_slope(detail::parse_double(it->second, "final_slope_mbps"));
      continue;
    }
    if (!header_seen && line.find("t_ms") != std::string::npos) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("curve csv: malformed row at line " + std::to_string(lineno));
    pts.push_back({detail::parse_double(line.substr(0, comma), "t_ms"),
                   detail::parse_double(line.substr(comma + 1), "v_mb")});
  }
  if (ext != Extension::FinalSlope) slope.reset();
  return Curve(std::move(pts), mode, ext, slope);
}

inline std::string legendre_to_csv(const LegendreFn& L) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "# rate_limit="
     << (L.rate_limit_mbps() ? detail::fmt(*L.rate_limit_mbps()) : std::string("inf"))
     << "\nr_mbps,value_mb\n";
  for (const auto& s : L.samples())
    os << detail::fmt(s.r_mbps) << ',' << detail::fmt(s.value_mb) << '\n';
  return os.str();
}

inline LegendreFn legendre_from_csv(std::istream& in) {
  std::string line;
  std::optional<double> limit;
  std::vector<LegendreSample> samples;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto kv = detail::parse_comment(line);
      if (auto it = kv.find("rate_limit"); it != kv.end() && it->second != "inf")
        limit = detail::parse_double(it->second, "rate_limit");
      continue;
    }
    if (!header_seen && line.find("r_mbps") != std::string::npos) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("legendre csv: malformed row at line " + std::to_string(lineno));
    samples.push_back({detail::parse_double(line.substr(0, comma), "r_mbps"),
                       detail::parse_double(line.substr(comma + 1), "value_mb")});
  }
  return LegendreFn(std::move(samples), limit);
}

inline std::string trace_to_csv(const PacketEvents& ev) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "t_ms,size_mb\n";
  for (const auto& e : ev.events) os << detail::fmt(e.t_ms) << ',' << detail::fmt(e.size_mb) << '\n';
  return os.str();
}

inline std::string derivative_to_csv(const std::vector<std::pair<double, double>>& d) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "t_ms,rate_mbps\n";
  for (const auto& [t, r] : d) os << detail::fmt(t) << ',' << detail::fmt(r) << '\n';
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

inline Curve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return curve_from_csv(in);
}

inline LegendreFn load_legendre(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return legendre_from_csv(in);
}

} // namespace bwest::io
