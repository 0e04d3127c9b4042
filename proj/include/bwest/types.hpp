#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwest {

// Unit conventions used throughout the library:
//   time    : milliseconds (ms)
//   volume  : megabits (Mb)
//   slopes  : Mb/ms, the natural derivative of a cumulative curve
//   rates   : Mbps at every public API and file-format boundary
// The only conversion is Mbps <-> Mb/ms (factor 1000), confined to the
// helpers below.

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Mbps -> Mb/ms.
inline constexpr double mbps_to_slope(double rate_mbps) { return rate_mbps * 1e-3; }

/// Mb/ms -> Mbps.
inline constexpr double slope_to_mbps(double slope) { return slope * 1e3; }

inline bool nearly_equal(double a, double b, double eps) { return std::fabs(a - b) <= eps; }

/// Uniform evaluation grid on [0, t_max].
struct GridConfig {
  double dt = 0.1;      // ms
  double t_max = 500.0; // ms
  double eps_t = 1e-9;  // ms, time tolerance
  double eps_v = 1e-6;  // Mb, value tolerance

  void validate() const {
    if (!(dt > 0)) throw std::invalid_argument("GridConfig: dt must be > 0");
    if (!(t_max >= dt)) throw std::invalid_argument("GridConfig: t_max must be >= dt");
    if (!(eps_t > 0) || !(eps_v > 0)) throw std::invalid_argument("GridConfig: tolerances must be > 0");
  }

  std::size_t size() const { return static_cast<std::size_t>(std::floor(t_max / dt + 0.5)) + 1; }
  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
};

/// Thrown when an input violates a documented precondition.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when measured data is inconsistent (e.g. departures above arrivals).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

} // namespace bwest
