#include "helpers.hpp"

#include "bwest/legendre.hpp"
#include "bwest/minplus.hpp"

using namespace bwest;
using Catch::Approx;

namespace {

// Grid-scan oracle: sup over sampled t of r*t - f(t).
double legendre_oracle(const Curve& f, double r_mbps, const GridConfig& grid) {
  const auto v = f.sample(grid);
  const double k = mbps_to_slope(r_mbps);
  double best = -kInfinity;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::isinf(v[i])) break;
    best = std::max(best, k * grid.time(i) - v[i]);
  }
  return best;
}

const GridConfig kSmall{0.1, 50.0, 1e-9, 1e-6};

} // namespace

TEST_CASE("legendre of a rate-latency curve") {
  const auto f = rate_latency(25, 10);
  const std::vector<double> rates{5, 10, 20, 25, 30};
  const auto L = legendre(f, rates);
  REQUIRE(L.rate_limit_mbps().has_value());
  CHECK(*L.rate_limit_mbps() == Approx(25.0));
  REQUIRE(L.samples().size() == 4); // 30 Mbps is past the limit
  CHECK(L.samples()[1].r_mbps == 10.0);
  CHECK(L.samples()[1].value_mb == Approx(0.1)); // r*T
  for (const auto& s : L.samples()) {
    GridConfig g{0.01, 200.0, 1e-9, 1e-6};
    CHECK(s.value_mb == Approx(legendre_oracle(f, s.r_mbps, g)).margin(1e-6));
  }
}

TEST_CASE("legendre of the sampled quadratic matches calculus") {
  // sup_t { k*t - a*t^2 } = k^2/(4a) at t = k/(2a); with a = 0.4 Mb/ms^2 the
  // conjugate of slope k is k^2/1.6
  GridConfig grid;
  const auto q = quadratic(0.4, grid);
  for (double slope : {4.0, 8.0, 16.0, 64.0}) { // Mb/ms
    const double r = slope_to_mbps(slope);
    const auto L = legendre(q, std::vector<double>{r});
    REQUIRE(L.samples().size() == 1);
    CHECK(L.samples()[0].value_mb == Approx(slope * slope / 1.6).epsilon(1e-4));
    CHECK(L.samples()[0].value_mb ==
          Approx(legendre_oracle(q, r, grid)).margin(grid.eps_v));
  }
}

TEST_CASE("legendre turns convolution into addition on convex pairs") {
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    const auto f = testutil::random_convex_curve(rng, kSmall);
    const auto g = testutil::random_convex_curve(rng, kSmall);
    const auto fg = convolve(f, g, kSmall);
    const double cap = slope_to_mbps(std::min(f.final_slope(), g.final_slope()));
    std::vector<double> rates;
    for (double frac : {0.1, 0.35, 0.6, 0.85, 1.0}) rates.push_back(cap * frac);
    std::sort(rates.begin(), rates.end());
    rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
    if (rates.empty() || rates.front() <= 0) continue;
    const auto Lf = legendre(f, rates);
    const auto Lg = legendre(g, rates);
    const auto Lfg = legendre(fg, rates);
    REQUIRE(Lf.samples().size() == Lfg.samples().size());
    for (std::size_t i = 0; i < Lfg.samples().size(); ++i)
      CHECK(Lfg.samples()[i].value_mb ==
            Approx(Lf.samples()[i].value_mb + Lg.samples()[i].value_mb).margin(1e-6));
  }
}

TEST_CASE("legendre reverses pointwise order") {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const auto g = testutil::random_convex_curve(rng, kSmall);
    // f >= g by adding a non-negative offset curve
    std::vector<CurvePoint> pts = g.breakpoints();
    for (std::size_t i = 1; i < pts.size(); ++i) pts[i].v += 0.05 * static_cast<double>(i);
    const Curve f(std::move(pts), CurveMode::Linear, Extension::FinalSlope,
                  g.final_slope() + 0.01);
    std::vector<double> rates{1.0, 5.0, 10.0, slope_to_mbps(g.final_slope())};
    std::sort(rates.begin(), rates.end());
    rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
    const auto Lf = legendre(f, rates);
    const auto Lg = legendre(g, rates);
    std::size_t j = 0;
    for (const auto& sf : Lf.samples()) {
      while (j < Lg.samples().size() && Lg.samples()[j].r_mbps < sf.r_mbps) ++j;
      if (j < Lg.samples().size() && Lg.samples()[j].r_mbps == sf.r_mbps)
        CHECK(sf.value_mb <= Lg.samples()[j].value_mb + 1e-9);
    }
  }
}

TEST_CASE("legendre of staircases matches the grid-scan oracle") {
  Rng rng(97);
  const GridConfig fine{0.01, 60.0, 1e-9, 1e-6};
  for (int k = 0; k < 20; ++k) {
    const auto base = testutil::random_staircase(rng, 40.0);
    // both chirp-style extensions: a hard wall and a final ray
    const Curve walled(base.breakpoints(), CurveMode::StepRightContinuous,
                       Extension::PlusInfinity);
    const Curve rayed(base.breakpoints(), CurveMode::StepRightContinuous, Extension::FinalSlope,
                      0.02);
    for (const Curve* c : {&walled, &rayed}) {
      std::vector<double> rates{3.0, 9.0, 17.0};
      const auto L = legendre(*c, rates);
      for (const auto& s : L.samples()) {
        // the grid scan can only undershoot the exact sup, and only by the
        // value the curve gains across one fine step
        const double oracle = legendre_oracle(*c, s.r_mbps, fine);
        CHECK(s.value_mb >= oracle - 1e-12);
        CHECK(s.value_mb <= oracle + mbps_to_slope(s.r_mbps) * fine.dt + 1e-9);
      }
    }
  }
}

TEST_CASE("biconjugate recovers convex curves") {
  const auto f = rate_latency(25, 10);
  std::vector<double> rates{2, 7, 12.5, 19, 25};
  const auto back = legendre_back(legendre(f, rates));
  for (double t : {0.0, 5.0, 10.0, 20.0, 100.0})
    CHECK(back.value(t) == Approx(f.value(t)).margin(1e-9));
}

TEST_CASE("biconjugate lower-bounds non-convex staircases") {
  Rng rng(19);
  for (int k = 0; k < 50; ++k) {
    const auto f = testutil::random_staircase(rng, 40.0);
    const auto hull = convex_hull(f);
    CHECK(testutil::leq_on_grid(hull, f, kSmall, kSmall.eps_v));
  }
}

TEST_CASE("single-sample conjugate is a constant-rate curve") {
  const LegendreFn L({{25.0, 0.0}}, 25.0);
  const auto c = legendre_back(L);
  for (double t : {0.0, 4.0, 40.0})
    CHECK(c.value(t) == Approx(constant_rate(25).value(t)).margin(1e-12));
}

TEST_CASE("convex hull of a convex curve is the curve") {
  Rng rng(43);
  for (int k = 0; k < 50; ++k) {
    const auto f = testutil::random_convex_curve(rng, kSmall);
    const auto h = convex_hull(f);
    for (double t = 0; t <= kSmall.t_max; t += 2.5)
      CHECK(h.value(t) == Approx(f.value(t)).margin(1e-9));
  }
}

TEST_CASE("convex hull equals the biconjugate on a dense rate grid") {
  Rng rng(47);
  for (int k = 0; k < 25; ++k) {
    const auto f = testutil::random_pwl_curve(rng, kSmall);
    const auto hull = convex_hull(f);
    // biconjugate over all hull slopes recovers the hull exactly
    std::vector<double> rates;
    const auto& hp = hull.breakpoints();
    for (std::size_t i = 0; i + 1 < hp.size(); ++i)
      rates.push_back(slope_to_mbps(hull.segment_slope(i)));
    rates.push_back(slope_to_mbps(hull.final_slope()));
    std::sort(rates.begin(), rates.end());
    rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
    if (rates.front() < 0) continue;
    const auto back = legendre_back(legendre(f, rates));
    for (double t = 0; t <= kSmall.t_max; t += 2.5)
      CHECK(back.value(t) == Approx(hull.value(t)).margin(1e-9));
  }
}

TEST_CASE("convex hull of a bounded curve is zero") {
  const Curve f({{0.0, 0.0}, {5.0, 2.0}}, CurveMode::Linear, Extension::Clamp);
  const auto h = convex_hull(f);
  CHECK(h.value(100.0) == 0.0);
}

TEST_CASE("convexify produces a convex sample set") {
  const LegendreFn L({{1, 0.5}, {2, 0.1}, {3, 0.4}, {4, 0.2}, {5, 0.9}}, std::nullopt);
  const auto c = L.convexify();
  for (std::size_t i = 2; i < c.samples().size(); ++i) {
    const auto& a = c.samples()[i - 2];
    const auto& b = c.samples()[i - 1];
    const auto& d = c.samples()[i];
    const double s1 = (b.value_mb - a.value_mb) / (b.r_mbps - a.r_mbps);
    const double s2 = (d.value_mb - b.value_mb) / (d.r_mbps - b.r_mbps);
    CHECK(s1 <= s2 + 1e-12);
  }
}
