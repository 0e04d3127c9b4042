#include "helpers.hpp"

#include "bwest/composer.hpp"

using namespace bwest;
using Catch::Approx;

TEST_CASE("compose constant rates to the minimum") {
  GridConfig grid;
  std::vector<Curve> curves{constant_rate(30), constant_rate(50), constant_rate(40)};
  const auto c = compose(curves, grid);
  CHECK(c.final_slope() == Approx(mbps_to_slope(30)));
  CHECK(c.value(100.0) == Approx(3.0));
}

TEST_CASE("compose rate-latency pairs adds latencies at the minimum rate") {
  GridConfig grid;
  std::vector<Curve> curves{rate_latency(25, 10), rate_latency(25, 10)};
  const auto c = compose(curves, grid);
  const auto expect = rate_latency(25, 20);
  for (double t : {0.0, 15.0, 20.0, 60.0})
    CHECK(c.value(t) == Approx(expect.value(t)).margin(1e-9));
  // against the grid oracle
  const auto oracle = testutil::grid_convolve_oracle(curves[0], curves[1], grid);
  const auto cv = c.sample(grid);
  for (std::size_t i = 0; i < cv.size(); i += 50) CHECK(cv[i] == Approx(oracle[i]).margin(1e-9));
}

TEST_CASE("single curve composes to itself") {
  GridConfig grid;
  std::vector<Curve> curves{rate_latency(25, 10)};
  const auto c = compose(curves, grid);
  CHECK(c.value(30.0) == Approx(0.5));
}

TEST_CASE("legendre fast path equals the grid path on convex triples") {
  GridConfig grid{0.1, 50.0, 1e-9, 1e-6};
  Rng rng(53);
  for (int k = 0; k < 40; ++k) {
    std::vector<Curve> t{testutil::random_convex_curve(rng, grid),
                         testutil::random_convex_curve(rng, grid),
                         testutil::random_convex_curve(rng, grid)};
    const auto fast = compose(t, grid);
    const auto slow = convolve(convolve(t[0], t[1], grid), t[2], grid);
    for (double x = 0; x <= grid.t_max; x += 1.7)
      CHECK(fast.value(x) == Approx(slow.value(x)).margin(grid.eps_v));
  }
}

TEST_CASE("compose is associative and commutative within eps") {
  GridConfig grid{0.1, 50.0, 1e-9, 1e-6};
  Rng rng(59);
  for (int k = 0; k < 20; ++k) {
    std::vector<Curve> t{testutil::random_convex_curve(rng, grid),
                         testutil::random_staircase(rng, 40.0),
                         testutil::random_convex_curve(rng, grid)};
    const auto a = compose(t, grid);
    std::vector<Curve> rev{t[2], t[1], t[0]};
    const auto b = compose(rev, grid);
    for (double x = 0; x <= grid.t_max; x += 2.3)
      CHECK(a.value(x) == Approx(b.value(x)).margin(grid.eps_v));
  }
}

TEST_CASE("min_rate_compose picks the tight link") {
  const std::vector<double> rates{30, 50, 40};
  const auto m = min_rate_compose(rates);
  CHECK(m.mbps == 30.0);
  CHECK(m.tight_link == 0);
  const std::vector<double> ties{40, 25, 25};
  CHECK(min_rate_compose(ties).tight_link == 1); // lowest index on ties
  CHECK_THROWS_AS(min_rate_compose(std::vector<double>{}), InvariantError);

  // matches compose on constant-rate inputs
  GridConfig grid;
  std::vector<Curve> curves;
  for (double r : rates) curves.push_back(constant_rate(r));
  CHECK(compose(curves, grid).final_slope() == Approx(mbps_to_slope(m.mbps)));
}

TEST_CASE("derivative of canonical curves") {
  GridConfig grid;
  const auto d = derivative(rate_latency(25, 21), grid);
  for (const auto& [t, r] : d) {
    if (t < 21.0 - grid.dt * 0.5) CHECK(r == Approx(0.0).margin(1e-9));
    if (t > 21.0 + grid.dt * 0.5) CHECK(r == Approx(25.0).margin(1e-9));
  }
  for (const auto& [t, r] : derivative(constant_rate(50), grid))
    CHECK(r == Approx(50.0).margin(1e-9));
  const auto q = derivative(quadratic(0.4, grid), grid);
  for (std::size_t i = 10; i < q.size(); i += 500) {
    const auto [t, r] = q[i];
    CHECK(r == Approx(slope_to_mbps(0.8 * (t + grid.dt / 2))).epsilon(1e-6));
  }
  CHECK_THROWS_AS(derivative(token_bucket(1, 10), grid), InvariantError);
}

TEST_CASE("integral of the derivative reconstructs the curve") {
  GridConfig grid{0.1, 50.0, 1e-9, 1e-6};
  Rng rng(61);
  for (int k = 0; k < 10; ++k) {
    const auto c = testutil::random_pwl_curve(rng, grid);
    const auto d = derivative(c, grid);
    double acc = 0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += mbps_to_slope(d[i].second) * grid.dt;
    CHECK(acc == Approx(c.value(grid.time(d.size()))).margin(grid.eps_v * d.size()));
  }
}

TEST_CASE("derivative smoothing preserves the mean level") {
  GridConfig grid;
  const auto raw = derivative(rate_latency(25, 21), grid);
  const auto smooth = derivative(rate_latency(25, 21), grid, 9);
  REQUIRE(raw.size() == smooth.size());
  CHECK(smooth.back().second == Approx(25.0).margin(1e-9));
  // the step is widened but bounded by the raw extremes
  for (const auto& [t, r] : smooth) {
    CHECK(r >= -1e-9);
    CHECK(r <= 25.0 + 1e-9);
  }
}
