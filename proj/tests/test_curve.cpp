#include "helpers.hpp"

#include "bwest/curve.hpp"

using namespace bwest;
using Catch::Approx;

TEST_CASE("rate_latency evaluation") {
  const auto c = rate_latency(25, 10);
  CHECK(c.value(10.0) == 0.0);                   // latency boundary
  CHECK(c.value(30.0) == Approx(0.5));           // 25 Mbps over 20 ms
  CHECK(c.value(0.0) == 0.0);
  CHECK(c.final_slope() == Approx(0.025));
}

TEST_CASE("constant_rate evaluation") {
  CHECK(constant_rate(50).value(2.0) == Approx(0.1));
}

TEST_CASE("burst function") {
  const auto d = burst();
  CHECK(d.value(0.0) == 0.0);
  CHECK(std::isinf(d.value(0.5)));
  CHECK(d.is_pure_delay());
  const auto d5 = burst(5.0);
  CHECK(d5.value(5.0) == 0.0);
  CHECK(std::isinf(d5.value(5.1)));
  CHECK_THROWS_AS(burst(-1.0), InvariantError);
}

TEST_CASE("token_bucket passes through the origin and jumps at 0+") {
  const auto tb = token_bucket(0.75, 25);
  CHECK(tb.value(0.0) == 0.0);
  CHECK(tb.value(1.0) == Approx(0.75 + 0.025).epsilon(1e-6));
  CHECK(tb.value(40.0) == Approx(0.75 + 1.0).epsilon(1e-9));
  CHECK_THROWS_AS(token_bucket(-0.1, 25), InvariantError);
}

TEST_CASE("quadratic sampled on the grid") {
  GridConfig grid;
  const auto q = quadratic(0.4, grid);
  CHECK(q.value(10.0) == Approx(40.0));
  CHECK(q.value(0.0) == 0.0);
  CHECK(q.is_convex());
  CHECK_THROWS_AS(quadratic(-0.4, grid), InvariantError);
}

TEST_CASE("curve invariants are enforced") {
  CHECK_THROWS_AS(Curve({{1.0, 0.0}}, CurveMode::Linear, Extension::Clamp), InvariantError);
  CHECK_THROWS_AS(Curve({{0.0, 0.0}, {1.0, 2.0}, {1.0, 3.0}}, CurveMode::Linear, Extension::Clamp),
                  InvariantError);
  CHECK_THROWS_AS(Curve({{0.0, 0.0}, {1.0, 2.0}, {2.0, 1.0}}, CurveMode::Linear, Extension::Clamp),
                  InvariantError);
  // FinalSlope with a single breakpoint needs an explicit slope
  CHECK_THROWS_AS(Curve({{0.0, 0.0}}, CurveMode::Linear, Extension::FinalSlope), InvariantError);
  CHECK_NOTHROW(Curve({{0.0, 0.0}}, CurveMode::Linear, Extension::FinalSlope, 0.5));
}

TEST_CASE("step mode holds values right-continuously") {
  const Curve s({{0.0, 0.0}, {1.0, 0.5}, {2.0, 1.0}}, CurveMode::StepRightContinuous,
                Extension::Clamp);
  CHECK(s.value(0.99) == 0.0);
  CHECK(s.value(1.0) == 0.5);
  CHECK(s.value(1.5) == 0.5);
  CHECK(s.value(100.0) == 1.0);
}

TEST_CASE("extension rules beyond the last breakpoint") {
  const Curve clamp({{0.0, 0.0}, {1.0, 1.0}}, CurveMode::Linear, Extension::Clamp);
  CHECK(clamp.value(50.0) == 1.0);
  const Curve fs({{0.0, 0.0}, {1.0, 1.0}}, CurveMode::Linear, Extension::FinalSlope);
  CHECK(fs.value(3.0) == Approx(3.0));
  const Curve pi({{0.0, 0.0}, {1.0, 1.0}}, CurveMode::Linear, Extension::PlusInfinity);
  CHECK(pi.value(1.0) == 1.0);
  CHECK(std::isinf(pi.value(1.1)));
}

TEST_CASE("shift operations") {
  const auto c = rate_latency(25, 10);
  const auto r = c.shifted_right(5.0);
  CHECK(r.value(15.0) == 0.0);
  CHECK(r.value(35.0) == Approx(0.5));
  const auto l = r.shifted_left(5.0);
  CHECK(l.value(30.0) == Approx(0.5));
}

TEST_CASE("sampling matches point evaluation") {
  GridConfig grid{0.5, 20.0, 1e-9, 1e-6};
  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const auto c = testutil::random_pwl_curve(rng, grid);
    const auto v = c.sample(grid);
    for (std::size_t i = 0; i < v.size(); i += 3)
      CHECK(v[i] == Approx(c.value(grid.time(i))).margin(1e-12));
  }
}
