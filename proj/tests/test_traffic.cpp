#include "helpers.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bwest/io.hpp"
#include "bwest/legendre.hpp"
#include "bwest/traffic.hpp"

using namespace bwest;
using Catch::Approx;

TEST_CASE("cbr_train spacing and duration") {
  const auto t = cbr_train(25, 2, 0.011776);
  REQUIRE(t.events.size() == 2);
  CHECK(t.events[1].t_ms - t.events[0].t_ms == Approx(0.011776 / 0.025));

  // 400 x 1472 B at 4 Mbps spans ~1177.6 ms
  const auto big = cbr_train(4, 400, 0.011776);
  REQUIRE(big.events.size() == 400);
  const double gap = 0.011776 / 0.004;
  CHECK(big.events.back().t_ms == Approx(399 * gap));
  CHECK(400 * gap == Approx(1177.6));
  CHECK_THROWS_AS(cbr_train(25, 1, 0.01), InvariantError);
}

TEST_CASE("a five-packet train is a staircase of equal steps") {
  const auto c = to_curve(cbr_train(50, 5, 0.01));
  REQUIRE(c.breakpoints().size() == 6); // origin + one step per packet
  for (std::size_t i = 1; i < c.breakpoints().size(); ++i)
    CHECK(c.breakpoints()[i].v - c.breakpoints()[i - 1].v == Approx(0.01));
  CHECK(c.mode() == CurveMode::StepRightContinuous);
}

TEST_CASE("cbr_train staircase hull is the rate line over the train span") {
  const auto t = cbr_train(50, 5, 0.01);
  // over the train's own lifetime (continued flat it would hull to zero)
  const Curve span(to_curve(t).breakpoints(), CurveMode::StepRightContinuous,
                   Extension::PlusInfinity);
  const auto hull = convex_hull(span);
  for (double x : {0.1, 0.4, 0.7})
    CHECK(hull.value(x) == Approx(constant_rate(50).value(x)).margin(1e-6));
}

TEST_CASE("rate_chirp reproduces the canonical 66-packet chirp") {
  const auto chirp = rate_chirp({4.0, 100.0, 1.05, 0.011776});
  CHECK(chirp.events.events.size() == 66);
  REQUIRE(chirp.rates_mbps.size() == 66);
  CHECK(chirp.rates_mbps.front() == Approx(4.0));
  CHECK(chirp.rates_mbps.back() < 100.0);
  // strictly geometric rate ladder
  for (std::size_t i = 1; i < chirp.rates_mbps.size(); ++i)
    CHECK(chirp.rates_mbps[i] == Approx(chirp.rates_mbps[i - 1] * 1.05));
}

TEST_CASE("larger spread factors give shorter chirps") {
  const auto a = rate_chirp({10, 200, 1.05, 0.0096});
  const auto b = rate_chirp({10, 200, 1.2, 0.0096});
  const auto c = rate_chirp({10, 200, 2.0, 0.0096});
  CHECK(a.events.events.size() > b.events.events.size());
  CHECK(b.events.events.size() > c.events.events.size());
  CHECK_THROWS_AS(rate_chirp({10, 5, 1.05, 0.01}), InvariantError);
  CHECK_THROWS_AS(rate_chirp({10, 200, 1.0, 0.01}), InvariantError);
}

TEST_CASE("on-off aggregate hits the stationary mean") {
  // mean over >= 100 s within 5% of n*peak*q/(p+q), averaged over 10 seeds
  struct Case {
    int n;
    double peak, p, q, expect;
  };
  for (const auto& c : {Case{1, 200, 0.09, 0.01, 20.0}, Case{25, 8, 0.19, 0.01, 10.0}}) {
    double acc = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      OnOffParams p;
      p.n_sources = c.n;
      p.peak_rate_mbps = c.peak;
      p.p_on_off = c.p;
      p.q_off_on = c.q;
      p.duration_ms = 100000;
      p.seed = seed;
      const auto ev = onoff_trace(p);
      acc += slope_to_mbps(ev.total_mb() / p.duration_ms);
    }
    CHECK(acc / 10 == Approx(c.expect).epsilon(0.05));
  }
}

TEST_CASE("absorbing Off state produces no traffic") {
  OnOffParams p;
  p.n_sources = 1;
  p.peak_rate_mbps = 200;
  p.p_on_off = 1.0;
  p.q_off_on = 0.0;
  p.duration_ms = 1000;
  CHECK(onoff_trace(p).events.empty());
}

TEST_CASE("renewal cross traffic") {
  SECTION("CBR gap is exact") {
    const auto ev = renewal_cross(CrossDist::Cbr, 25, 0.0064, 1000, 3);
    REQUIRE(ev.events.size() > 10);
    for (std::size_t i = 1; i < ev.events.size(); ++i)
      CHECK(ev.events[i].t_ms - ev.events[i - 1].t_ms == Approx(0.256));
  }
  SECTION("exponential empirical rate within 2% over 10 s") {
    const auto ev = renewal_cross(CrossDist::Exponential, 25, 0.0064, 10000, 5);
    CHECK(slope_to_mbps(ev.total_mb() / 10000.0) == Approx(25.0).epsilon(0.02));
  }
  SECTION("pareto converges with heavy-tail bursts") {
    const auto ev = renewal_cross(CrossDist::Pareto, 25, 0.0064, 100000, 7, 1.5);
    CHECK(slope_to_mbps(ev.total_mb() / 100000.0) == Approx(25.0).epsilon(0.06));
    // heavy tail: the largest gap dwarfs the mean gap
    double max_gap = 0;
    for (std::size_t i = 1; i < ev.events.size(); ++i)
      max_gap = std::max(max_gap, ev.events[i].t_ms - ev.events[i - 1].t_ms);
    CHECK(max_gap > 20 * 0.256);
  }
  SECTION("invalid shape rejected") {
    CHECK_THROWS_AS(renewal_cross(CrossDist::Pareto, 25, 0.0064, 1000, 1, 0.9), InvariantError);
  }
}

TEST_CASE("generators are bit-identical under a fixed seed") {
  for (int variant = 0; variant < 2; ++variant) {
    const auto a = renewal_cross(CrossDist::Exponential, 25, 0.0064, 5000, 42);
    const auto b = renewal_cross(CrossDist::Exponential, 25, 0.0064, 5000, 42);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].t_ms == b.events[i].t_ms);
      CHECK(a.events[i].size_mb == b.events[i].size_mb);
    }
  }
  OnOffParams p;
  p.n_sources = 5;
  p.peak_rate_mbps = 40;
  p.p_on_off = 0.09;
  p.q_off_on = 0.01;
  p.duration_ms = 2000;
  p.seed = 9;
  const auto x = onoff_trace(p);
  const auto y = onoff_trace(p);
  REQUIRE(x.events.size() == y.events.size());
  for (std::size_t i = 0; i < x.events.size(); ++i) CHECK(x.events[i].t_ms == y.events[i].t_ms);
}

TEST_CASE("to_curve preserves volume and satisfies curve invariants") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    PacketEvents ev;
    double t = 0;
    const int n = 1 + static_cast<int>(rng.uniform() * 30);
    for (int i = 0; i < n; ++i) {
      t += rng.uniform();
      ev.events.push_back({t, 0.001 + rng.uniform() * 0.01});
    }
    const auto c = to_curve(ev);
    CHECK(c.breakpoints().front().t == 0.0);
    CHECK(c.value(t + 1.0) == Approx(ev.total_mb()).margin(1e-12));
  }
  CHECK(to_curve(PacketEvents{}).breakpoints().size() == 1);
}

TEST_CASE("two packets make a staircase") {
  PacketEvents ev;
  ev.events = {{0.0, 0.0064}, {1.0, 0.0064}};
  const auto c = to_curve(ev);
  CHECK(c.value(0.0) == 0.0);
  CHECK(c.value(0.5) == Approx(0.0064));
  CHECK(c.value(2.0) == Approx(0.0128));
}

TEST_CASE("packetize splits fluid slots and preserves volume") {
  PacketEvents fluid;
  fluid.events = {{1.0, 0.154}, {2.0, 0.154}};
  const auto pk = packetize(fluid, 0.011776);
  CHECK(pk.total_mb() == Approx(fluid.total_mb()).margin(1e-12));
  for (std::size_t i = 0; i + 1 < pk.events.size(); ++i)
    CHECK(pk.events[i].size_mb == Approx(0.011776));
}

TEST_CASE("trace files round-trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "bwest_trace_test";
  fs::create_directories(dir);
  const auto path = (dir / "t.csv").string();

  PacketEvents ev;
  ev.events = {{0.0, 0.0064}, {1.0, 0.0064}, {1.0, 0.0128}, {5.5, 0.01}};
  io::write_file(path, io::trace_to_csv(ev));
  const auto back = load_trace(path);
  REQUIRE(back.events.size() == ev.events.size());
  CHECK(back.total_mb() == Approx(ev.total_mb()).margin(1e-15));
  CHECK(to_curve(back).value(100.0) == Approx(ev.total_mb()).margin(1e-12));

  io::write_file(path, "t_ms,size_mb\n1.0,0.01\n0.5,0.01\n");
  CHECK_THROWS_AS(load_trace(path), DataError);
  io::write_file(path, "t_ms,size_mb\nnot-a-number,0.01\n");
  CHECK_THROWS_AS(load_trace(path), DataError);
  io::write_file(path, "t_ms,size_mb\n");
  CHECK(load_trace(path).events.empty());
  fs::remove_all(dir);
}
