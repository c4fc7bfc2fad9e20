// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "clearstream/syncsim.hpp"

using namespace clearstream::syncsim;

TEST_CASE("timer register wraps at 800000") {
  ClockModel c;
  CHECK(c.timer(0.0) == 0);
  CHECK(c.timer(0.025) == 400000);
  CHECK(c.timer(0.05) == 0);
  CHECK(c.timer(0.0625) == 200000);
  ClockModel fast{20.0, 799990.0};
  CHECK(fast.timer(0.0) == 799990);
  CHECK(fast.timer(1e-6) == 6);
  CHECK(fast.local_seconds(60.0) == doctest::Approx(60.0012));
}

TEST_CASE("rate encoder thresholds") {
  RateEncoder e;
  CHECK(e.step(31.9) == Correction::kNone);
  CHECK(e.step(-31.9) == Correction::kNone);
  CHECK(e.step(32.0) == Correction::kRemove);
  CHECK(e.step(32.0) == Correction::kNone);
  CHECK(e.step(63.0) == Correction::kNone);
  CHECK(e.step(0.0) == Correction::kInsert);
  CHECK(e.multiple() == 0);
  CHECK(e.step(-100.0) == Correction::kInsert);
  CHECK(e.step(-100.0) == Correction::kInsert);
  CHECK(e.step(-100.0) == Correction::kInsert);
  CHECK(e.step(-100.0) == Correction::kNone);
  CHECK(e.multiple() == -3);
}

TEST_CASE("oscillating difference never triggers") {
  RateEncoder e;
  for (int i = 0; i < 10000; ++i) REQUIRE(e.step(31.0 * std::sin(i * 0.01)) == Correction::kNone);
}

TEST_CASE("linear growth of 64 us per second gives 20 corrections in 10 s") {
  RateEncoder e;
  int removes = 0;
  for (int ms = 0; ms <= 10000; ++ms) {
    const double diff = 64.0 * ms / 1000.0;
    for (Correction c; (c = e.step(diff)) != Correction::kNone;) removes += c == Correction::kRemove;
  }
  CHECK(removes == 20);
}

TEST_CASE("startup wrap correction") {
  auto d = startup_align(799000, 1200);
  CHECK(d.primary == 781);
  CHECK(d.secondary == 0);
  d = startup_align(1200, 799000);
  CHECK(d.primary == 0);
  CHECK(d.secondary == 781);
  d = startup_align(100000, 100500);
  CHECK(d.primary == 0);
  CHECK(d.secondary == 0);
  d = startup_align(42, 42);
  CHECK(d.primary + d.secondary == 0);
  CHECK(781.0 / 15625.0 * 1000.0 == doctest::Approx(49.984));
  CHECK_THROWS_AS(startup_align(800000, 0), std::invalid_argument);
}

TEST_CASE("no drift means no error") {
  for (bool sync : {false, true}) {
    SimConfig c;
    c.primary_ppm = c.secondary_ppm = 0.0;
    c.sync = sync;
    c.duration_s = 10;
    auto r = run_sim(c);
    CHECK(r.max_error_us == 0.0);
    CHECK(r.inserts + r.removes == 0);
  }
}

TEST_CASE("unsynchronized drift follows the analytic line") {
  SimConfig c;
  c.sync = false;
  c.duration_s = 60;
  auto r = run_sim(c);
  CHECK(r.beacons_sent == 0);
  CHECK(std::abs(r.final_error_us) == doctest::Approx(2400.0).epsilon(0.05));
  CHECK(std::abs(r.slope_us_per_min) == doctest::Approx(drift_us_per_min(20, -20)).epsilon(0.05));
  // Closed form for the nth boundary: n * 32 us * (1/(1-20e-6) - 1/(1+20e-6)).
  const double n = std::floor(60.0 / (32e-6 / (1 + 20e-6)));
  const double expect = n * 32.0 * (1 / (1 - 20e-6) - 1 / (1 + 20e-6));
  CHECK(r.final_error_us == doctest::Approx(expect).epsilon(1e-9));

  c.primary_ppm = 2.13;
  c.secondary_ppm = 0.0;
  auto slow = run_sim(c);
  CHECK(std::abs(slow.slope_us_per_min) == doctest::Approx(127.8).epsilon(0.05));
}

TEST_CASE("synchronized error stays within one output sample") {
  SimConfig c;
  c.duration_s = 300;
  auto r = run_sim(c);
  CHECK(r.max_error_us <= 64.0);
  CHECK(r.max_count_difference <= 1);
  CHECK(r.removes == 0);
  CHECK(r.inserts > 300);
  CHECK(r.beacons_sent == doctest::Approx(60000).epsilon(0.001));
  for (const auto& p : r.trace) REQUIRE(std::abs(p.error_samples) <= 1);

  SimConfig flipped = c;
  std::swap(flipped.primary_ppm, flipped.secondary_ppm);
  auto f = run_sim(flipped);
  CHECK(f.max_error_us <= 64.0);
  CHECK(f.removes > 300);
}

TEST_CASE("sync holds with heavy beacon loss and jitter") {
  SimConfig c;
  c.duration_s = 60;
  c.beacon_loss = 0.5;
  c.jitter_us = 3.0;
  c.seed = 9;
  auto r = run_sim(c);
  CHECK(r.beacons_lost > 0);
  CHECK(r.max_error_us <= 64.0);
  auto again = run_sim(c);
  CHECK(again.max_error_us == r.max_error_us);
  CHECK(again.events.size() == r.events.size());
}

TEST_CASE("config validation") {
  SimConfig c;
  c.duration_s = 0;
  CHECK_THROWS_AS(run_sim(c), std::invalid_argument);
  c = {};
  c.beacon_loss = 1.5;
  CHECK_THROWS_AS(run_sim(c), std::invalid_argument);
}
