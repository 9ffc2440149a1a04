#include <doctest.h>

#include "lvad/cvs_model.hpp"
#include "lvad/pump_model.hpp"

using namespace lvad;

TEST_SUITE("pump-model") {
  TEST_CASE("head at rest is zero") {
    const PumpParameters p;
    CHECK(pump_head(p, 0.0, 0.0, 0.0) == 0.0);
  }

  TEST_CASE("head increases with speed and decreases with flow") {
    const PumpParameters p;
    CHECK(pump_head(p, 3000.0, 80.0, 0.0) > pump_head(p, 1800.0, 80.0, 0.0));
    for (double w = 1800; w <= 3000; w += 100)
      for (double q = -50; q <= 200; q += 10) {
        CHECK(pump_head(p, w + 1.0, q, 0.0) - pump_head(p, w, q, 0.0) > 0.0);
        CHECK(pump_head(p, w, q + 1.0, 0.0) - pump_head(p, w, q, 0.0) < 0.0);
      }
  }

  TEST_CASE("suction resistance") {
    PumpParameters p;
    p.Rlsuc_gain = 3.5;
    CHECK(suction_resistance(p, p.P_suc_threshold) == 0.0);
    CHECK(suction_resistance(p, p.P_suc_threshold + 5.0) == 0.0);
    CHECK(suction_resistance(p, p.P_suc_threshold - 2.0) == doctest::Approx(7.0));
    CHECK(suction_resistance(p, p.P_suc_threshold - 1e-9) == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("speed clamp") {
    CHECK(clamp_speed(2400.0) == 2400.0);
    CHECK(clamp_speed(1700.0) == 1800.0);
    CHECK(clamp_speed(3100.0) == 3000.0);
    double prev = 0.0;
    for (double c = 1000; c < 4000; c += 37) {
      const double v = clamp_speed(c);
      CHECK(clamp_speed(v) == v);
      CHECK(v >= prev);
      prev = v;
    }
  }

  TEST_CASE("default coefficients give a clinical flow at 2400 rpm") {
    CvsSimulator sim(CvsParameters{}, PumpParameters{});
    double flow = 0.0;
    int n = 0;
    while (sim.time() < 100.0) {
      const Sample s = sim.advance();
      if (s.t > 90.0) {
        flow += s.Qpump;
        ++n;
      }
    }
    flow /= n;
    CHECK(flow >= 66.0);
    CHECK(flow <= 100.0);
  }
}
