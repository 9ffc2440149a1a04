#include <doctest.h>

#include <cmath>
#include <random>

#include "lvad/controllers.hpp"

using namespace lvad;

namespace {

// scalar projection estimator written out independently of the library
double oracle_ppd(double phi, double du, double dy, double eta, double mu, double phi1, double eps) {
  double next = phi + eta * du * (dy - phi * du) / (mu + du * du);
  if (std::fabs(next) <= eps || std::fabs(du) <= eps) next = phi1;
  if ((next > 0) != (phi1 > 0)) next = phi1;
  return next;
}

MfacConfig unclamped() {
  MfacConfig c;
  c.u_min = -1e12;
  c.u_max = 1e12;
  return c;
}

}  // namespace

TEST_SUITE("controllers") {
  TEST_CASE("PPD estimator examples") {
    const MfacConfig c;
    CHECK(mfac_estimate_ppd(0.001, 10.0, 0.05, c) == doctest::Approx(0.001 + 10.0 * 0.04 / 100.1).epsilon(1e-12));
    CHECK(mfac_estimate_ppd(0.001, 10.0, 0.05, c) == doctest::Approx(0.004996).epsilon(1e-3));
    CHECK(mfac_estimate_ppd(0.3, 0.0, 0.5, c) == c.phi1);
    CHECK(mfac_estimate_ppd(0.001, 1.0, -5.0, c) == c.phi1);
  }

  TEST_CASE("PPD estimator matches the scalar oracle") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MfacConfig c;
    for (int k = 0; k < 100000; ++k) {
      c.eta = 0.05 + 0.95 * std::fabs(u(rng));
      c.mu = 0.01 + std::fabs(u(rng));
      const double phi = 0.5 * u(rng);
      const double du = k % 17 == 0 ? 0.0 : 20.0 * u(rng);
      const double dy = 0.5 * u(rng);
      const double got = mfac_estimate_ppd(phi, du, dy, c);
      const double want = oracle_ppd(phi, du, dy, c.eta, c.mu, c.phi1, c.epsilon);
      CHECK(std::fabs(got - want) <= 1e-12);
    }
  }

  TEST_CASE("control law examples") {
    MfacConfig c = unclamped();
    c.rho = 1.0;
    c.lambda = 0.1;
    SUBCASE("one step of the law") {
      // seed the state, then inject the PPD directly through phi1
      c.phi1 = 0.5;
      MfacState s;
      s.u_prev = 2400.0;
      const double u = mfac_control(s, 10.0, 10.2, c);
      CHECK(u == doctest::Approx(2400.0 + 0.5 * 0.2 / (0.1 + 0.25)).epsilon(1e-12));
      CHECK(u == doctest::Approx(2400.286).epsilon(1e-6));
      CHECK(s.u_prev == u);
      CHECK(s.u_prev2 == 2400.0);
      CHECK(s.y_prev == 10.0);
    }
    SUBCASE("zero error holds the command") {
      MfacState s;
      s.u_prev = 2500.0;
      CHECK(mfac_control(s, 7.0, 7.0, c) == 2500.0);
      CHECK(mfac_control(s, 7.0, 7.0, c) == 2500.0);
    }
    SUBCASE("clamp") {
      MfacConfig cc;
      cc.phi1 = 0.5;
      MfacState s;
      s.u_prev = 2400.0;
      CHECK(mfac_control(s, 0.0, 1e6, cc) == 3000.0);
      CHECK(s.u_prev == 3000.0);
      MfacState t;
      t.u_prev = 2400.0;
      CHECK(mfac_control(t, 1e6, 0.0, cc) == 1800.0);
    }
  }

  // The per-step contraction is at most b/(2*sqrt(lambda)); the 1e-6 target in
  // 1e4 steps needs a small lambda for b = 0.001.
  TEST_CASE("regulation on a first-order surrogate plant") {
    for (double b : {0.001, 0.01, 0.1}) {
      CAPTURE(b);
      MfacConfig c = unclamped();
      c.lambda = 1e-4;
      MfacState s;
      s.u_prev = 0.0;
      double y = 0.0;
      const double y_star = 1.0;
      double prev_err = INFINITY;
      bool monotone = true;
      int reached = -1;
      for (int k = 0; k < 10000; ++k) {
        const double u_before = s.u_prev;
        const double u = mfac_control(s, y, y_star, c);
        y += b * (u - u_before);
        const double err = std::fabs(y_star - y);
        if (k > 0 && err > prev_err + 1e-15) monotone = false;
        prev_err = err;
        if (err < 1e-6) {
          reached = k;
          break;
        }
      }
      CHECK(monotone);
      CHECK(reached >= 0);
    }
  }

  TEST_CASE("surrogate error is non-increasing with the default weights") {
    for (double b : {0.001, 0.01, 0.1}) {
      CAPTURE(b);
      const MfacConfig c = unclamped();
      MfacState s;
      double y = 0.0, prev_err = INFINITY;
      for (int k = 0; k < 10000; ++k) {
        const double u_before = s.u_prev;
        y += b * (mfac_control(s, y, 1.0, c) - u_before);
        const double err = std::fabs(1.0 - y);
        if (k > 0) CHECK(err <= prev_err + 1e-15);
        prev_err = err;
      }
      CHECK(prev_err < 1.0);
    }
  }

  TEST_CASE("bounded under fuzzed setpoints") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> sp(-50.0, 50.0), noise(-5.0, 5.0);
    MfacController mc(MfacConfig{}, 2400.0);
    double y = 10.0;
    for (int k = 0; k < 20000; ++k) {
      const double u = mc.update(y, sp(rng));
      CHECK(u >= 1800.0);
      CHECK(u <= 3000.0);
      CHECK(std::isfinite(mc.state().phi_hat));
      y = 10.0 - 0.004 * (u - 2400.0) + noise(rng);
    }
  }

  TEST_CASE("wrapper with unit scale and sign matches the raw law") {
    MfacConfig c;
    c.input_scale = 1.0;
    c.output_sign = 1.0;
    MfacController mc(c, 2400.0);
    MfacState s;
    s.u_prev = 2400.0;
    s.u_prev2 = 2400.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(2.0, 20.0);
    for (int k = 0; k < 200; ++k) {
      const double y = d(rng), r = d(rng);
      CHECK(mc.update(y, r) == mfac_control(s, y, r, c));
    }
  }

  TEST_CASE("negative output sign reverses the direction of action") {
    MfacController mc(MfacConfig{}, 2400.0);
    // LVEDP above setpoint must speed the pump up
    CHECK(mc.update(12.0, 8.0) > 2400.0);
    MfacController md(MfacConfig{}, 2400.0);
    CHECK(md.update(4.0, 8.0) < 2400.0);
  }

  TEST_CASE("PID examples") {
    const PidConfig c;
    SUBCASE("zero error gives the bias") {
      PidState s;
      for (int k = 0; k < 100; ++k) CHECK(pid_control(s, 0.0, 0.005, c) == 2400.0);
      CHECK(s.integrator == 0.0);
    }
    SUBCASE("proportional contribution on the first tick") {
      PidState s;
      pid_control(s, 1.0, 0.005, c);
      CHECK(s.last_p == doctest::Approx(133.09));
      CHECK(s.last_d == 0.0);
      CHECK(s.last_i == doctest::Approx(17.17 * 0.005));
    }
    SUBCASE("integrator frozen while saturated") {
      PidState s;
      double u = 0.0;
      for (int k = 0; k < 4000 && u < 3000.0; ++k) u = pid_control(s, 3.0, 0.005, c);
      REQUIRE(u == 3000.0);
      const double held = s.integrator;
      CHECK(held > 0.0);
      for (int k = 0; k < 100; ++k) CHECK(pid_control(s, 3.0, 0.005, c) == 3000.0);
      CHECK(s.integrator == held);
      // once the output is back inside the limits a negative error integrates again
      pid_control(s, -0.5, 0.005, c);
      pid_control(s, -0.5, 0.005, c);
      CHECK(s.integrator < held);
    }
    SUBCASE("P and D scale linearly with the error") {
      PidConfig nc = c;
      nc.ki = 0.0;
      for (double e : {0.1, 0.7, 2.0}) {
        PidState s1, s2;
        pid_control(s1, 0.0, 0.005, nc);
        pid_control(s2, 0.0, 0.005, nc);
        pid_control(s1, e, 0.005, nc);
        pid_control(s2, 2 * e, 0.005, nc);
        CHECK(s2.last_p == doctest::Approx(2 * s1.last_p));
        CHECK(s2.last_d == doctest::Approx(2 * s1.last_d));
      }
    }
    SUBCASE("bad dt") {
      PidState s;
      CHECK_THROWS(pid_control(s, 1.0, 0.0, c));
    }
  }

  TEST_CASE("config validation") {
    MfacConfig m;
    m.eta = 1.5;
    CHECK_THROWS(m.validate());
    m = MfacConfig{};
    m.input_scale = 0.0;
    CHECK_THROWS(m.validate());
    PidConfig p;
    p.u_min = 3000.0;
    CHECK_THROWS(p.validate());
  }
}
