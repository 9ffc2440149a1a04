#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lvad/config.hpp"
#include "lvad/cvs_model.hpp"
#include "lvad/scenario.hpp"

using namespace lvad;

namespace {

// Hand-coded flow balance for the LV, independent of hemodynamics().
double lv_balance_oracle(const StateVector<double>& x, const CvsParameters& p, const Drive& d) {
  const double Pla = p.P0la * (std::exp(p.lambda_la * (x[kVla] - p.V0la)) - 1.0) * (1.0 - d.atrial_activation) +
                     d.atrial_activation * p.Eesla * (x[kVla] - p.Vdla) + p.Pthor;
  const double Plv = p.P0lvf * (std::exp(p.lambda_lvf * (x[kVlv] - p.V0lvf)) - 1.0) *
                         (1.0 - d.ventricular_activation) +
                     d.ventricular_activation * p.Eeslvf * (x[kVlv] - p.Vdlvf) + p.Pthor;
  const double Pao = p.Eao * (x[kVao] - p.Vuao) + p.Pthor;
  const double Qmt = std::max(0.0, (Pla - Plv) / p.Rmt);
  const double Qav = std::max(0.0, (Plv - Pao) / p.Rav);
  return Qmt - Qav - x[kQpump];
}

StateVector<double> random_state(std::mt19937_64& rng, const CvsParameters& p) {
  StateVector<double> x = initial_state(p).x;
  std::uniform_real_distribution<double> f(0.85, 1.15), q(-50.0, 150.0);
  for (int i = 0; i < kVolumeCount; ++i) x[i] *= f(rng);
  x[kQao] = q(rng);
  x[kQpa] = q(rng);
  x[kQpump] = q(rng);
  return x;
}

std::vector<double> lvedp_trace(double dt, double duration) {
  SimulatorOptions opts;
  opts.dt = dt;
  CvsSimulator sim(CvsParameters{}, PumpParameters{}, {}, opts);
  std::vector<double> out;
  while (sim.time() < duration - 1e-9) out.push_back(sim.advance().lvedp_true);
  return out;
}

}  // namespace

TEST_SUITE("cvs-model") {
  TEST_CASE("chamber pressure at the unstressed end-diastolic volume equals Pthor") {
    const CvsParameters p;
    CHECK(chamber_pressure(p.V0lvf, 0.0, left_ventricle(p), p.Pthor) == doctest::Approx(-4.0));
  }

  TEST_CASE("LV diastolic pressure at 120 mL") {
    const CvsParameters p;
    const double expected = 0.98 * (std::exp(0.028 * 80.0) - 1.0) - 4.0;
    CHECK(chamber_pressure(120.0, 0.0, left_ventricle(p), p.Pthor) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(4.23).epsilon(0.002));
  }

  TEST_CASE("chamber pressure is nondecreasing in volume above Vd and V0") {
    const CvsParameters p;
    for (const auto& c : {left_ventricle(p), right_ventricle(p), left_atrium(p), right_atrium(p)})
      for (double a : {0.0, 0.3, 1.0}) {
        double prev = -1e300;
        for (double v = std::max(c.Vd, c.V0); v < 300.0; v += 0.5) {
          const double pr = chamber_pressure(v, a, c, p.Pthor);
          CHECK(pr >= prev);
          prev = pr;
        }
      }
  }

  TEST_CASE("valve flow is a diode") {
    CHECK(valve_flow(5.0, 10.0, 0.01) == 0.0);
    CHECK(valve_flow(10.0, 10.0, 0.01) == 0.0);
    CHECK(valve_flow(11.0, 10.0, CvsParameters{}.Rmt) == doctest::Approx(100.0));
  }

  TEST_CASE("activation driver") {
    CHECK(elastance_activation(0.0, 0.5) == 0.0);
    CHECK(elastance_activation(0.25, 0.5) == doctest::Approx(1.0));
    CHECK(elastance_activation(0.6, 0.5) == 0.0);
    const ActivationSpec a = activation_spec(CvsParameters{}, 80.0);
    CHECK(a.T == doctest::Approx(0.75));
    CHECK(a.Tsys == doctest::Approx(0.5 * std::sqrt(0.75)));
    // atrial contraction ends at the start of the next beat
    CHECK(atrial_activation(a.T - 0.5 * kAtrialLead * a.T, a) == doctest::Approx(1.0));
    CHECK(atrial_activation(a.T - 1.01 * kAtrialLead * a.T, a) == 0.0);
  }

  TEST_CASE("volume derivatives sum to the external transfer rate") {
    const CvsParameters p;
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
      Drive d;
      d.ventricular_activation = std::uniform_real_distribution<double>(0, 1)(rng);
      d.atrial_activation = std::uniform_real_distribution<double>(0, 1)(rng);
      d.speed = 2400.0;
      d.Rsa = p.Rsa;
      d.Rpa = p.Rpa;
      d.transfer_rate = (k % 2) ? 0.0 : 30.0;
      const auto x = random_state(rng, p);
      const auto dx = derivatives(x, p, PumpParameters{}, d);
      CHECK(dx.head<kVolumeCount>().sum() == doctest::Approx(d.transfer_rate).epsilon(1e-9).scale(1e3));
      CHECK(dx[kVlv] == doctest::Approx(lv_balance_oracle(x, p, d)).epsilon(1e-12).scale(1e3));
    }
  }

  TEST_CASE("no flow with equal pressures everywhere and no pump") {
    // all compartments at Pthor-referenced zero transmural pressure, closed valves
    CvsParameters p;
    p.Pthor = 0.0;
    StateVector<double> x = StateVector<double>::Zero();
    x[kVla] = p.V0la;
    x[kVlv] = p.V0lvf;
    x[kVra] = p.V0ra;
    x[kVrv] = p.V0rvf;
    x[kVao] = p.Vuao;
    x[kVsa] = p.Vusa;
    x[kVsv] = p.Vusv;
    x[kVvc] = p.Vuvc;
    x[kVpa] = p.Vupa;
    x[kVpu] = p.Vupu;
    Drive d;
    d.Rsa = p.Rsa;
    d.Rpa = p.Rpa;
    const auto dx = derivatives(x, p, PumpParameters{}, d);
    for (int i = 0; i < kVolumeCount; ++i) CHECK(dx[i] == doctest::Approx(0.0));
  }

  TEST_CASE("passive network relaxes to a static equilibrium") {
    const CvsParameters p;
    PumpParameters pump;
    CvsState s = initial_state(p);
    Drive d;
    d.Rsa = p.Rsa;
    d.Rpa = p.Rpa;
    auto f = [&](const StateVector<double>& x) { return derivatives(x, p, pump, d); };
    const double h = 1e-4;
    auto rate = [&] { return f(s.x).head<kVolumeCount>().cwiseAbs().maxCoeff(); };
    std::vector<double> rates;
    for (int k = 1; k <= 2000000; ++k) {  // 200 s
      const auto k1 = f(s.x);
      const auto k2 = f(s.x + 0.5 * h * k1);
      const auto k3 = f(s.x + 0.5 * h * k2);
      const auto k4 = f(s.x + h * k3);
      s.x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      if (k % 500000 == 0) rates.push_back(rate());
    }
    for (std::size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] < rates[i - 1]);
    CHECK(rates.back() < 1e-3);
  }

  TEST_CASE("nominal run conserves volume and keeps valve flows non-negative") {
    CvsSimulator sim(CvsParameters{}, PumpParameters{});
    double worst = 0.0;
    for (int k = 0; k < 4000; ++k) {
      const Sample s = sim.advance();
      worst = std::max(worst, std::abs(s.volume_error));
      CHECK(s.Qmt >= 0.0);
      CHECK(s.Qav >= 0.0);
    }
    CHECK(worst <= 0.1);
  }

  TEST_CASE("fluid transfer is tracked by the conservation bookkeeping") {
    for (auto kind : {ScenarioKind::RestToExercise, ScenarioKind::PosturalChange}) {
      const Scenario sc = make_scenario(kind, 5.0);
      CvsSimulator sim(CvsParameters{}, PumpParameters{}, sc.forcing());
      double worst = 0.0;
      while (sim.time() < 60.0) worst = std::max(worst, std::abs(sim.advance().volume_error));
      CHECK(worst <= 0.1);
      const double expected = CvsParameters{}.Vtotal + sc.transfer.transferred(sim.time());
      CHECK(sim.state().total_volume() == doctest::Approx(expected).epsilon(1e-6));
    }
  }

  TEST_CASE("step halving barely moves the LVEDP trace") {
    const auto coarse = lvedp_trace(1e-4, 10.0);
    const auto fine = lvedp_trace(5e-5, 10.0);
    REQUIRE(coarse.size() == fine.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
      if (!std::isnan(coarse[i])) worst = std::max(worst, std::abs(coarse[i] - fine[i]));
    CHECK(worst < 0.05);
  }

  TEST_CASE("constant 2400 rpm reaches a periodic steady state") {
    CvsSimulator sim(CvsParameters{}, PumpParameters{});
    std::vector<double> beats;
    while (sim.time() < 100.0) {
      const Sample s = sim.advance();
      if (s.lvedp_event) beats.push_back(s.lvedp_true);
    }
    REQUIRE(beats.size() > 90);
    CHECK(std::abs(beats.back() - beats[beats.size() - 2]) < 0.01);
  }

  TEST_CASE("true LVEDP annotation") {
    SUBCASE("activation onset at 0.3 s") {
      std::vector<double> t, plv, act;
      for (int i = 0; i < 400; ++i) {
        const double ti = i / 200.0;
        t.push_back(ti);
        plv.push_back(7.0 + ti);
        act.push_back(std::fmod(ti, 1.0) > 0.3 && std::fmod(ti, 1.0) < 0.7 ? 0.5 : 0.0);
      }
      const auto ev = true_lvedp(t, plv, act);
      REQUIRE(!ev.empty());
      CHECK(std::abs(ev.front().time - 0.3) <= 1.0 / 200.0);
    }
    SUBCASE("constant pressure gives that constant") {
      std::vector<double> t, plv, act;
      for (int i = 0; i < 600; ++i) {
        const double ti = i / 200.0;
        t.push_back(ti);
        plv.push_back(6.5);
        act.push_back(std::fmod(ti, 1.0) > 0.4 && std::fmod(ti, 1.0) < 0.8 ? 1.0 : 0.0);
      }
      for (const auto& e : true_lvedp(t, plv, act)) CHECK(e.value == 6.5);
    }
    SUBCASE("shorter than one beat is an error") {
      std::vector<double> t{0.0, 0.005}, plv{1.0, 1.0}, act{0.0, 0.0};
      CHECK_THROWS_AS(true_lvedp(t, plv, act), std::invalid_argument);
    }
    SUBCASE("agrees with the end of mitral inflow on the simulator") {
      CvsSimulator sim(CvsParameters{}, PumpParameters{});
      while (sim.time() < 20.0) sim.advance();
      std::vector<double> t, plv, act, qmt;
      while (sim.time() < 30.0) {
        const Sample s = sim.advance();
        t.push_back(s.t);
        plv.push_back(s.Plv);
        act.push_back(s.activation);
        qmt.push_back(s.Qmt);
      }
      const auto ev = true_lvedp(t, plv, act);
      REQUIRE(ev.size() >= 8);
      for (const auto& e : ev) {
        auto it = std::lower_bound(t.begin(), t.end(), e.time - 1e-9);
        std::size_t i = static_cast<std::size_t>(it - t.begin());
        while (i + 1 < qmt.size() && qmt[i + 1] > 0.0) ++i;  // last sample with mitral inflow
        CHECK(std::abs(t[i] - e.time) <= 1.0 / 200.0 + 1e-9);
      }
    }
  }

  TEST_CASE("published parameters survive a config round trip bit for bit") {
    const RunConfiguration c;
    const RunConfiguration back = parse_config_text(to_config_text(c));
    for (const auto& info : published_parameters()) CHECK(back.cvs.*(info.field) == c.cvs.*(info.field));
    CHECK(published_parameters().size() == 43);
  }

  TEST_CASE("identical inputs give bit-identical traces") {
    auto run = [] {
      CvsSimulator sim(CvsParameters{}, PumpParameters{}, make_scenario(ScenarioKind::RestToExercise, 2.0).forcing());
      std::vector<double> v;
      for (int k = 0; k < 1000; ++k) v.push_back(sim.advance().Plv);
      return v;
    };
    CHECK(run() == run());
  }
}
