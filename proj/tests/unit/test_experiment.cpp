#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lvad/experiment.hpp"

using namespace lvad;

namespace {

// brute force over every sign assignment, midranks for ties
double oracle_wilcoxon_p(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) ++below;
      if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
    }
    rank[i] = below + (equal + 1) / 2.0;
  }
  double w = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) w += rank[i];
  double lower = 0, upper = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < total; ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank[i];
    if (s <= w + 1e-9) ++lower;
    if (s >= w - 1e-9) ++upper;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / static_cast<double>(total));
}

ProtocolInputs short_protocol() {
  ProtocolInputs in;
  in.protocol.warmup_end = 20.0;
  in.protocol.controller_on = 20.0;
  in.protocol.scenario_onset = 30.0;
  in.protocol.run_end = 50.0;
  return in;
}

}  // namespace

TEST_SUITE("experiment-harness") {
  TEST_CASE("sum of absolute errors") {
    const std::vector<double> d{5, 5, 5}, m{5, 5, 5}, m2{6, 4, 6};
    CHECK(sae(d, m) == 0.0);
    CHECK(sae(d, m2) == 3.0);
    CHECK_THROWS_AS(sae(d, std::vector<double>{1.0}), std::invalid_argument);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> a(50), b(50);
      for (auto& x : a) x = u(rng);
      for (auto& x : b) x = u(rng);
      const double base = sae(a, b);
      CHECK(base >= 0.0);
      CHECK(sae(b, a) == doctest::Approx(base));
      auto a2 = a, b2 = b;
      for (auto& x : a2) x += 3.0;
      for (auto& x : b2) x += 3.0;
      CHECK(sae(a2, b2) == doctest::Approx(base));
      std::reverse(a2.begin(), a2.end());
      std::reverse(b2.begin(), b2.end());
      CHECK(sae(a2, b2) == doctest::Approx(base));
    }
  }

  TEST_CASE("safety flags") {
    const std::vector<double> ok{5, 8, 12}, high{5, 16, 17}, low{2.5, 5};
    CHECK_FALSE(safety_flags(ok, 0.005).congestion);
    CHECK_FALSE(safety_flags(ok, 0.005).suction);
    const auto h = safety_flags(high, 0.005);
    CHECK(h.congestion);
    CHECK(h.congestion_s == doctest::Approx(0.010));
    CHECK(safety_flags(low, 0.005).suction);
    CHECK_FALSE(safety_flags(std::vector<double>{15.0, 3.0}, 0.005).congestion);
    CHECK_FALSE(safety_flags(std::vector<double>{15.0, 3.0}, 0.005).suction);
  }

  TEST_CASE("Wilcoxon signed-rank") {
    SUBCASE("constant shift, eight pairs") {
      std::vector<double> a, b;
      for (int i = 0; i < 8; ++i) {
        b.push_back(i * 1.7 + 0.3);
        a.push_back(b.back() + 2.5 + 0.01 * i);
      }
      const auto r = wilcoxon_paired(a, b);
      CHECK(r.exact);
      CHECK(r.p == doctest::Approx(0.0078125).epsilon(1e-12));
      CHECK(r.w_plus == 36.0);
      CHECK(r.w_minus == 0.0);
    }
    SUBCASE("all equal is degenerate") {
      const std::vector<double> a{1, 2, 3, 4, 5, 6};
      const auto r = wilcoxon_paired(a, a);
      CHECK(r.degenerate);
      CHECK(r.p == 1.0);
    }
    SUBCASE("bad inputs") {
      CHECK_THROWS(wilcoxon_paired(std::vector<double>{1, 2}, std::vector<double>{1}));
      CHECK_THROWS(wilcoxon_paired(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}));
    }
    SUBCASE("exact p matches enumeration, with ties") {
      std::mt19937_64 rng(99);
      std::uniform_int_distribution<int> nd(5, 10), vd(-6, 6);
      for (int trial = 0; trial < 1000; ++trial) {
        const int n = nd(rng);
        std::vector<double> a(n), b(n, 0.0), d;
        for (auto& x : a) {
          do x = vd(rng) * 0.5;
          while (x == 0.0);
          d.push_back(x);
        }
        const auto r = wilcoxon_paired(a, b);
        CHECK(r.p == doctest::Approx(oracle_wilcoxon_p(d)).epsilon(1e-12));
        CHECK(r.w_plus + r.w_minus == doctest::Approx(n * (n + 1) / 2.0));
      }
    }
    SUBCASE("normal approximation for larger samples") {
      std::vector<double> a, b;
      for (int i = 0; i < 30; ++i) {
        a.push_back(i + (i % 3 == 0 ? -0.5 : 0.7));
        b.push_back(i);
      }
      const auto r = wilcoxon_paired(a, b);
      CHECK_FALSE(r.exact);
      CHECK(r.p > 0.0);
      CHECK(r.p < 0.05);
      const auto s = wilcoxon_paired(b, a);
      CHECK(s.p == doctest::Approx(r.p));
    }
  }

  TEST_CASE("box statistics") {
    const auto one = box_stats({4.0});
    CHECK(one.n == 1);
    CHECK(one.median == 4.0);
    CHECK(one.q1 == 4.0);
    CHECK(one.q3 == 4.0);
    CHECK(one.outliers.empty());
    const auto b = box_stats({1, 2, 3, 4, 100});
    CHECK(b.median == 3.0);
    REQUIRE(b.outliers.size() == 1);
    CHECK(b.outliers[0] == 100.0);
    CHECK(b.whisker_low == 1.0);
    CHECK(b.whisker_high == 4.0);
    CHECK(b.mean == doctest::Approx(22.0));
    CHECK(box_stats({}).n == 0);
    const std::vector<double> sorted{1, 2, 3, 4};
    CHECK(quantile(sorted, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(sorted, 0.0) == 1.0);
    CHECK(quantile(sorted, 1.0) == 4.0);
  }

  TEST_CASE("constant-speed run: SAE equals the summed deviation of the held LVEDP") {
    const ProtocolInputs in = short_protocol();
    const RunResult r = run_protocol(in, ScenarioKind::RsaUp, ControllerKind::None, 0, true);
    REQUIRE(r.status == RunStatus::Ok);
    double oracle = 0.0;
    std::size_t n = 0;
    for (const auto& row : r.trace)
      if (row.t > in.protocol.controller_on + 1e-9) {
        oracle += std::fabs(r.setpoint - row.lvedp_measured);
        ++n;
      }
    CHECK(n == 30 * 200);
    CHECK(r.sae == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(r.speed_min == 2400.0);
    CHECK(r.speed_max == 2400.0);
    CHECK(r.max_volume_error < 1e-6);
    CHECK_FALSE(r.events.empty());
  }

  TEST_CASE("closed-loop runs keep the speed inside the limits and are deterministic") {
    ProtocolInputs in = short_protocol();
    in.protocol.noise_variance = 1.0;
    for (auto c : {ControllerKind::Pid, ControllerKind::Mfac}) {
      CAPTURE(controller_name(c));
      const RunResult a = run_protocol(in, ScenarioKind::RpaUp, c, 17, true);
      const RunResult b = run_protocol(in, ScenarioKind::RpaUp, c, 17, true);
      REQUIRE(a.status == RunStatus::Ok);
      CHECK(a.sae == b.sae);
      CHECK(a.trace.size() == b.trace.size());
      for (const auto& row : a.trace) {
        CHECK(row.speed >= 1800.0);
        CHECK(row.speed <= 3000.0);
      }
      CHECK(std::isfinite(a.sae));
    }
  }

  TEST_CASE("out-of-band LVEDP at activation excludes the run") {
    ProtocolInputs in = short_protocol();
    in.protocol.lvedp_low = 40.0;
    in.protocol.lvedp_high = 50.0;
    const RunResult r = run_protocol(in, ScenarioKind::RpaUp, ControllerKind::Pid);
    CHECK(r.status == RunStatus::Excluded);
    CHECK(std::isnan(r.sae));
    const RunResult forced = run_protocol(in, ScenarioKind::RpaUp, ControllerKind::Pid, 0, false, false);
    CHECK(forced.status == RunStatus::Ok);
  }

  TEST_CASE("cohort: replacement, summaries and thread independence") {
    ProtocolInputs in = short_protocol();
    in.protocol.lvedp_high = 9.0;  // narrow band so that some candidates are replaced
    CohortConfig cfg;
    cfg.scenario = ScenarioKind::RsaUp;
    cfg.patients = 4;
    cfg.seed = 3;
    cfg.threads = 1;
    const CohortResult one = run_cohort(in, cfg);
    cfg.threads = 3;
    const CohortResult many = run_cohort(in, cfg);
    REQUIRE(one.runs.size() == many.runs.size());
    for (std::size_t i = 0; i < one.runs.size(); ++i) {
      CHECK(one.runs[i].patient_index == many.runs[i].patient_index);
      CHECK(one.runs[i].status == many.runs[i].status);
      if (one.runs[i].status == RunStatus::Ok) CHECK(one.runs[i].sae == many.runs[i].sae);
    }
    std::size_t ok_pid = 0, excluded = 0;
    for (const auto& r : one.runs) {
      if (r.status == RunStatus::Excluded) ++excluded;
      if (r.status == RunStatus::Ok && r.controller == ControllerKind::Pid) ++ok_pid;
    }
    // an excluded candidate is recorded once per controller
    CHECK(excluded == one.excluded * cfg.controllers.size());
    CHECK(ok_pid <= cfg.patients);
    for (const auto& row : summarize(one)) {
      std::size_t ok = 0;
      for (const auto& r : one.runs) ok += r.controller == row.controller && r.status == RunStatus::Ok;
      CHECK(row.stats.n == ok);
    }
    const auto [pid, mfac] = paired_sae(one, ControllerKind::Pid, ControllerKind::Mfac);
    CHECK(pid.size() == mfac.size());
  }
}
