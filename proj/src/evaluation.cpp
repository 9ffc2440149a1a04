#include "lvad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lvad/parallel.hpp"

namespace lvad {

Recording record_open_loop(const ProtocolInputs& in, ScenarioKind scenario, std::uint64_t seed) {
  const Scenario sc = make_scenario(scenario, in.protocol.scenario_onset);
  SimulatorOptions opts;
  opts.dt = in.protocol.dt;
  opts.sample_rate = in.detector.fs;
  CvsSimulator sim(in.cvs, in.pump, sc.forcing(), opts);
  sim.set_speed(in.protocol.warmup_speed);
  Recording rec;
  rec.seed = seed;
  const auto n = static_cast<std::size_t>(std::llround(in.protocol.run_end * in.detector.fs));
  rec.t.reserve(n);
  rec.plv.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Sample s = sim.advance();
    rec.t.push_back(s.t);
    rec.plv.push_back(s.Plv);
    if (s.lvedp_event) rec.truth.push_back({s.lvedp_event_time, s.lvedp_true});
  }
  return rec;
}

std::vector<double> add_noise(std::span<const double> x, double variance, std::uint64_t seed) {
  std::vector<double> y(x.begin(), x.end());
  if (variance <= 0.0) return y;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(variance));
  for (double& v : y) v += nd(rng);
  return y;
}

namespace {

/// Running pooled moments from per-run (n, mean, sample std).
struct Pool {
  double n = 0.0, sum = 0.0, sumsq = 0.0;
  void add(std::size_t count, double mean, double sd) {
    if (count == 0) return;
    const double c = static_cast<double>(count);
    n += c;
    sum += c * mean;
    sumsq += (c - 1.0) * sd * sd + c * mean * mean;
  }
  double mean() const { return n > 0 ? sum / n : NAN; }
  double sd() const {
    if (n < 2) return n > 0 ? 0.0 : NAN;
    return std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)));
  }
};

}  // namespace

std::vector<DetectEvalRow> detect_eval(const ProtocolInputs& in, ScenarioKind scenario,
                                       std::span<const double> variances, const DetectEvalOptions& opt) {
  if (variances.empty()) throw std::invalid_argument("detect-eval needs at least one noise variance");
  for (double v : variances)
    if (!(v >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");

  const std::size_t n = std::max<std::size_t>(1, opt.patients);
  struct PerRun {
    std::vector<DetectionMetrics> metrics;  // per variance
    std::vector<bool> ok;
    double signal_power = 0.0;
  };
  std::vector<PerRun> runs(n);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    ProtocolInputs pin = in;
    std::uint64_t seed = 0;
    if (opt.patients > 0) {
      seed = patient_seed(opt.seed, scenario, i);
      pin.cvs = generate_patient(seed, scenario).apply(in.cvs);
    }
    auto& out = runs[i];
    out.metrics.resize(variances.size());
    out.ok.assign(variances.size(), false);
    const auto mean_square = [&](std::span<const double> t, auto&& value) {
      double power = 0.0;
      std::size_t count = 0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < in.protocol.eval_start) continue;
        const double p = value(k);
        power += p * p;
        ++count;
      }
      return count ? power / static_cast<double>(count) : NAN;
    };

    if (opt.closed_loop) {
      double power_sum = 0.0;
      std::size_t power_n = 0;
      for (std::size_t v = 0; v < variances.size(); ++v) {
        ProtocolInputs vin = pin;
        vin.protocol.noise_variance = variances[v];
        const RunResult r =
            run_protocol(vin, scenario, opt.controller, seed ^ (0x9e3779b97f4a7c15ULL * (v + 1)), true, false);
        if (r.status != RunStatus::Ok) continue;
        std::vector<double> t(r.trace.size());
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = r.trace[k].t;
        const double pw = mean_square(t, [&](std::size_t k) { return r.trace[k].Plv; });
        if (std::isfinite(pw)) {
          power_sum += pw;
          ++power_n;
        }
        try {
          out.metrics[v] = evaluate(r.events, r.truth, in.protocol.eval_start);
          out.ok[v] = true;
        } catch (const DetectionMismatch&) {
        }
      }
      out.signal_power = power_n ? power_sum / static_cast<double>(power_n) : NAN;
      return;
    }

    Recording rec;
    try {
      rec = record_open_loop(pin, scenario, seed);
    } catch (const SimulationError&) {
      out.metrics.clear();
      return;
    }
    out.signal_power = mean_square(rec.t, [&](std::size_t k) { return rec.plv[k]; });
    for (std::size_t v = 0; v < variances.size(); ++v) {
      const auto noisy = add_noise(rec.plv, variances[v], seed ^ (0x9e3779b97f4a7c15ULL * (v + 1)));
      const auto events = detect(rec.t, noisy, in.detector);
      try {
        out.metrics[v] = evaluate(events, rec.truth, in.protocol.eval_start);
        out.ok[v] = true;
      } catch (const DetectionMismatch&) {
      }
    }
  });

  std::vector<DetectEvalRow> rows;
  for (std::size_t v = 0; v < variances.size(); ++v) {
    DetectEvalRow row;
    row.scenario = scenario;
    row.variance = variances[v];
    Pool acc, lat;
    double snr_sum = 0.0;
    std::size_t snr_n = 0;
    for (const auto& r : runs) {
      if (r.metrics.empty()) {
        ++row.failed;
        continue;
      }
      if (!r.ok[v]) {
        ++row.failed;
        continue;
      }
      ++row.runs;
      const auto& m = r.metrics[v];
      row.beats += m.matched;
      acc.add(m.matched, m.accuracy_mean, m.accuracy_std);
      lat.add(m.matched, m.latency_mae_ms, m.latency_std_ms);
      if (variances[v] > 0.0 && r.signal_power > 0.0) {
        snr_sum += 10.0 * std::log10(r.signal_power / variances[v]);
        ++snr_n;
      }
    }
    row.accuracy_mean = acc.mean();
    row.accuracy_std = acc.sd();
    row.latency_mean = lat.mean();
    row.latency_std = lat.sd();
    row.snr_db = snr_n ? snr_sum / static_cast<double>(snr_n) : NAN;
    rows.push_back(row);
  }
  return rows;
}

// --- calibrations ---------------------------------------------------------------------

PumpCalibration calibrate_pump(const CvsParameters& cvs, const PumpParameters& base,
                               std::span<const double> a2_grid, std::span<const double> a1_grid, double speed,
                               double duration, double flow_low, double flow_high, double lvedp_target,
                               unsigned threads) {
  PumpCalibration cal;
  cal.grid.resize(a2_grid.size() * a1_grid.size());
  parallel_for(cal.grid.size(), threads, [&](std::size_t job) {
    auto& pt = cal.grid[job];
    pt.a2 = a2_grid[job / a1_grid.size()];
    pt.a1 = a1_grid[job % a1_grid.size()];
    PumpParameters pump = base;
    pump.a2 = pt.a2;
    pump.a1 = pt.a1;
    try {
      CvsSimulator sim(cvs, pump);
      sim.set_speed(speed);
      double flow = 0.0;
      std::size_t count = 0;
      while (sim.time() < duration - 1e-9) {
        const Sample s = sim.advance();
        if (s.t > duration - 10.0) {
          flow += s.Qpump;
          ++count;
        }
        pt.lvedp = s.lvedp_true;
      }
      pt.mean_flow = flow / static_cast<double>(count);
      pt.in_band = pt.mean_flow >= flow_low && pt.mean_flow <= flow_high;
    } catch (const std::exception&) {
      pt.in_band = false;
    }
  });
  for (const auto& pt : cal.grid) {
    if (!pt.in_band) continue;
    if (!cal.best || std::abs(pt.lvedp - lvedp_target) < std::abs(cal.best->lvedp - lvedp_target)) cal.best = pt;
  }
  return cal;
}

DetectorCalibration calibrate_detector(const ProtocolInputs& in, std::span<const double> alpha_grid,
                                       std::span<const double> beta_in, const DetectorCalibrationOptions& opt) {
  std::vector<double> beta_grid(beta_in.begin(), beta_in.end());
  std::sort(beta_grid.begin(), beta_grid.end());
  struct Noisy {
    std::vector<double> t, plv;
    std::vector<TrueLvedp> truth;
  };
  const std::size_t per = opt.patients_per_scenario + 1;
  std::vector<Noisy> recs(std::size(kAllScenarios) * per);
  parallel_for(recs.size(), opt.threads, [&](std::size_t i) {
    const ScenarioKind kind = kAllScenarios[i / per];
    const std::size_t j = i % per;
    ProtocolInputs pin = in;
    std::uint64_t seed = opt.seed;
    if (j > 0) {
      seed = patient_seed(opt.seed, kind, j - 1);
      pin.cvs = generate_patient(seed, kind).apply(in.cvs);
    }
    Recording rec = record_open_loop(pin, kind, seed);
    recs[i] = {std::move(rec.t), add_noise(rec.plv, opt.variance, seed ^ 0x5ca1ab1eULL), std::move(rec.truth)};
  });

  DetectorCalibration cal;
  cal.recordings = recs.size();
  cal.grid.resize(alpha_grid.size() * beta_grid.size());
  parallel_for(cal.grid.size(), opt.threads, [&](std::size_t job) {
    auto& pt = cal.grid[job];
    pt.alpha = alpha_grid[job / beta_grid.size()];
    pt.beta = beta_grid[job % beta_grid.size()];
    DetectorConfig cfg = in.detector;
    cfg.alpha = pt.alpha;
    cfg.beta = pt.beta;
    Pool acc, lat;
    DetectionMetrics total{0, 0, 0, 0, 0, 0, 0, 0};
    bool ok = true;
    for (const auto& r : recs) {
      try {
        const DetectionMetrics m = evaluate(detect(r.t, r.plv, cfg), r.truth, in.protocol.eval_start);
        acc.add(m.matched, m.accuracy_mean, m.accuracy_std);
        lat.add(m.matched, m.latency_mae_ms, m.latency_std_ms);
        total.accuracy_max = std::max(total.accuracy_max, m.accuracy_max);
        total.matched += m.matched;
        total.dropped += m.dropped;
        total.spurious += m.spurious;
      } catch (const DetectionMismatch&) {
        ok = false;
      }
    }
    total.latency_mae_ms = lat.mean();
    total.latency_std_ms = lat.sd();
    total.accuracy_mean = acc.mean();
    total.accuracy_std = acc.sd();
    pt.metrics = total;
    pt.clean = ok && total.dropped == 0 && total.spurious == 0 && total.accuracy_max <= opt.gross_error;
    pt.cost = std::abs(total.latency_mae_ms - opt.latency_target_ms) / opt.latency_target_ms +
              std::abs(total.accuracy_mean - opt.accuracy_target) / opt.accuracy_target;
  });
  for (const auto& pt : cal.grid)
    if (pt.clean && (!cal.best || pt.cost < cal.best->cost)) cal.best = pt;
  return cal;
}

MfacCalibration calibrate_mfac(const ProtocolInputs& in, std::span<const double> scale_grid, unsigned threads) {
  constexpr std::size_t ns = std::size(kAllScenarios);
  std::vector<std::optional<WarmStart>> warm(ns);
  parallel_for(ns, threads, [&](std::size_t s) { warm[s].emplace(run_warmup(in, kAllScenarios[s], 0, 0)); });
  for (const auto& w : warm)
    if (!w->eligible(in.protocol)) throw std::runtime_error("nominal patient is not setpoint-eligible");

  MfacCalibration cal;
  cal.grid.resize(scale_grid.size());
  for (std::size_t i = 0; i < scale_grid.size(); ++i) {
    cal.grid[i].input_scale = scale_grid[i];
    cal.grid[i].sae.assign(ns, NAN);
  }
  parallel_for(scale_grid.size() * ns, threads, [&](std::size_t job) {
    const std::size_t i = job / ns, s = job % ns;
    ProtocolInputs pin = in;
    pin.mfac.input_scale = scale_grid[i];
    const RunResult r = finish_protocol(*warm[s], ControllerKind::Mfac, pin);
    cal.grid[i].sae[s] = r.status == RunStatus::Ok ? r.sae : INFINITY;
  });
  for (auto& pt : cal.grid) {
    pt.total = std::accumulate(pt.sae.begin(), pt.sae.end(), 0.0);
    if (!cal.best || pt.total < cal.best->total) cal.best = pt;
  }
  return cal;
}

}  // namespace lvad
