#include "lvad/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lvad/parallel.hpp"

namespace lvad {

void ProtocolConfig::validate() const {
  if (!(warmup_end > 0.0 && warmup_end < scenario_onset && scenario_onset < run_end))
    throw std::invalid_argument("protocol requires 0 < warmup_end < scenario_onset < run_end");
  if (!(controller_on >= warmup_end && controller_on < run_end))
    throw std::invalid_argument("protocol.controller_on must lie in [warmup_end, run_end)");
  if (!(lvedp_low < lvedp_high)) throw std::invalid_argument("protocol.lvedp_low must be < lvedp_high");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("protocol.noise_variance must be >= 0");
  if (!(dt > 0.0 && dt <= 1e-3)) throw std::invalid_argument("protocol.dt must be in (0, 1 ms]");
}

std::string_view controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::None: return "none";
    case ControllerKind::Pid: return "pid";
    case ControllerKind::Mfac: return "mfac";
  }
  return "unknown";
}

std::optional<ControllerKind> parse_controller(std::string_view name) {
  if (name == "none") return ControllerKind::None;
  if (name == "pid") return ControllerKind::Pid;
  if (name == "mfac") return ControllerKind::Mfac;
  return std::nullopt;
}

std::string_view status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Excluded: return "excluded";
    case RunStatus::Failed: return "failed";
  }
  return "unknown";
}

double sae(std::span<const double> desired, std::span<const double> measured) {
  if (desired.size() != measured.size()) throw std::invalid_argument("sae: series lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < desired.size(); ++i) s += std::abs(desired[i] - measured[i]);
  return s;
}

SafetyFlags safety_flags(std::span<const double> lvedp, double sample_period, double low, double high) {
  SafetyFlags f;
  for (double v : lvedp) {
    if (v > high) {
      f.congestion = true;
      f.congestion_s += sample_period;
    }
    if (v < low) {
      f.suction = true;
      f.suction_s += sample_period;
    }
  }
  return f;
}

// --- protocol ------------------------------------------------------------------

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

/// Advances one output sample and feeds the detector.
void advance_sample(WarmStart& w, double noise_sd) {
  const Sample s = w.sim.advance();
  w.min_plv = std::min(w.min_plv, s.Plv);
  w.max_volume_error = std::max(w.max_volume_error, std::abs(s.volume_error));
  if (s.lvedp_event) w.truth.push_back({s.lvedp_event_time, s.lvedp_true});
  double measured = s.Plv;
  if (noise_sd > 0.0) measured += noise_sd * std::normal_distribution<double>(0.0, 1.0)(w.noise_rng);
  if (auto ev = w.detector.push(s.t, measured)) {
    w.events.push_back(*ev);
    w.held_lvedp = ev->value;
  }
  if (w.keep_trace)
    w.trace.push_back({s.t, s.Plv, s.Pla, s.Pao, s.Vlv, s.Qpump, s.speed, s.activation, s.lvedp_true,
                       w.held_lvedp});
}

std::size_t sample_index(double t, double fs) { return static_cast<std::size_t>(std::llround(t * fs)); }

}  // namespace

WarmStart run_warmup(const ProtocolInputs& in, ScenarioKind scenario, std::uint64_t patient_index,
                     std::uint64_t seed, bool keep_trace) {
  in.protocol.validate();
  const Scenario sc = make_scenario(scenario, in.protocol.scenario_onset);
  SimulatorOptions opts;
  opts.dt = in.protocol.dt;
  opts.sample_rate = in.detector.fs;
  WarmStart w{CvsSimulator(in.cvs, in.pump, sc.forcing(), opts), LvedpDetector(in.detector),
              std::mt19937_64(seed ^ kNoiseStream), scenario, patient_index, seed,
              NAN, INFINITY, 0.0, {}, {}, {}, keep_trace, std::nullopt};
  w.sim.set_speed(in.protocol.warmup_speed);
  const double noise_sd = std::sqrt(in.protocol.noise_variance);
  const std::size_t n = sample_index(in.protocol.warmup_end, in.detector.fs);
  if (keep_trace) w.trace.reserve(sample_index(in.protocol.run_end, in.detector.fs));
  try {
    for (std::size_t k = 0; k < n; ++k) advance_sample(w, noise_sd);
  } catch (const std::exception& e) {
    w.failure = e.what();
  }
  return w;
}

RunResult finish_protocol(WarmStart w, ControllerKind controller, const ProtocolInputs& in,
                          bool enforce_eligibility) {
  const auto& proto = in.protocol;
  RunResult r;
  r.scenario = w.scenario;
  r.controller = controller;
  r.patient_index = w.patient_index;
  r.seed = w.seed;
  if (w.failure) {
    r.status = RunStatus::Failed;
    r.message = "warmup: " + *w.failure;
    return r;
  }
  if ((std::isnan(w.held_lvedp) && controller != ControllerKind::None) ||
      (enforce_eligibility && !w.eligible(proto))) {
    r.status = RunStatus::Excluded;
    r.message = std::isnan(w.held_lvedp) ? "setpoint-ineligible: no LVEDP detected"
                                         : "setpoint-ineligible: LVEDP " + std::to_string(w.held_lvedp);
    r.setpoint = w.held_lvedp;
    return r;
  }

  const double fs = in.detector.fs;
  const double sample_period = 1.0 / fs;
  const double noise_sd = std::sqrt(proto.noise_variance);
  r.setpoint = w.held_lvedp + proto.setpoint_offset;

  std::optional<PidController> pid;
  std::optional<MfacController> mfac;
  if (controller == ControllerKind::Pid) pid.emplace(in.pid);
  if (controller == ControllerKind::Mfac) mfac.emplace(in.mfac, w.sim.speed());

  std::vector<double> measured;
  measured.reserve(sample_index(proto.run_end - proto.warmup_end, fs));
  double speed_min = w.sim.speed(), speed_max = w.sim.speed();
  const std::size_t begin = sample_index(proto.warmup_end, fs);
  const std::size_t on = sample_index(proto.controller_on, fs);
  const std::size_t end = sample_index(proto.run_end, fs);
  try {
    for (std::size_t k = begin; k < end; ++k) {
      advance_sample(w, noise_sd);
      measured.push_back(w.held_lvedp);
      if (k + 1 >= on) {  // sample k+1 is at t = (k+1)/fs
        double cmd = w.sim.speed();
        if (pid) cmd = pid->update(w.held_lvedp, r.setpoint, sample_period);
        if (mfac) cmd = mfac->update(w.held_lvedp, r.setpoint);
        w.sim.set_speed(cmd);
        speed_min = std::min(speed_min, w.sim.speed());
        speed_max = std::max(speed_max, w.sim.speed());
      }
    }
  } catch (const std::exception& e) {
    r.status = RunStatus::Failed;
    r.message = e.what();
  }

  r.speed_min = speed_min;
  r.speed_max = speed_max;
  r.min_plv = w.min_plv;
  r.max_volume_error = w.max_volume_error;
  if (r.status == RunStatus::Ok) {
    // only samples after activation count toward SAE and safety
    const std::size_t skip = on > begin ? on - begin : 0;
    std::span<const double> post(measured.data() + std::min(skip, measured.size()),
                                 measured.size() - std::min(skip, measured.size()));
    std::vector<double> desired(post.size(), r.setpoint);
    r.sae = sae(desired, post);
    r.safety = safety_flags(post, sample_period, proto.lvedp_low, proto.lvedp_high);
    if (!post.empty()) {
      const auto [lo, hi] = std::minmax_element(post.begin(), post.end());
      r.min_lvedp = *lo;
      r.max_lvedp = *hi;
    }
    try {
      r.detection = evaluate(w.events, w.truth, proto.eval_start);
    } catch (const DetectionMismatch& e) {
      r.message = e.what();
    }
  }
  if (w.keep_trace) {
    r.events = std::move(w.events);
    r.truth = std::move(w.truth);
  }
  r.trace = std::move(w.trace);
  return r;
}

RunResult run_protocol(const ProtocolInputs& in, ScenarioKind scenario, ControllerKind controller,
                       std::uint64_t seed, bool keep_trace, bool enforce_eligibility) {
  return finish_protocol(run_warmup(in, scenario, 0, seed, keep_trace), controller, in, enforce_eligibility);
}

Objective sae_objective(const ProtocolInputs& base, ScenarioKind kind, ControllerKind controller) {
  return [base, kind, controller](const CvsParameters& p) {
    ProtocolInputs in = base;
    in.cvs = p;
    const RunResult r = run_protocol(in, kind, controller, 0, false, false);
    if (r.status != RunStatus::Ok) throw std::runtime_error(std::string(status_name(r.status)) + ": " + r.message);
    return r.sae;
  };
}

// --- Wilcoxon signed-rank ----------------------------------------------------------

WilcoxonResult wilcoxon_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon_paired: sample sizes differ");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  WilcoxonResult res;
  res.n = d.size();
  if (d.empty()) {
    res.degenerate = true;
    return res;
  }
  if (d.size() < 5) throw std::invalid_argument("wilcoxon_paired: fewer than 5 nonzero differences");

  // midranks of |d|, doubled so that they are integers
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return std::abs(d[i]) < std::abs(d[j]); });
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long r2 = static_cast<long>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long w2_plus = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) w2_plus += rank2[i];
  }
  res.w_plus = static_cast<double>(w2_plus) / 2.0;
  res.w_minus = static_cast<double>(total2 - w2_plus) / 2.0;

  if (n <= 12) {
    // null distribution of 2·W+ over all 2^n sign assignments
    std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = reach; s >= 0; --s)
        if (dist[s] != 0.0) dist[s + rank2[i]] += dist[s];
      reach += rank2[i];
    }
    const double count = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2_plus) lower += dist[s];
      if (s >= w2_plus) upper += dist[s];
    }
    res.p = std::min(1.0, 2.0 * std::min(lower, upper) / count);
    res.exact = true;
    return res;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = std::max(0.0, std::abs(res.w_plus - mean) - 0.5);
  const double z = var > 0.0 ? dev / std::sqrt(var) : 0.0;
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

// --- descriptive statistics ----------------------------------------------------------

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return NAN;
  const double n = static_cast<double>(sorted.size());
  const double pos = n * p + 0.5;  // 1-based position
  if (pos <= 1.0) return sorted.front();
  if (pos >= n) return sorted.back();
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  return sorted[i - 1] + frac * (sorted[i] - sorted[i - 1]);
}

BoxStats box_stats(std::vector<double> v) {
  BoxStats b;
  b.n = v.size();
  if (v.empty()) return b;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  b.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - b.mean) * (x - b.mean);
  b.std = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  b.median = quantile(v, 0.5);
  b.q1 = quantile(v, 0.25);
  b.q3 = quantile(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.whisker_high = NAN;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
      continue;
    }
    if (std::isnan(b.whisker_low)) b.whisker_low = x;
    b.whisker_high = x;
  }
  return b;
}

// --- cohorts ----------------------------------------------------------------------------

CohortResult run_cohort(const ProtocolInputs& base, const CohortConfig& cfg) {
  if (cfg.patients == 0) throw std::invalid_argument("cohort needs at least one patient");
  CohortResult out;
  out.scenario = cfg.scenario;

  // Phase 1: warm starts in batches until enough eligible candidates exist.
  std::vector<WarmStart> warm;
  std::vector<ProtocolInputs> inputs;
  std::vector<std::size_t> chosen;  // indices into warm
  const std::size_t limit = cfg.patients * std::max<std::size_t>(1, cfg.max_attempts_factor);
  std::size_t next = 0;
  while (chosen.size() < cfg.patients && next < limit) {
    const std::size_t want = cfg.patients - chosen.size();
    const std::size_t batch = std::min(limit - next, want + want / 4 + 1);
    std::vector<std::optional<WarmStart>> fresh(batch);
    std::vector<ProtocolInputs> fresh_inputs(batch, base);
    parallel_for(batch, cfg.threads, [&](std::size_t j) {
      const std::uint64_t index = next + j;
      const std::uint64_t seed = patient_seed(cfg.seed, cfg.scenario, index);
      fresh_inputs[j].cvs = generate_patient(seed, cfg.scenario).apply(base.cvs);
      fresh[j].emplace(run_warmup(fresh_inputs[j], cfg.scenario, index, seed, cfg.keep_traces));
    });
    for (std::size_t j = 0; j < batch; ++j) {
      warm.push_back(std::move(*fresh[j]));
      inputs.push_back(std::move(fresh_inputs[j]));
      if (chosen.size() < cfg.patients && warm.back().eligible(base.protocol)) chosen.push_back(warm.size() - 1);
    }
    next += batch;
  }
  // candidates beyond the last chosen one were never needed
  const std::size_t used = chosen.empty() ? warm.size() : chosen.back() + 1;

  // Phase 2: every controller on every chosen warm start.
  const std::size_t nc = cfg.controllers.size();
  std::vector<RunResult> runs(chosen.size() * nc);
  parallel_for(runs.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t w = chosen[job / nc];
    runs[job] = finish_protocol(warm[w], cfg.controllers[job % nc], inputs[w]);
  });

  std::size_t c = 0;
  for (std::size_t w = 0; w < used; ++w) {
    if (c < chosen.size() && chosen[c] == w) {
      for (std::size_t k = 0; k < nc; ++k) out.runs.push_back(std::move(runs[c * nc + k]));
      ++c;
    } else {
      RunResult r = finish_protocol(std::move(warm[w]), ControllerKind::None, inputs[w]);
      if (r.status == RunStatus::Excluded) ++out.excluded;
      for (std::size_t k = 0; k < nc; ++k) {
        r.controller = cfg.controllers[k];
        out.runs.push_back(r);
      }
    }
  }
  return out;
}

std::vector<SummaryRow> summarize(const CohortResult& cohort) {
  std::vector<ControllerKind> kinds;
  for (const auto& r : cohort.runs)
    if (std::find(kinds.begin(), kinds.end(), r.controller) == kinds.end()) kinds.push_back(r.controller);
  std::vector<SummaryRow> rows;
  for (auto k : kinds) {
    SummaryRow row{cohort.scenario, k, {}, 0, 0, 0};
    std::vector<double> values;
    for (const auto& r : cohort.runs) {
      if (r.controller != k) continue;
      if (r.status == RunStatus::Failed) ++row.failed;
      if (r.status != RunStatus::Ok) continue;
      values.push_back(r.sae);
      row.congestion_runs += r.safety.congestion;
      row.suction_runs += r.safety.suction;
    }
    row.stats = box_stats(std::move(values));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::pair<std::vector<double>, std::vector<double>> paired_sae(const CohortResult& cohort,
                                                               ControllerKind a, ControllerKind b) {
  std::vector<double> va, vb;
  for (const auto& ra : cohort.runs) {
    if (ra.controller != a || ra.status != RunStatus::Ok) continue;
    for (const auto& rb : cohort.runs) {
      if (rb.controller == b && rb.patient_index == ra.patient_index && rb.status == RunStatus::Ok) {
        va.push_back(ra.sae);
        vb.push_back(rb.sae);
        break;
      }
    }
  }
  return {va, vb};
}

}  // namespace lvad
