// workbench: simulation, detector evaluation, sensitivity, cohort comparison and reports.

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lvad/config.hpp"
#include "lvad/evaluation.hpp"
#include "lvad/experiment.hpp"
#include "lvad/io.hpp"
#include "lvad/parallel.hpp"
#include "lvad/scenario.hpp"

namespace fs = std::filesystem;
using namespace lvad;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kSimulation = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  unsigned threads = 0;
};

RunConfiguration load(const Global& g) {
  RunConfiguration c = g.config_path.empty() ? RunConfiguration{} : load_config(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

unsigned threads_of(const Global& g) { return g.threads > 0 ? g.threads : default_threads(); }

ScenarioKind scenario_of(const std::string& name) {
  const auto k = parse_scenario(name);
  if (!k) throw UsageError("unknown scenario '" + name + "'");
  return *k;
}

/// "" -> the config's scenario, "all" -> every scenario.
std::vector<ScenarioKind> scenarios_from(const std::string& name, ScenarioKind fallback) {
  if (name.empty()) return {fallback};
  if (name == "all") return {std::begin(kAllScenarios), std::end(kAllScenarios)};
  return {scenario_of(name)};
}

fs::path prepare_dir(const std::string& dir, const RunConfiguration& c) {
  fs::path p(dir);
  fs::create_directories(p);
  save_config(c, p / "config.txt");
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::string fixed(double v, int prec) {
  if (std::isnan(v)) return "NaN";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s.empty() ? "none" : s;
}

// --- simulate ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string scenario, controller, out;
  std::optional<double> speed, noise;
  std::optional<std::uint64_t> seed, patient;
};

int cmd_simulate(const Global& g, const SimulateOpts& o) {
  RunConfiguration c = load(g);
  if (!o.scenario.empty()) c.scenario = scenario_of(o.scenario);
  if (!o.controller.empty()) {
    const auto k = parse_controller(o.controller);
    if (!k) throw UsageError("unknown controller '" + o.controller + "'");
    c.controller = *k;
  }
  if (o.speed) c.protocol.warmup_speed = *o.speed;
  if (o.noise) c.protocol.noise_variance = *o.noise;
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();

  ProtocolInputs in = c.inputs();
  std::uint64_t seed = c.seed;
  if (o.patient) {
    seed = patient_seed(c.seed, c.scenario, *o.patient);
    in.cvs = generate_patient(seed, c.scenario).apply(c.cvs);
  }
  const RunResult r = finish_protocol(run_warmup(in, c.scenario, o.patient.value_or(0), seed, true), c.controller,
                                      in, false);

  const fs::path dir = prepare_dir(c.output_dir, c);
  {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, r.trace);
  }
  {
    auto os = open_out(dir / "events.csv");
    write_events_csv(os, r.events);
  }
  {
    auto os = open_out(dir / "runs.csv");
    write_runs_header(os);
    write_runs_rows(os, std::span<const RunResult>(&r, 1));
  }
  std::cerr << "simulate: " << scenario_name(c.scenario) << " / " << controller_name(c.controller) << ": "
            << status_name(r.status) << (r.message.empty() ? "" : " (" + r.message + ")") << ", "
            << r.trace.size() << " samples -> " << dir.string() << "\n";
  return r.status == RunStatus::Failed ? kSimulation : kOk;
}

// --- detect-eval ------------------------------------------------------------------------

struct DetectEvalOpts {
  std::string scenario = "all", variances = "0,1,2,3,4", out, loop = "closed";
  std::optional<std::uint64_t> patients, seed;
};

int cmd_detect_eval(const Global& g, const DetectEvalOpts& o) {
  RunConfiguration c = load(g);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  const auto vars = parse_list(o.variances);
  if (vars.empty()) throw UsageError("--variances needs at least one value");
  DetectEvalOptions opt;
  opt.patients = o.patients.value_or(c.patients);
  opt.seed = c.seed;
  opt.threads = threads_of(g);
  opt.closed_loop = o.loop == "closed";
  opt.controller = c.controller == ControllerKind::None ? ControllerKind::Mfac : c.controller;

  std::vector<DetectEvalRow> rows;
  for (ScenarioKind k : scenarios_from(o.scenario, c.scenario)) {
    std::cerr << "detect-eval: " << scenario_name(k) << "\n";
    const auto part = detect_eval(c.inputs(), k, vars, opt);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const fs::path dir = prepare_dir(c.output_dir, c);
  auto os = open_out(dir / "detect_eval.csv");
  write_detect_eval_csv(os, rows);
  for (const auto& r : rows)
    std::cout << std::left << std::setw(9) << scenario_name(r.scenario) << " var " << r.variance << "  accuracy "
              << fixed(r.accuracy_mean, 3) << " ± " << fixed(r.accuracy_std, 3) << " mmHg  latency "
              << fixed(r.latency_mean, 1) << " ± " << fixed(r.latency_std, 1) << " ms  SNR "
              << fixed(r.snr_db, 2) << " dB  failed " << r.failed << "/" << (r.runs + r.failed) << "\n";
  return kOk;
}

// --- sensitivity ------------------------------------------------------------------------

struct SensitivityOpts {
  std::string scenario = "all", out;
  double perturbation = 0.2, threshold = 0.45;
};

int cmd_sensitivity(const Global& g, const SensitivityOpts& o) {
  RunConfiguration c = load(g);
  if (!o.out.empty()) c.output_dir = o.out;
  const fs::path dir = prepare_dir(c.output_dir, c);
  std::ostringstream md;
  md << "# Parameter sensitivity\n\nObjective: PID SAE over the full protocol on the nominal patient. "
     << "Perturbation ±" << o.perturbation * 100 << " %, significance threshold |S+| + |S-| >= " << o.threshold
     << ".\n";
  for (ScenarioKind k : scenarios_from(o.scenario, c.scenario)) {
    std::cerr << "sensitivity: " << scenario_name(k) << "\n";
    const auto rep =
        run_sensitivity(k, c.cvs, sae_objective(c.inputs(), k), threads_of(g), o.perturbation, o.threshold);
    auto os = open_out(dir / ("sensitivity_" + std::string(scenario_name(k)) + ".csv"));
    write_sensitivity_csv(os, rep);

    const auto found = rep.significant();
    std::vector<std::string> shipped, agree, only_found, only_shipped, failed;
    for (auto s : default_significant_set(k)) shipped.emplace_back(s);
    const std::set<std::string> fset(found.begin(), found.end()), sset(shipped.begin(), shipped.end());
    for (const auto& s : found) (sset.count(s) ? agree : only_found).push_back(s);
    for (const auto& s : shipped)
      if (!fset.count(s)) only_shipped.push_back(s);
    for (const auto& r : rep.rows)
      if (!r.error.empty()) failed.push_back(r.parameter);

    md << "\n## " << scenario_label(k) << "\n\n"
       << "- baseline SAE: " << fixed(rep.F0, 1) << "\n"
       << "- significant here: " << join(found) << "\n"
       << "- shipped default set: " << join(shipped) << "\n"
       << "- in both: " << join(agree) << "\n"
       << "- only here: " << join(only_found) << "\n"
       << "- only in the shipped set: " << join(only_shipped) << "\n"
       << "- Vtotal significant: " << (fset.count("Vtotal") ? "yes" : "no") << "\n"
       << "- failed perturbations: " << join(failed) << "\n\n"
       << "| parameter | S+ | S- |\n|---|---|---|\n";
    const auto ranked = rep.ranked();
    for (std::size_t i = 0; i < std::min<std::size_t>(10, ranked.size()); ++i)
      md << "| " << ranked[i].parameter << " | " << fixed(ranked[i].S_plus, 3) << " | "
         << fixed(ranked[i].S_minus, 3) << " |\n";
    std::cout << scenario_name(k) << ": " << join(found) << "\n";
  }
  write_text_file(dir / "sensitivity.md", md.str());
  return kOk;
}

// --- compare ----------------------------------------------------------------------------

struct CompareOpts {
  std::string scenario, out;
  std::optional<std::uint64_t> patients, seed;
  bool traces = false;
};

int cmd_compare(const Global& g, const CompareOpts& o) {
  RunConfiguration c = load(g);
  if (o.patients) c.patients = *o.patients;
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (c.patients == 0) throw UsageError("--patients must be at least 1");
  const auto kinds = scenarios_from(o.scenario, c.scenario);
  if (kinds.size() == 1) c.scenario = kinds.front();
  const fs::path dir = prepare_dir(c.output_dir, c);

  auto runs = open_out(dir / "runs.csv");
  auto summary = open_out(dir / "summary.csv");
  auto box = open_out(dir / "boxplot.csv");
  write_runs_header(runs);
  write_summary_header(summary);
  write_boxplot_header(box);

  bool failures = false;
  for (ScenarioKind k : kinds) {
    std::cerr << "compare: " << scenario_name(k) << ", " << c.patients << " patients\n";
    CohortConfig cc;
    cc.scenario = k;
    cc.patients = c.patients;
    cc.seed = c.seed;
    cc.threads = threads_of(g);
    cc.keep_traces = o.traces;
    ScenarioSummary s = summarize_scenario(run_cohort(c.inputs(), cc));
    write_runs_rows(runs, s.cohort.runs);
    write_summary_rows(summary, s);
    write_boxplot_rows(box, s);

    PlotPanel panel{std::string(scenario_label(k)), {}};
    for (const auto& row : s.rows) {
      panel.boxes.push_back({std::string(controller_name(row.controller)), row.stats});
      std::cout << std::left << std::setw(9) << scenario_name(k) << std::setw(5) << controller_name(row.controller)
                << " n " << row.stats.n << "  SAE " << fixed(row.stats.mean, 1) << " ± " << fixed(row.stats.std, 1)
                << "  congestion " << row.congestion_runs << "  suction " << row.suction_runs << "\n";
      failures = failures || row.failed > 0;
    }
    if (s.wilcoxon)
      std::cout << std::left << std::setw(9) << scenario_name(k) << "Wilcoxon p " << s.wilcoxon->p << " (n "
                << s.wilcoxon->n << ")\n";
    else
      std::cout << std::left << std::setw(9) << scenario_name(k) << "Wilcoxon: " << s.wilcoxon_note << "\n";
    write_text_file(dir / ("boxplot_" + std::string(scenario_name(k)) + ".svg"),
                    render_boxplot_svg(std::span<const PlotPanel>(&panel, 1)));

    if (o.traces) {
      fs::create_directories(dir / "traces");
      for (const auto& r : s.cohort.runs) {
        if (r.trace.empty()) continue;
        auto os = open_out(dir / "traces" /
                           (std::string(scenario_name(k)) + "_" + std::to_string(r.patient_index) + "_" +
                            std::string(controller_name(r.controller)) + ".csv"));
        write_trace_csv(os, r.trace);
      }
    }
  }
  if (failures) std::cerr << "compare: some runs failed; see runs.csv\n";
  return kOk;
}

// --- report -----------------------------------------------------------------------------

struct ReportOpts {
  std::string in, out;
};

int cmd_report(const ReportOpts& o) {
  const fs::path in(o.in);
  const fs::path out = o.out.empty() ? in : fs::path(o.out);
  if (!fs::exists(in / "boxplot.csv") || !fs::exists(in / "summary.csv"))
    throw UsageError(in.string() + " has no compare output (boxplot.csv, summary.csv)");
  const auto boxes = read_boxplot_csv(in / "boxplot.csv");
  const auto summary = read_csv(in / "summary.csv");
  fs::create_directories(out);

  auto cell = [&](ScenarioKind k, ControllerKind c) -> BoxStats {
    const auto it = boxes.find({std::string(scenario_name(k)), std::string(controller_name(c))});
    return it == boxes.end() ? BoxStats{} : it->second;
  };
  auto panel = [&](std::string title, std::initializer_list<ScenarioKind> kinds) {
    PlotPanel p{std::move(title), {}};
    for (ScenarioKind k : kinds)
      for (ControllerKind c : {ControllerKind::Pid, ControllerKind::Mfac})
        p.boxes.push_back({std::string(scenario_name(k)) + " " + std::string(controller_name(c)), cell(k, c)});
    return p;
  };
  const std::vector<PlotPanel> panels{
      panel("Systemic resistance", {ScenarioKind::RsaUp, ScenarioKind::RsaDown}),
      panel("Pulmonary resistance", {ScenarioKind::RpaUp, ScenarioKind::RpaDown}),
      panel("Exercise and posture", {ScenarioKind::RestToExercise, ScenarioKind::PosturalChange}),
  };
  write_text_file(out / "fig_sae_boxplot.svg", render_boxplot_svg(panels));

  std::ostringstream md;
  md << "# Controller comparison\n\nSAE in mmHg (sum over 200 Hz samples after activation). "
     << "p is the paired Wilcoxon signed-rank test of MFAC against PID.\n\n"
     << "| scenario | controller | n | excluded | mean ± std | median | congestion runs | suction runs | p |\n"
     << "|---|---|---|---|---|---|---|---|---|\n";
  if (summary.empty()) throw UsageError("summary.csv is empty");
  const auto& header = summary.front();
  auto col = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw UsageError("summary.csv lacks column " + std::string(name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cs = col("scenario"), cc = col("controller"), cn = col("n"), ce = col("excluded"),
                    cm = col("mean"), csd = col("std"), cmed = col("median"), ccg = col("congestion_runs"),
                    csu = col("suction_runs"), cp = col("wilcoxon_p");
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& r = summary[i];
    if (r.size() <= cp) {
      md << "| " << r[0] << " | " << (r.size() > 1 ? r[1] : "") << " | absent | | | | | | |\n";
      continue;
    }
    auto num = [](const std::string& s) { return s.empty() ? NAN : std::stod(s); };
    md << "| " << r[cs] << " | " << r[cc] << " | " << r[cn] << " | " << r[ce] << " | " << fixed(num(r[cm]), 1)
       << " ± " << fixed(num(r[csd]), 1) << " | " << fixed(num(r[cmed]), 1) << " | " << r[ccg] << " | " << r[csu]
       << " | " << r[cp] << " |\n";
  }
  md << "\n![SAE box plots](fig_sae_boxplot.svg)\n";
  write_text_file(out / "report.md", md.str());
  std::cerr << "report: " << (out / "report.md").string() << ", " << (out / "fig_sae_boxplot.svg").string()
            << "\n";
  return kOk;
}

// --- calibrations -----------------------------------------------------------------------

struct CalibrateOpts {
  std::string grid_a, grid_b, out;
  double variance = 4.0;
};

void maybe_write(const std::string& out, const std::string& text) {
  if (out.empty()) return;
  write_text_file(out, text);
}

int cmd_calibrate_pump(const Global& g, const CalibrateOpts& o) {
  const RunConfiguration c = load(g);
  const auto a2 = parse_list(o.grid_a.empty() ? "1e-5,1.5e-5,2e-5,2.5e-5,3e-5" : o.grid_a);
  const auto a1 = parse_list(o.grid_b.empty() ? "0.05,0.1,0.2,0.3,0.4" : o.grid_b);
  if (a2.empty() || a1.empty()) throw UsageError("empty calibration grid");
  const auto cal = calibrate_pump(c.cvs, c.pump, a2, a1, c.protocol.warmup_speed, 100.0, 66.0, 100.0, 9.0,
                                  threads_of(g));
  std::ostringstream csv;
  csv << "a2,a1,mean_flow,lvedp,in_band\n";
  for (const auto& p : cal.grid)
    csv << format_double(p.a2) << ',' << format_double(p.a1) << ',' << format_double(p.mean_flow) << ','
        << format_double(p.lvedp) << ',' << (p.in_band ? 1 : 0) << '\n';
  std::cout << csv.str();
  maybe_write(o.out, csv.str());
  if (!cal.best) {
    std::cerr << "calibrate-pump: no grid point lands in the flow band\n";
    return kSimulation;
  }
  std::cout << "best: pump.a2 = " << format_double(cal.best->a2) << ", pump.a1 = " << format_double(cal.best->a1)
            << " (flow " << fixed(cal.best->mean_flow, 1) << " mL/s, LVEDP " << fixed(cal.best->lvedp, 2)
            << " mmHg)\n";
  return kOk;
}

int cmd_calibrate_detector(const Global& g, const CalibrateOpts& o) {
  const RunConfiguration c = load(g);
  const auto alpha = parse_list(o.grid_a.empty() ? "1,1.25,1.5,2" : o.grid_a);
  const auto beta = parse_list(o.grid_b.empty() ? "0.1,0.125,0.15,0.175,0.2,0.25,0.3,0.4" : o.grid_b);
  if (alpha.empty() || beta.empty()) throw UsageError("empty calibration grid");
  DetectorCalibrationOptions opt;
  opt.variance = o.variance;
  opt.threads = threads_of(g);
  const auto cal = calibrate_detector(c.inputs(), alpha, beta, opt);
  std::ostringstream csv;
  csv << "alpha,beta,latency_ms,accuracy,accuracy_max,dropped,spurious,clean,cost\n";
  for (const auto& p : cal.grid)
    csv << format_double(p.alpha) << ',' << format_double(p.beta) << ',' << format_double(p.metrics.latency_mae_ms)
        << ',' << format_double(p.metrics.accuracy_mean) << ',' << format_double(p.metrics.accuracy_max) << ','
        << p.metrics.dropped << ',' << p.metrics.spurious << ',' << (p.clean ? 1 : 0) << ','
        << format_double(p.cost) << '\n';
  std::cout << csv.str();
  maybe_write(o.out, csv.str());
  if (!cal.best) {
    std::cerr << "calibrate-detector: no configuration detects every beat\n";
    return kSimulation;
  }
  std::cout << "best: detector.alpha = " << format_double(cal.best->alpha)
            << ", detector.beta = " << format_double(cal.best->beta) << " (latency "
            << fixed(cal.best->metrics.latency_mae_ms, 1) << " ms, accuracy "
            << fixed(cal.best->metrics.accuracy_mean, 3) << " mmHg)\n";
  return kOk;
}

int cmd_calibrate_mfac(const Global& g, const CalibrateOpts& o) {
  const RunConfiguration c = load(g);
  const auto scales = parse_list(o.grid_a.empty() ? "1,5,10,12.5,15,17.5,20,25" : o.grid_a);
  if (scales.empty()) throw UsageError("empty calibration grid");
  const auto cal = calibrate_mfac(c.inputs(), scales, threads_of(g));
  std::ostringstream csv;
  csv << "input_scale";
  for (auto k : kAllScenarios) csv << ',' << scenario_name(k);
  csv << ",total\n";
  for (const auto& p : cal.grid) {
    csv << format_double(p.input_scale);
    for (double v : p.sae) csv << ',' << format_double(v);
    csv << ',' << format_double(p.total) << '\n';
  }
  std::cout << csv.str();
  maybe_write(o.out, csv.str());
  std::cout << "best: controller.mfac.input_scale = " << format_double(cal.best->input_scale) << "\n";
  return kOk;
}

// --- tune-pid ---------------------------------------------------------------------------

struct TunePidOpts {
  std::string scenario = "all";
  int max_iter = 5;
};

/// BFGS on log-gains with central finite differences; objective is nominal SAE summed over scenarios.
int cmd_tune_pid(const Global& g, const TunePidOpts& o) {
  const RunConfiguration c = load(g);
  const ProtocolInputs base = c.inputs();
  const auto kinds = scenarios_from(o.scenario, c.scenario);
  const unsigned threads = threads_of(g);
  std::vector<std::optional<WarmStart>> warm(kinds.size());
  parallel_for(kinds.size(), threads, [&](std::size_t i) { warm[i].emplace(run_warmup(base, kinds[i], 0, 0)); });

  auto objective = [&](const Eigen::Vector3d& x) {
    ProtocolInputs in = base;
    in.pid.kp = std::exp(x(0));
    in.pid.ki = std::exp(x(1));
    in.pid.kd = std::exp(x(2));
    std::vector<double> s(kinds.size());
    parallel_for(kinds.size(), threads, [&](std::size_t i) {
      const RunResult r = finish_protocol(*warm[i], ControllerKind::Pid, in);
      s[i] = r.status == RunStatus::Ok ? r.sae : INFINITY;
    });
    double total = 0.0;
    for (double v : s) total += v;
    return total;
  };
  auto gradient = [&](const Eigen::Vector3d& x) {
    constexpr double h = 0.05;
    Eigen::Vector3d gr;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(i) = h;
      gr(i) = (objective(x + e) - objective(x - e)) / (2 * h);
    }
    return gr;
  };

  Eigen::Vector3d x(std::log(c.pid.kp), std::log(c.pid.ki), std::log(c.pid.kd));
  double f = objective(x);
  Eigen::Vector3d gr = gradient(x);
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity() * (0.1 / std::max(1.0, gr.norm()));
  std::cout << "iter 0: SAE " << f << "\n";
  for (int it = 1; it <= o.max_iter && std::isfinite(f); ++it) {
    const Eigen::Vector3d p = -H * gr;
    double step = 1.0, f_new = INFINITY;
    Eigen::Vector3d x_new;
    for (int ls = 0; ls < 10; ++ls, step *= 0.5) {
      x_new = x + step * p;
      f_new = objective(x_new);
      if (f_new <= f + 1e-4 * step * gr.dot(p)) break;
    }
    if (!(f_new < f)) break;
    const Eigen::Vector3d g_new = gradient(x_new);
    const Eigen::Vector3d s = x_new - x, y = g_new - gr;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
      H = (I - s * y.transpose() / sy) * H * (I - y * s.transpose() / sy) + s * s.transpose() / sy;
    }
    x = x_new;
    f = f_new;
    gr = g_new;
    std::cout << "iter " << it << ": SAE " << f << "  kp " << std::exp(x(0)) << "  ki " << std::exp(x(1)) << "  kd "
              << std::exp(x(2)) << "\n";
  }
  std::cout << "controller.pid.kp = " << format_double(std::exp(x(0))) << "\ncontroller.pid.ki = "
            << format_double(std::exp(x(1))) << "\ncontroller.pid.kd = " << format_double(std::exp(x(2))) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation workbench for LVAD preload control"};
  app.require_subcommand(1);
  Global g;
  app.add_option("-c,--config", g.config_path, "Configuration file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override one configuration key, key=value (repeatable)");
  app.add_option("-j,--threads", g.threads, "Worker threads (default: WORKBENCH_THREADS or all cores)");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Run one protocol and write the 200 Hz trace");
  c_sim->add_option("--scenario", sim.scenario, "rpa-up, rpa-down, rsa-up, rsa-down, exercise, posture");
  c_sim->add_option("--controller", sim.controller, "none, pid or mfac");
  c_sim->add_option("--speed", sim.speed, "Constant-speed phase speed, rpm");
  c_sim->add_option("--noise", sim.noise, "Measurement noise variance, mmHg^2");
  c_sim->add_option("--seed", sim.seed, "Seed");
  c_sim->add_option("--patient", sim.patient, "Cohort patient index (default: nominal patient)");
  c_sim->add_option("--out", sim.out, "Output directory");

  DetectEvalOpts de;
  auto* c_de = app.add_subcommand("detect-eval", "Detector accuracy and latency across noise levels");
  c_de->add_option("--scenario", de.scenario, "Scenario or 'all'")->capture_default_str();
  c_de->add_option("--variances", de.variances, "Comma-separated noise variances, mmHg^2")->capture_default_str();
  c_de->add_option("--patients", de.patients, "Patients per scenario (0: nominal only)");
  c_de->add_option("--seed", de.seed, "Cohort seed");
  c_de->add_option("--out", de.out, "Output directory");
  c_de->add_option("--loop", de.loop, "closed: detector inside the configured controller loop; open: constant speed")
      ->check(CLI::IsMember({"closed", "open"}))
      ->capture_default_str();

  SensitivityOpts so;
  auto* c_sa = app.add_subcommand("sensitivity", "One-at-a-time parameter sensitivity of the PID SAE");
  c_sa->add_option("--scenario", so.scenario, "Scenario or 'all'")->capture_default_str();
  c_sa->add_option("--perturbation", so.perturbation, "Relative perturbation")->capture_default_str();
  c_sa->add_option("--threshold", so.threshold, "Significance threshold on |S+| + |S-|")->capture_default_str();
  c_sa->add_option("--out", so.out, "Output directory");

  CompareOpts co;
  auto* c_cmp = app.add_subcommand("compare", "PID versus MFAC over a patient cohort");
  c_cmp->add_option("--scenario", co.scenario, "Scenario or 'all' (default: config)");
  c_cmp->add_option("--patients", co.patients, "Eligible patients per scenario")->check(CLI::PositiveNumber);
  c_cmp->add_option("--seed", co.seed, "Cohort seed");
  c_cmp->add_option("--out", co.out, "Output directory");
  c_cmp->add_flag("--traces", co.traces, "Also write one trace CSV per run");

  ReportOpts ro;
  auto* c_rep = app.add_subcommand("report", "Render compare output into box plots and a markdown summary");
  c_rep->add_option("--in", ro.in, "Directory written by compare")->required();
  c_rep->add_option("--out", ro.out, "Output directory (default: --in)");

  CalibrateOpts cp;
  auto* c_cp = app.add_subcommand("calibrate-pump", "Grid search of the pump head coefficients");
  c_cp->add_option("--a2", cp.grid_a, "Comma-separated a2 grid");
  c_cp->add_option("--a1", cp.grid_b, "Comma-separated a1 grid");
  c_cp->add_option("--out", cp.out, "CSV file for the grid");

  CalibrateOpts cd;
  auto* c_cd = app.add_subcommand("calibrate-detector", "Grid search of the detector alpha and beta");
  c_cd->add_option("--alpha", cd.grid_a, "Comma-separated alpha grid");
  c_cd->add_option("--beta", cd.grid_b, "Comma-separated beta grid");
  c_cd->add_option("--variance", cd.variance, "Noise variance, mmHg^2")->capture_default_str();
  c_cd->add_option("--out", cd.out, "CSV file for the grid");

  CalibrateOpts cm;
  auto* c_cm = app.add_subcommand("calibrate-mfac", "Choose the MFAC input scale on the nominal patient");
  c_cm->add_option("--scales", cm.grid_a, "Comma-separated input-scale grid");
  c_cm->add_option("--out", cm.out, "CSV file for the grid");

  TunePidOpts tp;
  auto* c_tp = app.add_subcommand("tune-pid", "Quasi-Newton retuning of the PID gains on the nominal patient");
  c_tp->add_option("--scenario", tp.scenario, "Scenario or 'all'")->capture_default_str();
  c_tp->add_option("--max-iter", tp.max_iter, "BFGS iterations")->capture_default_str();

  std::string cfg_out;
  auto* c_cfg = app.add_subcommand("config", "Print the effective configuration");
  c_cfg->add_option("--out", cfg_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_sim) return cmd_simulate(g, sim);
    if (*c_de) return cmd_detect_eval(g, de);
    if (*c_sa) return cmd_sensitivity(g, so);
    if (*c_cmp) return cmd_compare(g, co);
    if (*c_rep) return cmd_report(ro);
    if (*c_cp) return cmd_calibrate_pump(g, cp);
    if (*c_cd) return cmd_calibrate_detector(g, cd);
    if (*c_cm) return cmd_calibrate_mfac(g, cm);
    if (*c_tp) return cmd_tune_pid(g, tp);
    if (*c_cfg) {
      const RunConfiguration c = load(g);
      if (cfg_out.empty())
        std::cout << to_config_text(c);
      else
        save_config(c, cfg_out);
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kSimulation;
  }
  return kUsage;
}
