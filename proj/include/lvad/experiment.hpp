#pragma once

/**
 * @file experiment.hpp
 * @brief Protocol runs, tracking and safety metrics, paired statistics, cohorts.
 */

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvad/controllers.hpp"
#include "lvad/cvs_model.hpp"
#include "lvad/lvedp_detector.hpp"
#include "lvad/scenario.hpp"

namespace lvad {

struct ProtocolConfig {
  double warmup_end = 100.0;     ///< s, constant-speed phase ends
  double controller_on = 100.0;  ///< s
  double setpoint_offset = 0.2;  ///< mmHg above the LVEDP measured at activation
  double scenario_onset = 250.0;
  double run_end = 400.0;
  double lvedp_low = 3.0;  ///< normal LVEDP band, mmHg
  double lvedp_high = 15.0;
  double warmup_speed = 2400.0;  ///< rpm
  double noise_variance = 0.0;   ///< mmHg², added to the LVP fed to the detector
  double dt = 1.0e-4;            ///< RK4 step, s
  double eval_start = 5.0;       ///< detector metrics ignore beats before this time, s

  void validate() const;
  bool operator==(const ProtocolConfig&) const = default;
};

enum class ControllerKind { None, Pid, Mfac };
std::string_view controller_name(ControllerKind kind);
std::optional<ControllerKind> parse_controller(std::string_view name);

enum class RunStatus { Ok, Excluded, Failed };
std::string_view status_name(RunStatus s);

/// One 200 Hz row of a protocol run.
struct TraceRow {
  double t, Plv, Pla, Pao, Vlv, Qpump, speed, activation, lvedp_true, lvedp_measured;
};

struct SafetyFlags {
  bool congestion = false;
  double congestion_s = 0.0;
  bool suction = false;
  double suction_s = 0.0;
};

struct RunResult {
  ScenarioKind scenario = ScenarioKind::RpaUp;
  ControllerKind controller = ControllerKind::None;
  std::uint64_t patient_index = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Ok;
  std::string message;
  double setpoint = NAN;
  double sae = NAN;
  SafetyFlags safety;
  double min_lvedp = NAN, max_lvedp = NAN;  ///< measured, after activation
  double min_plv = NAN;                     ///< instantaneous LVP over the whole run
  double speed_min = NAN, speed_max = NAN;  ///< commanded, rpm
  double max_volume_error = 0.0;            ///< mL
  DetectionMetrics detection{NAN, NAN, NAN, NAN, NAN, 0, 0, 0};
  std::vector<TraceRow> trace;      ///< filled only on request
  std::vector<LvedpEvent> events;  ///< detector output, kept alongside the trace
  std::vector<TrueLvedp> truth;    ///< ground-truth annotations, kept alongside the trace
};

/// Σ|d_i - m_i|; throws std::invalid_argument on a length mismatch.
double sae(std::span<const double> desired, std::span<const double> measured);

/// Congestion: any sample above `high`; suction: any sample below `low`.
SafetyFlags safety_flags(std::span<const double> lvedp, double sample_period, double low = 3.0,
                         double high = 15.0);

struct ProtocolInputs {
  CvsParameters cvs;
  PumpParameters pump;
  DetectorConfig detector;
  MfacConfig mfac;
  PidConfig pid;
  ProtocolConfig protocol;
};

/**
 * @brief Simulation paused at controller activation.
 *
 * Plain value: copying it forks the run so that several controllers can
 * continue from an identical constant-speed phase.
 */
struct WarmStart {
  CvsSimulator sim;
  LvedpDetector detector;
  std::mt19937_64 noise_rng;
  ScenarioKind scenario;
  std::uint64_t patient_index = 0;
  std::uint64_t seed = 0;
  double held_lvedp = NAN;
  double min_plv = INFINITY;
  double max_volume_error = 0.0;
  std::vector<LvedpEvent> events;
  std::vector<TrueLvedp> truth;
  std::vector<TraceRow> trace;
  bool keep_trace = false;
  std::optional<std::string> failure;  ///< set when the warmup itself failed

  bool eligible(const ProtocolConfig& p) const {
    return !failure && held_lvedp >= p.lvedp_low && held_lvedp <= p.lvedp_high;
  }
};

WarmStart run_warmup(const ProtocolInputs& in, ScenarioKind scenario, std::uint64_t patient_index,
                     std::uint64_t seed, bool keep_trace = false);

/**
 * @brief Continues a warm start under one controller to run_end.
 *
 * With `enforce_eligibility` false an out-of-band LVEDP at activation still
 * runs to the end (used by sensitivity sweeps and plain simulations).
 */
RunResult finish_protocol(WarmStart warm, ControllerKind controller, const ProtocolInputs& in,
                          bool enforce_eligibility = true);

/// Full protocol for one (patient parameters, scenario, controller).
RunResult run_protocol(const ProtocolInputs& in, ScenarioKind scenario, ControllerKind controller,
                       std::uint64_t seed = 0, bool keep_trace = false, bool enforce_eligibility = true);

/// SAE of the nominal protocol under `controller` as a sensitivity objective.
/// Eligibility is not enforced; a failed run throws.
Objective sae_objective(const ProtocolInputs& base, ScenarioKind kind,
                        ControllerKind controller = ControllerKind::Pid);

struct WilcoxonResult {
  double p = 1.0;
  std::size_t n = 0;  ///< pairs after dropping zero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  bool exact = false;
  bool degenerate = false;  ///< all differences zero
};

/**
 * @brief Two-sided paired Wilcoxon signed-rank test on a - b.
 *
 * Zero differences are dropped and ties get midranks. Exact null
 * distribution for n <= 12, otherwise normal approximation with tie and
 * continuity corrections. Throws std::invalid_argument on a length mismatch
 * or when fewer than 5 nonzero differences remain.
 */
WilcoxonResult wilcoxon_paired(std::span<const double> a, std::span<const double> b);

struct BoxStats {
  std::size_t n = 0;
  double mean = NAN, std = NAN, median = NAN, q1 = NAN, q3 = NAN;
  double whisker_low = NAN, whisker_high = NAN;
  std::vector<double> outliers;
};

/// Quantile with the (i - 0.5)/n plotting positions, linear interpolation, clamped ends.
double quantile(std::span<const double> sorted, double p);

/// Box-plot statistics with the 1.5·IQR outlier rule; std uses n - 1.
BoxStats box_stats(std::vector<double> values);

struct CohortConfig {
  ScenarioKind scenario = ScenarioKind::RpaUp;
  std::size_t patients = 20;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool keep_traces = false;
  std::vector<ControllerKind> controllers{ControllerKind::Pid, ControllerKind::Mfac};
  std::size_t max_attempts_factor = 5;  ///< give up after patients * factor candidates
};

struct CohortResult {
  ScenarioKind scenario = ScenarioKind::RpaUp;
  /// Sorted by patient index then controller order; excluded candidates included.
  std::vector<RunResult> runs;
  std::size_t excluded = 0;
};

/// Generates patients, replaces setpoint-ineligible ones, runs every controller on each.
CohortResult run_cohort(const ProtocolInputs& base, const CohortConfig& cfg);

struct SummaryRow {
  ScenarioKind scenario;
  ControllerKind controller;
  BoxStats stats;
  std::size_t failed = 0;
  std::size_t congestion_runs = 0;
  std::size_t suction_runs = 0;
};

/// Per-controller statistics over successful runs.
std::vector<SummaryRow> summarize(const CohortResult& cohort);

/// Paired SAE vectors (PID, MFAC) over patients where both succeeded.
std::pair<std::vector<double>, std::vector<double>> paired_sae(const CohortResult& cohort,
                                                               ControllerKind a, ControllerKind b);

}  // namespace lvad
