#pragma once

/**
 * @file evaluation.hpp
 * @brief Detector evaluation over cohorts and one-off calibrations.
 */

#include <cstdint>
#include <span>
#include <vector>

#include "lvad/experiment.hpp"

namespace lvad {

/// Open-loop recording of one patient at constant speed.
struct Recording {
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> plv;
  std::vector<TrueLvedp> truth;
};

Recording record_open_loop(const ProtocolInputs& in, ScenarioKind scenario, std::uint64_t seed);

/// Adds seeded white Gaussian noise of the given variance (mmHg²).
std::vector<double> add_noise(std::span<const double> x, double variance, std::uint64_t seed);

struct DetectEvalRow {
  ScenarioKind scenario = ScenarioKind::RpaUp;
  double variance = 0.0;
  std::size_t runs = 0;    ///< recordings evaluated
  std::size_t failed = 0;  ///< recordings with a beat-count mismatch
  std::size_t beats = 0;   ///< matched beats pooled over runs
  double accuracy_mean = NAN, accuracy_std = NAN;  ///< mmHg, pooled over beats
  double latency_mean = NAN, latency_std = NAN;    ///< ms, pooled over beats
  double snr_db = NAN;  ///< mean over runs of 10·log10(mean(LVP²)/variance); NaN at variance 0
};

struct DetectEvalOptions {
  std::size_t patients = 20;  ///< 0 = nominal patient only
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Closed loop: the full protocol under `controller` with the noisy LVP feeding
  /// detector and controller. Open loop: one constant-speed recording per patient.
  bool closed_loop = true;
  ControllerKind controller = ControllerKind::Mfac;
};

/**
 * @brief Table of detector accuracy and latency for one scenario across noise variances.
 *
 * Closed-loop runs ignore the setpoint eligibility band so that every patient
 * contributes at every variance.
 */
std::vector<DetectEvalRow> detect_eval(const ProtocolInputs& in, ScenarioKind scenario,
                                       std::span<const double> variances, const DetectEvalOptions& opt);

// --- calibrations -------------------------------------------------------------------

struct PumpCalibrationPoint {
  double a2 = 0.0, a1 = 0.0;
  double mean_flow = NAN;  ///< mL/s over the last 10 s
  double lvedp = NAN;      ///< true LVEDP of the last beat, mmHg
  bool in_band = false;
};

struct PumpCalibration {
  std::vector<PumpCalibrationPoint> grid;
  std::optional<PumpCalibrationPoint> best;
};

/**
 * @brief Grid search of the head coefficients on the nominal patient.
 *
 * Keeps points whose mean pump flow lies in [flow_low, flow_high] mL/s at
 * `speed`, and picks the one whose LVEDP is closest to `lvedp_target`.
 */
PumpCalibration calibrate_pump(const CvsParameters& cvs, const PumpParameters& base,
                               std::span<const double> a2_grid, std::span<const double> a1_grid,
                               double speed = 2400.0, double duration = 100.0, double flow_low = 66.0,
                               double flow_high = 100.0, double lvedp_target = 9.0, unsigned threads = 1);

struct DetectorCalibrationPoint {
  double alpha = 0.0, beta = 0.0;
  DetectionMetrics metrics{NAN, NAN, NAN, NAN, NAN, 0, 0, 0};  ///< pooled over the calibration set
  bool clean = false;  ///< every beat matched, nothing spurious, no gross value error
  double cost = INFINITY;
};

struct DetectorCalibration {
  std::vector<DetectorCalibrationPoint> grid;
  std::optional<DetectorCalibrationPoint> best;
  std::size_t recordings = 0;
};

struct DetectorCalibrationOptions {
  double variance = 4.0;                 ///< mmHg²
  std::size_t patients_per_scenario = 5;  ///< on top of the nominal patient
  double latency_target_ms = 30.0;
  double accuracy_target = 1.22;  ///< mmHg
  double gross_error = 3.0;       ///< a beat off by more than this disqualifies a configuration, mmHg
  std::uint64_t seed = 7;         ///< calibration cohort, kept apart from evaluation seeds
  unsigned threads = 1;
};

/**
 * @brief Grid search of alpha and beta over a small calibration cohort.
 *
 * Full open-loop recordings of the nominal patient and a few generated
 * patients per scenario, with noise of the given variance. Only clean
 * configurations are eligible; among them the cost is the relative distance
 * of the pooled latency and accuracy to their targets.
 */
DetectorCalibration calibrate_detector(const ProtocolInputs& in, std::span<const double> alpha_grid,
                                       std::span<const double> beta_grid,
                                       const DetectorCalibrationOptions& opt = {});

struct MfacCalibrationPoint {
  double input_scale = 0.0;
  std::vector<double> sae;  ///< per scenario, in kAllScenarios order
  double total = NAN;
};

struct MfacCalibration {
  std::vector<MfacCalibrationPoint> grid;
  std::optional<MfacCalibrationPoint> best;
};

/// Picks the MFAC input scale minimizing the nominal patient's SAE summed over the six scenarios.
MfacCalibration calibrate_mfac(const ProtocolInputs& in, std::span<const double> scale_grid,
                               unsigned threads = 1);

}  // namespace lvad
