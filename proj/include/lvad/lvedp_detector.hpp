#pragma once

/**
 * @file lvedp_detector.hpp
 * @brief Causal beat-by-beat LVEDP detection from a 200 Hz LV pressure signal.
 *
 * Pipeline per sample: low-pass (FLVP) -> first difference (SFLVP) -> beat
 * period from SFLVP peaks -> rolling mean of SFLVP (MSFLVP) -> candidate and
 * adaptive-threshold tests -> backward search for the SFLVP minimum that
 * marks the end of diastole -> LVEDP = FLVP there.
 */

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lvad/butterworth.hpp"
#include "lvad/cvs_model.hpp"

namespace lvad {

/// Left-hand side of the candidate test `X >= alpha * MSFLVP`.
enum class CandidateSignal { Slope, Pressure };

struct DetectorConfig {
  double fs = 200.0;
  double pass_freq = 5.0;
  double stop_freq = 20.0;
  int window = 10;
  int top_k = 15;
  double alpha = 1.0;
  double beta = 0.175;
  CandidateSignal candidate = CandidateSignal::Slope;
  double peak_fraction = 0.5;     ///< beat peaks must exceed this share of the running max
  double peak_refractory = 0.25;  ///< s
  double rearm_fraction = 0.6;    ///< detection re-arms after this share of the beat period

  void validate() const;
  bool operator==(const DetectorConfig&) const = default;
};

struct LvedpEvent {
  double detection_time = 0.0;  ///< s
  double actual_time = 0.0;     ///< s
  double value = 0.0;           ///< mmHg
  std::int64_t cycle_index = 0;
};

class NoBeatError : public std::runtime_error {
 public:
  NoBeatError() : std::runtime_error("no-beat: beat period not yet established") {}
};

/// Tracks SFLVP peaks to estimate the beat period.
class BeatTracker {
 public:
  BeatTracker(double fs, double peak_fraction, double refractory_s);

  void push(double t, double slope);
  bool has_period() const { return period_.has_value(); }
  /// Latest inter-peak interval; throws NoBeatError before two peaks.
  double beat_period() const;
  std::size_t peak_count() const { return peaks_; }

 private:
  double fs_;
  double fraction_;
  double refractory_;
  std::size_t max_window_;
  std::deque<std::pair<std::int64_t, double>> max_queue_;  // monotonic sliding max
  std::int64_t n_ = -1;
  double s1_ = 0.0, s2_ = 0.0;  // slope at n-1, n-2
  double t1_ = 0.0;
  std::optional<double> last_peak_t_;
  std::optional<double> period_;
  std::size_t peaks_ = 0;
};

enum class DetectorStatus { NoBeat, Tracking };

class LvedpDetector {
 public:
  explicit LvedpDetector(DetectorConfig config);

  /// Feed one sample; returns an event when a beat's end-diastole is detected.
  std::optional<LvedpEvent> push(double t, double lvp);

  DetectorStatus status() const;
  double beat_period() const { return beats_.beat_period(); }
  double flvp() const { return flvp_; }
  double sflvp() const { return sflvp_; }
  double threshold() const { return threshold_; }
  const LowpassDesign& design() const { return design_; }
  const DetectorConfig& config() const { return config_; }

 private:
  double history_flvp(std::int64_t i) const { return hist_flvp_[static_cast<std::size_t>(i % cap_)]; }
  double history_sflvp(std::int64_t i) const { return hist_sflvp_[static_cast<std::size_t>(i % cap_)]; }
  double history_t(std::int64_t i) const { return hist_t_[static_cast<std::size_t>(i % cap_)]; }
  void rebuild_top(std::int64_t from);
  void insert_top(double v);
  std::int64_t find_actual(std::int64_t detection) const;

  DetectorConfig config_;
  LowpassDesign design_;
  SosFilter filter_;
  BeatTracker beats_;
  std::int64_t cap_;
  std::vector<double> hist_t_, hist_flvp_, hist_sflvp_;
  std::int64_t n_ = -1;
  double flvp_ = 0.0, sflvp_ = 0.0, threshold_ = 0.0;
  double window_sum_ = 0.0;
  std::vector<double> top_;  // ascending, at most top_k
  std::optional<std::int64_t> cycle_start_;
  std::optional<double> last_detection_t_;
  std::int64_t cycle_index_ = 0;
};

/// Batch helpers over the streaming primitives.
std::vector<double> lowpass(std::span<const double> x, const LowpassDesign& design);
std::vector<double> slope(std::span<const double> x, double fs);
std::vector<LvedpEvent> detect(std::span<const double> t, std::span<const double> lvp,
                               const DetectorConfig& config);

struct DetectionMetrics {
  double latency_mae_ms = 0.0;
  double latency_std_ms = 0.0;
  double accuracy_mean = 0.0;  ///< mean |value error|, mmHg
  double accuracy_std = 0.0;
  double accuracy_max = 0.0;  ///< worst |value error|, mmHg
  std::size_t matched = 0;
  std::size_t dropped = 0;
  std::size_t spurious = 0;
};

class DetectionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Latency MAE and value accuracy against ground truth.
 *
 * Each truth beat pairs with the event whose actual time falls in
 * [t - T/4, t + T/2). Truth before `start_time` is ignored. Throws
 * DetectionMismatch when event and truth counts differ by more than 5 %.
 */
DetectionMetrics evaluate(std::span<const LvedpEvent> events, std::span<const TrueLvedp> truth,
                          double start_time = -1e300);

}  // namespace lvad
