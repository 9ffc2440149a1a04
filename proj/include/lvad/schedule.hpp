#pragma once

/**
 * @file schedule.hpp
 * @brief Time schedules for scenario-driven parameters and fluid transfers.
 */

#include <cmath>
#include <optional>

namespace lvad {

enum class ScheduleMode { Step, FirstOrder };

/// x0 before t0, then either a jump to x1 or a first-order approach with time constant tau.
inline double schedule_value(double t, double x0, double x1, double t0, ScheduleMode mode,
                             double tau = 10.0) {
  if (t < t0) return x0;
  if (mode == ScheduleMode::Step) return x1;
  return x0 + (x1 - x0) * (1.0 - std::exp(-(t - t0) / tau));
}

struct Schedule {
  double x0 = 0.0;
  double x1 = 0.0;
  double t0 = 0.0;
  ScheduleMode mode = ScheduleMode::Step;
  double tau = 10.0;

  static Schedule constant(double x) { return {x, x, 0.0, ScheduleMode::Step, 10.0}; }

  double operator()(double t) const { return schedule_value(t, x0, x1, t0, mode, tau); }
  bool is_constant() const { return x0 == x1; }

  bool operator==(const Schedule&) const = default;
};

/**
 * @brief External source (volume > 0) or sink (volume < 0) at the right atrium.
 *
 * Rate decays as exp(-(t - t0)/tau) and integrates to exactly `volume`.
 */
struct FluidTransfer {
  double volume = 0.0;  ///< mL, signed
  double t0 = 0.0;
  double tau = 10.0;

  double rate(double t) const {
    if (volume == 0.0 || t < t0) return 0.0;
    return volume / tau * std::exp(-(t - t0) / tau);
  }

  double transferred(double t) const {
    if (volume == 0.0 || t < t0) return 0.0;
    return volume * (1.0 - std::exp(-(t - t0) / tau));
  }

  bool operator==(const FluidTransfer&) const = default;
};

/**
 * @brief Everything about the circulation that changes with time.
 *
 * An absent resistance schedule means "use the value from CvsParameters";
 * heart rate is in bpm relative to the resting 60 bpm of Tc.
 */
struct Forcing {
  Schedule heart_rate = Schedule::constant(60.0);
  std::optional<Schedule> Rsa;
  std::optional<Schedule> Rpa;
  FluidTransfer transfer;

  bool operator==(const Forcing&) const = default;
};

}  // namespace lvad
