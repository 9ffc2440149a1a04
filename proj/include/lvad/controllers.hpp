#pragma once

/**
 * @file controllers.hpp
 * @brief Pump-speed controllers: compact-form MFAC and PID with anti-windup.
 */

#include <optional>

namespace lvad {

struct MfacConfig {
  double rho = 1.0;        ///< step constant of the control law
  double lambda = 0.1;     ///< weighting of consecutive control changes
  double eta = 1.0;        ///< step constant of the PPD estimator, in (0, 1]
  double mu = 0.1;         ///< weighting of consecutive PPD changes
  double phi1 = 0.001;     ///< initial PPD and reset value
  double epsilon = 1e-4;   ///< reset tolerance
  /// Sign applied to the plant output so that the PPD keeps the sign of phi1.
  /// Raising pump speed lowers LVEDP, hence -1 for the LVEDP loop.
  double output_sign = -1.0;
  /// Plant input units per controller unit: the law runs on u / input_scale.
  double input_scale = 12.5;
  double u_min = 1800.0;
  double u_max = 3000.0;

  void validate() const;
  bool operator==(const MfacConfig&) const = default;
};

struct MfacState {
  double phi_hat = 0.0;
  double u_prev = 0.0;
  double u_prev2 = 0.0;
  double y_prev = 0.0;
  bool initialized = false;
};

/// Projection update of the PPD followed by the reset rule.
double mfac_estimate_ppd(double phi_prev, double du_prev, double dy, const MfacConfig& c);

/**
 * @brief One MFAC tick in plant coordinates (no output_sign applied).
 *
 * On the first call the state is seeded with phi1 and the current command.
 * Otherwise the PPD is updated from the last input/output increments, then
 * u = u_prev + rho*phi*(y* - y)/(lambda + phi^2), clamped.
 */
double mfac_control(MfacState& s, double y, double y_star, const MfacConfig& c);

class MfacController {
 public:
  MfacController(MfacConfig config, double initial_command);

  /// LVEDP measurement and setpoint in mmHg; returns the speed command in rpm.
  double update(double lvedp, double setpoint);

  const MfacState& state() const { return state_; }
  const MfacConfig& config() const { return config_; }

 private:
  MfacConfig config_;
  MfacConfig scaled_;  // limits in controller units
  MfacState state_;
};

struct PidConfig {
  double kp = 133.09;  ///< rpm/mmHg
  double ki = 17.17;   ///< rpm/(mmHg·s)
  double kd = 10.21;   ///< rpm·s/mmHg
  double bias = 2400.0;
  double u_min = 1800.0;
  double u_max = 3000.0;

  void validate() const;
  bool operator==(const PidConfig&) const = default;
};

struct PidState {
  double integrator = 0.0;  ///< mmHg·s
  double prev_error = 0.0;
  bool initialized = false;
  double last_p = 0.0, last_i = 0.0, last_d = 0.0;
};

/**
 * @brief Parallel PID around a bias with conditional integration.
 *
 * error is measured LVEDP minus setpoint, so a positive error speeds the pump
 * up. The integrator is held whenever the unclamped output is beyond a limit
 * and the error pushes further out.
 */
double pid_control(PidState& s, double error, double dt, const PidConfig& c);

class PidController {
 public:
  explicit PidController(PidConfig config) : config_(config) { config_.validate(); }
  double update(double lvedp, double setpoint, double dt) {
    return pid_control(state_, lvedp - setpoint, dt, config_);
  }
  const PidState& state() const { return state_; }
  const PidConfig& config() const { return config_; }

 private:
  PidConfig config_;
  PidState state_;
};

}  // namespace lvad
