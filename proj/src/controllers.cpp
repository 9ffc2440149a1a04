#include "lvad/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lvad {

void MfacConfig::validate() const {
  if (!(mu > 0.0)) throw std::invalid_argument("controller.mfac.mu must be > 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("controller.mfac.eta must be in (0, 1]");
  if (!(lambda > 0.0)) throw std::invalid_argument("controller.mfac.lambda must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("controller.mfac.epsilon must be > 0");
  if (!(rho > 0.0)) throw std::invalid_argument("controller.mfac.rho must be > 0");
  if (phi1 == 0.0 || !std::isfinite(phi1)) throw std::invalid_argument("controller.mfac.phi1 must be nonzero");
  if (output_sign != 1.0 && output_sign != -1.0)
    throw std::invalid_argument("controller.mfac.output_sign must be +1 or -1");
  if (!(u_min < u_max)) throw std::invalid_argument("controller.mfac.u_min must be < u_max");
  if (!(input_scale > 0.0)) throw std::invalid_argument("controller.mfac.input_scale must be > 0");
}

double mfac_estimate_ppd(double phi_prev, double du_prev, double dy, const MfacConfig& c) {
  const double phi =
      phi_prev + c.eta * du_prev * (dy - phi_prev * du_prev) / (c.mu + du_prev * du_prev);
  const bool small = std::abs(phi) <= c.epsilon || std::abs(du_prev) <= c.epsilon;
  const bool flipped = std::signbit(phi) != std::signbit(c.phi1);
  return (small || flipped) ? c.phi1 : phi;
}

double mfac_control(MfacState& s, double y, double y_star, const MfacConfig& c) {
  if (!s.initialized) {
    s.phi_hat = c.phi1;
    s.u_prev2 = s.u_prev;
    s.y_prev = y;
    s.initialized = true;
  } else {
    s.phi_hat = mfac_estimate_ppd(s.phi_hat, s.u_prev - s.u_prev2, y - s.y_prev, c);
  }
  const double u = s.u_prev + c.rho * s.phi_hat * (y_star - y) / (c.lambda + s.phi_hat * s.phi_hat);
  const double clamped = std::clamp(u, c.u_min, c.u_max);
  s.u_prev2 = s.u_prev;
  s.u_prev = clamped;
  s.y_prev = y;
  return clamped;
}

MfacController::MfacController(MfacConfig config, double initial_command) : config_(config) {
  config_.validate();
  scaled_ = config_;
  scaled_.u_min = config_.u_min / config_.input_scale;
  scaled_.u_max = config_.u_max / config_.input_scale;
  state_.u_prev = std::clamp(initial_command, config_.u_min, config_.u_max) / config_.input_scale;
  state_.u_prev2 = state_.u_prev;
}

double MfacController::update(double lvedp, double setpoint) {
  const double u =
      mfac_control(state_, config_.output_sign * lvedp, config_.output_sign * setpoint, scaled_);
  return std::clamp(u * config_.input_scale, config_.u_min, config_.u_max);
}

void PidConfig::validate() const {
  if (!(kp >= 0.0 && ki >= 0.0 && kd >= 0.0)) throw std::invalid_argument("PID gains must be >= 0");
  if (!(u_min < u_max)) throw std::invalid_argument("controller.pid.u_min must be < u_max");
}

double pid_control(PidState& s, double error, double dt, const PidConfig& c) {
  if (!(dt > 0.0)) throw std::invalid_argument("pid_control: dt must be > 0");
  if (!s.initialized) {
    s.prev_error = error;
    s.initialized = true;
  }
  const double p = c.kp * error;
  const double d = c.kd * (error - s.prev_error) / dt;
  // freeze the integrator while the output is already past a limit in the direction of the error
  const double trial = c.bias + p + c.ki * s.integrator + d;
  const bool saturating = (trial >= c.u_max && error > 0.0) || (trial <= c.u_min && error < 0.0);
  if (!saturating) s.integrator += error * dt;
  s.prev_error = error;
  s.last_p = p;
  s.last_i = c.ki * s.integrator;
  s.last_d = d;
  return std::clamp(c.bias + p + s.last_i + d, c.u_min, c.u_max);
}

}  // namespace lvad
