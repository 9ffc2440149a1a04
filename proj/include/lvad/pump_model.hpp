#pragma once

/**
 * @file pump_model.hpp
 * @brief Centrifugal LVAD between LV apex and aorta.
 *
 * Head characteristic dP = a2*w^2 - a1*Q - a0*dQ/dt, in series with the
 * inlet/outlet cannulae and a suction resistance that only engages when the
 * LV pressure falls under a threshold.
 */

#include <algorithm>
#include <cmath>

namespace lvad {

struct PumpParameters {
  double Rin = 0.05;       ///< inlet cannula resistance, mmHg·s/mL
  double Rout = 0.05;      ///< outlet cannula resistance, mmHg·s/mL
  double Lin = 0.01;       ///< inlet cannula inertance, mmHg·s²/mL
  double Lout = 0.01;      ///< outlet cannula inertance, mmHg·s²/mL
  double a2 = 2.0e-5;      ///< mmHg/rpm²
  double a1 = 0.2;         ///< mmHg·s/mL
  double a0 = 0.005;       ///< mmHg·s²/mL
  double Rlsuc_gain = 3.5;       ///< suction resistance slope, (mmHg·s/mL) per mmHg
  double P_suc_threshold = 1.0;  ///< mmHg
  double speed_min = 1800.0;     ///< rpm
  double speed_max = 3000.0;     ///< rpm

  void validate() const;

  bool operator==(const PumpParameters&) const = default;
};

template <typename Scalar>
Scalar pump_head(const PumpParameters& p, Scalar speed, Scalar flow, Scalar dflow_dt) {
  return Scalar(p.a2) * speed * speed - Scalar(p.a1) * flow - Scalar(p.a0) * dflow_dt;
}

template <typename Scalar>
Scalar suction_resistance(const PumpParameters& p, Scalar plv) {
  if (plv >= Scalar(p.P_suc_threshold)) return Scalar(0);
  return Scalar(p.Rlsuc_gain) * (Scalar(p.P_suc_threshold) - plv);
}

inline double clamp_speed(const PumpParameters& p, double command) {
  return std::clamp(command, p.speed_min, p.speed_max);
}

/// Clinical operating band of the pump.
inline double clamp_speed(double command) { return clamp_speed(PumpParameters{}, command); }

}  // namespace lvad
