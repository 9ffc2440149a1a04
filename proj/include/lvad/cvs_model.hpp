#pragma once

/**
 * @file cvs_model.hpp
 * @brief Closed-loop lumped cardiovascular model with an LVAD.
 *
 * Four time-varying-elastance chambers, six elastic vessels, four diode
 * valves, inertial aortic and pulmonary branches and an inertial pump branch
 * from the LV apex to the aorta. Integrated with fixed-step RK4.
 */

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lvad/parameters.hpp"
#include "lvad/pump_model.hpp"
#include "lvad/schedule.hpp"

namespace lvad {

enum StateIndex : int {
  kVla = 0,
  kVlv,
  kVao,
  kVsa,
  kVsv,
  kVvc,
  kVra,
  kVrv,
  kVpa,
  kVpu,
  kQao,
  kQpa,
  kQpump,
  kStateSize
};

inline constexpr int kVolumeCount = kQao;

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStateSize, 1>;

/// ODE state plus the position inside the current heart beat.
struct CvsState {
  StateVector<double> x = StateVector<double>::Zero();
  double t_cycle = 0.0;

  double total_volume() const { return x.head<kVolumeCount>().sum(); }
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ActivationSpec {
  double T = 1.0;     ///< heart period, s
  double Tsys = 0.5;  ///< ventricular systolic duration, s
};

/// Atrial contraction precedes ventricular onset by this fraction of T and ends at it.
inline constexpr double kAtrialLead = 0.16;

/// Period from Tc and heart rate, systole from Tsys0*sqrt(T).
inline ActivationSpec activation_spec(const CvsParameters& p, double heart_rate_bpm) {
  const double T = p.Tc * 60.0 / heart_rate_bpm;
  return {T, p.Tsys0 * std::sqrt(T)};
}

/// Raised-cosine driver: 0.5*(1 - cos(2*pi*t/Tsys)) inside systole, 0 elsewhere.
template <typename Scalar>
Scalar elastance_activation(Scalar t_cycle, Scalar Tsys) {
  using std::cos;
  if (t_cycle < Scalar(0) || t_cycle >= Tsys) return Scalar(0);
  return Scalar(0.5) * (Scalar(1) - cos(Scalar(2 * std::numbers::pi) * t_cycle / Tsys));
}

template <typename Scalar>
Scalar elastance_activation(Scalar t_cycle, const ActivationSpec& act) {
  return elastance_activation(t_cycle, Scalar(act.Tsys));
}

/// Atrial driver: same shape, duration kAtrialLead*T, ending at ventricular onset.
template <typename Scalar>
Scalar atrial_activation(Scalar t_cycle, const ActivationSpec& act) {
  const Scalar duration = Scalar(kAtrialLead * act.T);
  const Scalar start = Scalar(act.T) - duration;
  if (t_cycle < start) return Scalar(0);
  return elastance_activation(t_cycle - start, duration);
}

struct ChamberParameters {
  double Ees;     ///< end systolic elastance
  double Vd;      ///< end systolic zero-pressure volume
  double P0;      ///< end diastolic stiffness scaling term
  double lambda;  ///< end diastolic stiffness coefficient
  double V0;      ///< end diastolic zero-pressure volume
};

/// Blend of the end-systolic line and the end-diastolic exponential, referenced to Pthor.
template <typename Scalar>
Scalar chamber_pressure(Scalar volume, Scalar activation, const ChamberParameters& c,
                        double pthor) {
  using std::exp;
  const Scalar systolic = Scalar(c.Ees) * (volume - Scalar(c.Vd));
  const Scalar diastolic = Scalar(c.P0) * (exp(Scalar(c.lambda) * (volume - Scalar(c.V0))) - Scalar(1));
  return activation * systolic + (Scalar(1) - activation) * diastolic + Scalar(pthor);
}

/// Ideal diode in series with a resistance.
template <typename Scalar>
Scalar valve_flow(Scalar p_up, Scalar p_down, Scalar resistance) {
  const Scalar q = (p_up - p_down) / resistance;
  return q > Scalar(0) ? q : Scalar(0);
}

inline ChamberParameters left_ventricle(const CvsParameters& p) {
  return {p.Eeslvf, p.Vdlvf, p.P0lvf, p.lambda_lvf, p.V0lvf};
}
inline ChamberParameters right_ventricle(const CvsParameters& p) {
  return {p.Eesrvf, p.Vdrvf, p.P0rvf, p.lambda_rvf, p.V0rvf};
}
inline ChamberParameters left_atrium(const CvsParameters& p) {
  return {p.Eesla, p.Vdla, p.P0la, p.lambda_la, p.V0la};
}
inline ChamberParameters right_atrium(const CvsParameters& p) {
  return {p.Eesra, p.Vdra, p.P0ra, p.lambda_ra, p.V0ra};
}

/// Instantaneous external inputs for one derivative evaluation.
struct Drive {
  double ventricular_activation = 0.0;
  double atrial_activation = 0.0;
  double speed = 0.0;  ///< rpm
  double Rsa = 0.0;
  double Rpa = 0.0;
  double transfer_rate = 0.0;  ///< mL/s into the right atrium
};

/// Pressures (mmHg) and flows (mL/s) implied by a state.
struct Hemodynamics {
  double Pla, Plv, Pao, Psa, Psv, Pvc, Pra, Prv, Ppa, Ppu;
  double Qmt, Qav, Qao, Qsa, Qsv, Qvc, Qtc, Qpv, Qpa, Qpu, Qpump;
  double Rsuc;
};

Hemodynamics hemodynamics(const StateVector<double>& x, const CvsParameters& p,
                          const PumpParameters& pump, const Drive& d);

/// dx/dt; throws SimulationError when any component is not finite.
StateVector<double> derivatives(const StateVector<double>& x, const CvsParameters& p,
                                const PumpParameters& pump, const Drive& d);

/// Resting state at roughly physiological pressures; sv absorbs the remainder of Vtotal.
CvsState initial_state(const CvsParameters& p);

struct SimulatorOptions {
  double dt = 1.0e-4;        ///< internal RK4 step, s
  double sample_rate = 200;  ///< output rate, Hz
};

/// One 200 Hz output sample.
struct Sample {
  double t = 0.0;
  double Plv = 0.0;
  double Pla = 0.0;
  double Pao = 0.0;
  double Vlv = 0.0;
  double Qpump = 0.0;
  double speed = 0.0;
  double activation = 0.0;
  double lvedp_true = NAN;  ///< most recent ground-truth LVEDP, held between beats
  bool lvedp_event = false;  ///< true on the sample that carries a fresh annotation
  double lvedp_event_time = NAN;
  double volume_error = 0.0;  ///< sum of volumes minus (Vtotal + transferred), mL
  double Qmt = 0.0;
  double Qav = 0.0;
};

/**
 * @brief Stateful integrator of the heart-pump model.
 *
 * Value type; copying a simulator forks the run. The pump speed is a held
 * input set between samples.
 */
class CvsSimulator {
 public:
  CvsSimulator(CvsParameters params, PumpParameters pump, Forcing forcing = {},
               SimulatorOptions options = {});

  /// Advance one internal step.
  void step();

  /// Integrate to the next output instant and return the sample there.
  Sample advance();

  void set_speed(double rpm) { speed_ = clamp_speed(pump_, rpm); }
  double speed() const { return speed_; }

  double time() const { return static_cast<double>(steps_) * options_.dt; }
  const CvsState& state() const { return state_; }
  const CvsParameters& parameters() const { return params_; }
  const PumpParameters& pump() const { return pump_; }
  const Forcing& forcing() const { return forcing_; }
  const SimulatorOptions& options() const { return options_; }

  ActivationSpec activation_at(double t) const;
  Drive drive_at(double t, double t_cycle) const;
  Hemodynamics current_hemodynamics() const;
  double volume_error() const;

  /// Overwrite the state (tests and warm starts).
  void reset_state(const CvsState& s) { state_ = s; }

 private:
  Sample make_sample();

  CvsParameters params_;
  PumpParameters pump_;
  Forcing forcing_;
  SimulatorOptions options_;
  CvsState state_;
  double speed_ = 2400.0;
  long long steps_ = 0;
  int steps_per_sample_ = 50;
  double prev_sample_activation_ = 1.0;
  double prev_sample_plv_ = NAN;
  double prev_sample_t_ = NAN;
  double lvedp_true_ = NAN;
};

/// Single RK4 step of the free dynamics, with the forcing evaluated at the stage times.
CvsState rk4_step(const CvsState& s, const CvsParameters& p, const PumpParameters& pump,
                  const Forcing& forcing, double speed, double t, double dt);

struct TrueLvedp {
  double time;
  double value;
};

/**
 * @brief Ground-truth LVEDP per beat from a sampled trace.
 *
 * LVP at the last sample with zero ventricular activation before it turns
 * positive. Throws std::invalid_argument when the trace spans less than one beat.
 */
std::vector<TrueLvedp> true_lvedp(const std::vector<double>& t, const std::vector<double>& plv,
                                  const std::vector<double>& activation);

}  // namespace lvad
