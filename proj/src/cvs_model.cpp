#include "lvad/cvs_model.hpp"

#include <cmath>

namespace lvad {

namespace {

double wrap_phase(double t_cycle, double period) {
  if (t_cycle < period) return t_cycle;
  double w = std::fmod(t_cycle, period);
  return w < 0.0 ? w + period : w;
}

Drive drive_for(const CvsParameters& p, const Forcing& f, double speed, double t, double t_cycle) {
  const ActivationSpec act = activation_spec(p, f.heart_rate(t));
  const double phase = wrap_phase(t_cycle, act.T);
  Drive d;
  d.ventricular_activation = elastance_activation(phase, act);
  d.atrial_activation = atrial_activation(phase, act);
  d.speed = speed;
  d.Rsa = f.Rsa ? (*f.Rsa)(t) : p.Rsa;
  d.Rpa = f.Rpa ? (*f.Rpa)(t) : p.Rpa;
  d.transfer_rate = f.transfer.rate(t);
  return d;
}

double vessel_pressure(double v, double e, double vu, double ref) { return e * (v - vu) + ref; }

}  // namespace

Hemodynamics hemodynamics(const StateVector<double>& x, const CvsParameters& p,
                          const PumpParameters& pump, const Drive& d) {
  Hemodynamics h{};
  const double ea = d.atrial_activation;
  const double ev = d.ventricular_activation;

  h.Pla = chamber_pressure(x[kVla], ea, left_atrium(p), p.Pthor);
  h.Plv = chamber_pressure(x[kVlv], ev, left_ventricle(p), p.Pthor);
  h.Pra = chamber_pressure(x[kVra], ea, right_atrium(p), p.Pthor);
  h.Prv = chamber_pressure(x[kVrv], ev, right_ventricle(p), p.Pthor);
  h.Pao = vessel_pressure(x[kVao], p.Eao, p.Vuao, p.Pthor);
  h.Ppa = vessel_pressure(x[kVpa], p.Epa, p.Vupa, p.Pthor);
  h.Ppu = vessel_pressure(x[kVpu], p.Epu, p.Vupu, p.Pthor);
  h.Psa = vessel_pressure(x[kVsa], p.Esa, p.Vusa, 0.0);
  h.Psv = vessel_pressure(x[kVsv], p.Esv, p.Vusv, 0.0);
  h.Pvc = vessel_pressure(x[kVvc], p.Evc, p.Vuvc, 0.0);

  h.Qmt = valve_flow(h.Pla, h.Plv, p.Rmt);
  h.Qav = valve_flow(h.Plv, h.Pao, p.Rav);
  h.Qtc = valve_flow(h.Pra, h.Prv, p.Rtc);
  h.Qpv = valve_flow(h.Prv, h.Ppa, p.Rpv);
  h.Qao = x[kQao];
  h.Qpa = x[kQpa];
  h.Qpump = x[kQpump];
  h.Qsa = (h.Psa - h.Psv) / d.Rsa;
  h.Qsv = (h.Psv - h.Pvc) / p.Rsv;
  h.Qvc = (h.Pvc - h.Pra) / p.Rra;
  h.Qpu = (h.Ppu - h.Pla) / p.Rpu;
  h.Rsuc = suction_resistance(pump, h.Plv);
  return h;
}

StateVector<double> derivatives(const StateVector<double>& x, const CvsParameters& p,
                                const PumpParameters& pump, const Drive& d) {
  const Hemodynamics h = hemodynamics(x, p, pump, d);
  StateVector<double> dx;
  dx[kVla] = h.Qpu - h.Qmt;
  dx[kVlv] = h.Qmt - h.Qav - h.Qpump;
  dx[kVao] = h.Qav + h.Qpump - h.Qao;
  dx[kVsa] = h.Qao - h.Qsa;
  dx[kVsv] = h.Qsa - h.Qsv;
  dx[kVvc] = h.Qsv - h.Qvc;
  dx[kVra] = h.Qvc - h.Qtc + d.transfer_rate;
  dx[kVrv] = h.Qtc - h.Qpv;
  dx[kVpa] = h.Qpv - h.Qpa;
  dx[kVpu] = h.Qpa - h.Qpu;
  dx[kQao] = (h.Pao - h.Psa - p.Rao * h.Qao) / p.Lao;
  dx[kQpa] = (h.Ppa - h.Ppu - d.Rpa * h.Qpa) / p.Lpa;

  // (Lin + Lout + a0) dQ/dt = Plv - Pao + a2 w^2 - (Rin + Rout + a1 + Rsuc) Q
  const double inertance = pump.Lin + pump.Lout + pump.a0;
  const double resistance = pump.Rin + pump.Rout + h.Rsuc;
  const double head_static = pump_head(pump, d.speed, h.Qpump, 0.0);
  dx[kQpump] = (h.Plv - h.Pao + head_static - resistance * h.Qpump) / inertance;

  if (!dx.allFinite()) throw SimulationError("non-finite derivative in cardiovascular model");
  return dx;
}

CvsState initial_state(const CvsParameters& p) {
  auto chamber_volume = [&](const ChamberParameters& c, double pressure) {
    return c.V0 + std::log1p((pressure - p.Pthor) / c.P0) / c.lambda;
  };
  CvsState s;
  s.x[kVla] = chamber_volume(left_atrium(p), 8.0);
  s.x[kVlv] = chamber_volume(left_ventricle(p), 8.0);
  s.x[kVra] = chamber_volume(right_atrium(p), 4.0);
  s.x[kVrv] = chamber_volume(right_ventricle(p), 4.0);
  s.x[kVao] = p.Vuao + (90.0 - p.Pthor) / p.Eao;
  s.x[kVsa] = p.Vusa + 85.0 / p.Esa;
  s.x[kVvc] = p.Vuvc + 5.0 / p.Evc;
  s.x[kVpa] = p.Vupa + (16.0 - p.Pthor) / p.Epa;
  s.x[kVpu] = p.Vupu + (9.0 - p.Pthor) / p.Epu;
  s.x[kVsv] = 0.0;
  double rest = p.Vtotal - s.total_volume();
  // Low-volume patients: scale stressed volumes down so sv keeps a positive share.
  const double sv_min = p.Vusv;
  if (rest < sv_min) {
    double stressed = 0.0;
    for (int i = 0; i < kVolumeCount; ++i) stressed += s.x[i];
    const double scale = (p.Vtotal - sv_min) / stressed;
    for (int i = 0; i < kVolumeCount; ++i) s.x[i] *= scale;
    rest = p.Vtotal - s.total_volume();
  }
  s.x[kVsv] = rest;
  s.x[kQao] = 0.0;
  s.x[kQpa] = 0.0;
  s.x[kQpump] = 0.0;
  s.t_cycle = 0.0;
  return s;
}

CvsState rk4_step(const CvsState& s, const CvsParameters& p, const PumpParameters& pump,
                  const Forcing& forcing, double speed, double t, double dt) {
  const double h2 = 0.5 * dt;
  const Drive d0 = drive_for(p, forcing, speed, t, s.t_cycle);
  const Drive dm = drive_for(p, forcing, speed, t + h2, s.t_cycle + h2);
  const Drive d1 = drive_for(p, forcing, speed, t + dt, s.t_cycle + dt);

  const StateVector<double> k1 = derivatives(s.x, p, pump, d0);
  const StateVector<double> k2 = derivatives(s.x + h2 * k1, p, pump, dm);
  const StateVector<double> k3 = derivatives(s.x + h2 * k2, p, pump, dm);
  const StateVector<double> k4 = derivatives(s.x + dt * k3, p, pump, d1);

  CvsState next;
  next.x = s.x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  const double period = activation_spec(p, forcing.heart_rate(t + dt)).T;
  next.t_cycle = wrap_phase(s.t_cycle + dt, period);
  return next;
}

CvsSimulator::CvsSimulator(CvsParameters params, PumpParameters pump, Forcing forcing,
                           SimulatorOptions options)
    : params_(params), pump_(pump), forcing_(forcing), options_(options) {
  params_.validate();
  pump_.validate();
  if (!(options_.dt > 0.0) || options_.dt > 1.0e-3)
    throw std::invalid_argument("integration step must be in (0, 1 ms]");
  const double ratio = 1.0 / (options_.sample_rate * options_.dt);
  steps_per_sample_ = static_cast<int>(std::lround(ratio));
  if (steps_per_sample_ < 1 || std::abs(ratio - steps_per_sample_) > 1e-9)
    throw std::invalid_argument("sample period must be a whole number of integration steps");
  state_ = initial_state(params_);
  speed_ = clamp_speed(pump_, 2400.0);
}

ActivationSpec CvsSimulator::activation_at(double t) const {
  return activation_spec(params_, forcing_.heart_rate(t));
}

Drive CvsSimulator::drive_at(double t, double t_cycle) const {
  return drive_for(params_, forcing_, speed_, t, t_cycle);
}

void CvsSimulator::step() {
  state_ = rk4_step(state_, params_, pump_, forcing_, speed_, time(), options_.dt);
  ++steps_;
}

Hemodynamics CvsSimulator::current_hemodynamics() const {
  return hemodynamics(state_.x, params_, pump_, drive_at(time(), state_.t_cycle));
}

double CvsSimulator::volume_error() const {
  return state_.total_volume() - (params_.Vtotal + forcing_.transfer.transferred(time()));
}

Sample CvsSimulator::advance() {
  for (int i = 0; i < steps_per_sample_; ++i) step();
  return make_sample();
}

Sample CvsSimulator::make_sample() {
  const double t = time();
  const Drive d = drive_at(t, state_.t_cycle);
  const Hemodynamics h = hemodynamics(state_.x, params_, pump_, d);
  Sample s;
  s.t = t;
  s.Plv = h.Plv;
  s.Pla = h.Pla;
  s.Pao = h.Pao;
  s.Vlv = state_.x[kVlv];
  s.Qpump = h.Qpump;
  s.Qmt = h.Qmt;
  s.Qav = h.Qav;
  s.speed = speed_;
  s.activation = d.ventricular_activation;
  s.volume_error = volume_error();
  if (prev_sample_activation_ == 0.0 && s.activation > 0.0) {
    lvedp_true_ = prev_sample_plv_;
    s.lvedp_event = true;
    s.lvedp_event_time = prev_sample_t_;
  }
  s.lvedp_true = lvedp_true_;
  prev_sample_activation_ = s.activation;
  prev_sample_plv_ = s.Plv;
  prev_sample_t_ = t;
  return s;
}

std::vector<TrueLvedp> true_lvedp(const std::vector<double>& t, const std::vector<double>& plv,
                                  const std::vector<double>& activation) {
  if (t.size() != plv.size() || t.size() != activation.size())
    throw std::invalid_argument("true_lvedp: series lengths differ");
  std::vector<TrueLvedp> out;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (activation[i - 1] == 0.0 && activation[i] > 0.0) out.push_back({t[i - 1], plv[i - 1]});
  }
  if (out.empty()) throw std::invalid_argument("true_lvedp: trace shorter than one cardiac cycle");
  return out;
}

}  // namespace lvad
