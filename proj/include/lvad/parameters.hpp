#pragma once

/**
 * @file parameters.hpp
 * @brief Physiological parameter set of the lumped cardiovascular model.
 */

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace lvad {

/// 1 mmHg expressed in dyn/cm^2.
inline constexpr double kDynPerMmHg = 1333.22;

/// dyn·s·cm⁻⁵ → mmHg·s·mL⁻¹.
inline double dyn_to_mmhg_s_per_ml(double dyn_s_cm5) { return dyn_s_cm5 / kDynPerMmHg; }

/// mmHg·s·mL⁻¹ → dyn·s·cm⁻⁵.
inline double mmhg_s_per_ml_to_dyn(double mmhg_s_ml) { return mmhg_s_ml * kDynPerMmHg; }

/**
 * @brief Cardiovascular model parameters.
 *
 * The first 43 fields are the published nominal set (elastances mmHg/mL,
 * resistances mmHg·s/mL, inertances mmHg·s²/mL, volumes mL, stiffness
 * coefficients 1/mL, stiffness scaling terms mmHg, times s). The remaining
 * fields close the circuit: afterload resistances driven by the scenarios,
 * intrathoracic pressure, and the tricuspid / pulmonary-venous resistances
 * that the published roster leaves out.
 */
struct CvsParameters {
  double Eeslvf = 3.54;
  double Eesrvf = 1.75;
  double Eao = 1.04;
  double Eesla = 0.2;
  double Eesra = 0.2;
  double Epa = 0.15;
  double Epu = 0.04;
  double Esa = 0.37;
  double Esv = 0.013;
  double Evc = 0.03;
  double Rao = 0.2;
  double Rra = 0.012;
  double Rpv = 0.02;
  double Rsv = 0.12;
  double Tc = 1.0;
  double Tsys0 = 0.5;
  double V0la = 20.0;
  double V0lvf = 40.0;
  double V0ra = 20.0;
  double V0rvf = 50.0;
  double Vdla = 10.0;
  double Vdlvf = 16.77;
  double Vdra = 10.0;
  double Vdrvf = 40.0;
  double Rmt = 0.01;
  double Rav = 0.02;
  double Vuao = 230.88;
  double Vupa = 91.67;
  double Vupu = 132.39;
  double Vusa = 231.04;
  double Vusv = 1976.1;
  double Vuvc = 136.17;
  double P0la = 0.5;
  double P0lvf = 0.98;
  double P0ra = 0.5;
  double P0rvf = 0.91;
  double Vtotal = 5200.0;
  double lambda_la = 0.025;
  double lambda_lvf = 0.028;
  double lambda_ra = 0.025;
  double lambda_rvf = 0.028;
  double Lao = 0.0001;
  double Lpa = 7.70e-05;

  // Scenario-driven afterloads (nominal 1300 and 100 dyn·s·cm⁻⁵).
  double Rsa = 1300.0 / kDynPerMmHg;
  double Rpa = 100.0 / kDynPerMmHg;
  double Pthor = -4.0;
  double Rtc = 0.005;
  double Rpu = 0.01;

  /// Sum of every unstressed / zero-pressure volume in the circuit.
  double unstressed_volume() const;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  double& operator[](std::string_view name);
  double operator[](std::string_view name) const;

  bool operator==(const CvsParameters&) const = default;
};

enum class ParameterUnit { Elastance, Resistance, Inertance, Volume, Stiffness, Pressure, Time };

struct ParameterInfo {
  std::string_view name;
  double CvsParameters::*field;
  ParameterUnit unit;
  std::string_view description;
  /// True for the 43 entries of the published nominal table.
  bool published;
};

/// Registry over every CvsParameters field, published entries first, in table order.
std::span<const ParameterInfo> cvs_parameter_table();

/// Only the 43 published entries.
std::span<const ParameterInfo> published_parameters();

std::optional<ParameterInfo> find_parameter(std::string_view name);

std::string_view unit_symbol(ParameterUnit unit);

}  // namespace lvad
