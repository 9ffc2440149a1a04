#pragma once

/**
 * @file scenario.hpp
 * @brief Patient scenarios, resistance units, OAT sensitivity and virtual patients.
 */

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvad/parameters.hpp"
#include "lvad/schedule.hpp"

namespace lvad {

/// dyn·s·cm⁻⁵ -> mmHg·s·mL⁻¹
inline double convert_resistance(double dyn) { return dyn / kDynPerMmHg; }
/// mmHg·s·mL⁻¹ -> dyn·s·cm⁻⁵
inline double convert_resistance_to_dyn(double mmhg) { return mmhg * kDynPerMmHg; }

enum class ScenarioKind { RpaUp, RpaDown, RsaUp, RsaDown, RestToExercise, PosturalChange };

inline constexpr ScenarioKind kAllScenarios[] = {
    ScenarioKind::RpaUp,   ScenarioKind::RpaDown,        ScenarioKind::RsaUp,
    ScenarioKind::RsaDown, ScenarioKind::RestToExercise, ScenarioKind::PosturalChange};

/// CLI spelling: rpa-up, rpa-down, rsa-up, rsa-down, exercise, posture.
std::string_view scenario_name(ScenarioKind kind);
/// Human-readable label used in reports.
std::string_view scenario_label(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario(std::string_view name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::RpaUp;
  double onset = 250.0;  ///< s
  /// Resistances in dyn·s·cm⁻⁵ as tabulated; heart rate in bpm.
  std::optional<Schedule> Rsa_dyn;
  std::optional<Schedule> Rpa_dyn;
  std::optional<Schedule> heart_rate;
  FluidTransfer transfer;

  /// Time-varying inputs for the simulator (resistances converted).
  Forcing forcing() const;
  bool operator==(const Scenario&) const = default;
};

/// The tabulated conditions for one scenario kind, starting at `onset`.
Scenario make_scenario(ScenarioKind kind, double onset = 250.0);

/// S = (theta/F0)·(ΔF/Δθ). Throws std::invalid_argument when F0 or Δθ is zero.
double sensitivity_coefficient(double F0, double F_perturbed, double theta, double delta_theta);

struct SensitivityRow {
  std::string parameter;
  double S_plus = 0.0;
  double S_minus = 0.0;
  bool significant = false;
  std::string error;  ///< non-empty when a perturbed run failed
};

struct SensitivityReport {
  ScenarioKind scenario = ScenarioKind::RpaUp;
  double F0 = 0.0;
  double perturbation = 0.2;
  double threshold = 0.45;
  std::vector<SensitivityRow> rows;  ///< in parameter-table order

  std::vector<std::string> significant() const;
  /// Rows sorted by |S+| + |S-|, largest first.
  std::vector<SensitivityRow> ranked() const;
};

/// Objective evaluated on a parameter set; must be safe to call concurrently.
using Objective = std::function<double(const CvsParameters&)>;

/**
 * @brief One-at-a-time ±perturbation sweep over the published parameters.
 *
 * A parameter is significant when |S+| + |S-| >= threshold. Exceptions from
 * a perturbed run are recorded on that row and the sweep continues; a
 * failure of the baseline objective propagates.
 */
SensitivityReport run_sensitivity(ScenarioKind scenario, const CvsParameters& base,
                                  const Objective& objective, unsigned threads = 1,
                                  double perturbation = 0.2, double threshold = 0.45);

/// Default perturbation sets per scenario (most effective parameters).
std::span<const std::string_view> default_significant_set(ScenarioKind kind);

struct PatientSpec {
  std::uint64_t seed = 0;
  std::map<std::string, double> factors;  ///< parameter name -> multiplicative factor

  CvsParameters apply(const CvsParameters& base) const;
  bool operator==(const PatientSpec&) const = default;
};

/// Uniform factors in [1 - spread, 1 + spread] for each parameter in the set.
PatientSpec generate_patient(std::uint64_t seed, std::span<const std::string_view> parameters,
                             double spread = 0.2);
PatientSpec generate_patient(std::uint64_t seed, ScenarioKind kind);

/// Deterministic seed for patient `index` of a cohort; independent of platform.
std::uint64_t patient_seed(std::uint64_t cohort_seed, ScenarioKind kind, std::uint64_t index);

}  // namespace lvad
