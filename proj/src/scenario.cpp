#include "lvad/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "lvad/parallel.hpp"

namespace lvad {

namespace {

struct ScenarioNames {
  ScenarioKind kind;
  std::string_view cli;
  std::string_view label;
};

constexpr ScenarioNames kNames[] = {
    {ScenarioKind::RpaUp, "rpa-up", "Rpa increase"},
    {ScenarioKind::RpaDown, "rpa-down", "Rpa decrease"},
    {ScenarioKind::RsaUp, "rsa-up", "Rsa increase"},
    {ScenarioKind::RsaDown, "rsa-down", "Rsa decrease"},
    {ScenarioKind::RestToExercise, "exercise", "Rest to exercise"},
    {ScenarioKind::PosturalChange, "posture", "Postural change"},
};

constexpr std::string_view kRpaUp[] = {"Eesrvf", "Esa",  "Esv",  "Evc",    "Rsv",        "Rmt",       "Vusv",
                                       "Vupu",   "Vusa", "Vuvc", "Vtotal", "lambda_lvf", "lambda_rvf"};
constexpr std::string_view kRpaDown[] = {"Eesrvf", "Eesra", "Esv", "Rsv", "Vusv", "Vtotal", "lambda_ra", "lambda_rvf"};
constexpr std::string_view kRsaUp[] = {"Esa", "Vusv", "Vtotal", "lambda_rvf"};
constexpr std::string_view kRsaDown[] = {"Eeslvf", "Eesrvf", "Eesra",  "Esa",       "Esv",       "Evc",
                                         "Rsv",    "V0lvf",  "Vdlvf",  "Rmt",       "Vusv",      "P0lvf",
                                         "P0rvf",  "Vtotal", "lambda_lvf", "lambda_ra", "lambda_rvf"};
constexpr std::string_view kExercise[] = {"Eeslvf", "Eesrvf", "Eesla", "Eesra",     "Esv",       "Evc",       "Rsv",
                                          "V0lvf",  "Rmt",    "Vusv",  "Vtotal",    "lambda_la", "lambda_ra", "lambda_rvf"};
constexpr std::string_view kPosture[] = {"Eeslvf", "Eesrvf", "Esv",  "Evc",    "Rsv",       "V0lvf",      "Vdlvf",
                                         "Rmt",    "Vusv",   "P0lvf", "Vtotal", "lambda_la", "lambda_lvf", "lambda_rvf"};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
  for (const auto& n : kNames)
    if (n.kind == kind) return n.cli;
  return "unknown";
}

std::string_view scenario_label(ScenarioKind kind) {
  for (const auto& n : kNames)
    if (n.kind == kind) return n.label;
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario(std::string_view name) {
  for (const auto& n : kNames)
    if (n.cli == name) return n.kind;
  return std::nullopt;
}

Forcing Scenario::forcing() const {
  Forcing f;
  if (heart_rate) f.heart_rate = *heart_rate;
  auto convert = [](const Schedule& s) {
    Schedule out = s;
    out.x0 = convert_resistance(s.x0);
    out.x1 = convert_resistance(s.x1);
    return out;
  };
  if (Rsa_dyn) f.Rsa = convert(*Rsa_dyn);
  if (Rpa_dyn) f.Rpa = convert(*Rpa_dyn);
  f.transfer = transfer;
  return f;
}

Scenario make_scenario(ScenarioKind kind, double onset) {
  Scenario s;
  s.kind = kind;
  s.onset = onset;
  const auto step = [onset](double a, double b) { return Schedule{a, b, onset, ScheduleMode::Step, 10.0}; };
  const auto slow = [onset](double a, double b) { return Schedule{a, b, onset, ScheduleMode::FirstOrder, 10.0}; };
  switch (kind) {
    case ScenarioKind::RpaUp:
      s.Rpa_dyn = step(100.0, 500.0);
      break;
    case ScenarioKind::RpaDown:
      s.Rpa_dyn = step(100.0, 40.0);
      break;
    case ScenarioKind::RsaUp:
      s.Rsa_dyn = step(1300.0, 2600.0);
      break;
    case ScenarioKind::RsaDown:
      s.Rsa_dyn = step(1300.0, 600.0);
      break;
    case ScenarioKind::RestToExercise:
      s.heart_rate = slow(60.0, 80.0);
      s.Rpa_dyn = slow(100.0, 40.0);
      s.Rsa_dyn = slow(1300.0, 670.0);
      s.transfer = {500.0, onset, 10.0};
      break;
    case ScenarioKind::PosturalChange:
      s.transfer = {-300.0, onset, 10.0};
      break;
  }
  return s;
}

double sensitivity_coefficient(double F0, double F_perturbed, double theta, double delta_theta) {
  if (F0 == 0.0) throw std::invalid_argument("sensitivity_coefficient: F0 is zero");
  if (delta_theta == 0.0) throw std::invalid_argument("sensitivity_coefficient: delta theta is zero");
  return theta / F0 * ((F_perturbed - F0) / delta_theta);
}

std::vector<std::string> SensitivityReport::significant() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (r.significant) out.push_back(r.parameter);
  return out;
}

std::vector<SensitivityRow> SensitivityReport::ranked() const {
  auto out = rows;
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::abs(a.S_plus) + std::abs(a.S_minus) > std::abs(b.S_plus) + std::abs(b.S_minus);
  });
  return out;
}

SensitivityReport run_sensitivity(ScenarioKind scenario, const CvsParameters& base,
                                  const Objective& objective, unsigned threads, double perturbation,
                                  double threshold) {
  SensitivityReport rep;
  rep.scenario = scenario;
  rep.perturbation = perturbation;
  rep.threshold = threshold;
  rep.F0 = objective(base);

  const auto params = published_parameters();
  rep.rows.resize(params.size());
  // jobs 2i and 2i+1 are the + and - runs of parameter i
  std::vector<double> F(2 * params.size(), NAN);
  std::vector<std::string> errors(2 * params.size());
  parallel_for(F.size(), threads, [&](std::size_t job) {
    const auto& info = params[job / 2];
    const double sign = job % 2 == 0 ? 1.0 : -1.0;
    CvsParameters p = base;
    p.*info.field = base.*info.field * (1.0 + sign * perturbation);
    try {
      p.validate();
      F[job] = objective(p);
    } catch (const std::exception& e) {
      errors[job] = e.what();
    }
  });

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& row = rep.rows[i];
    row.parameter = std::string(params[i].name);
    const double theta = base.*params[i].field;
    const double dtheta = theta * perturbation;
    if (!errors[2 * i].empty() || !errors[2 * i + 1].empty()) {
      row.error = !errors[2 * i].empty() ? "+: " + errors[2 * i] : "-: " + errors[2 * i + 1];
      row.S_plus = row.S_minus = NAN;
      continue;
    }
    if (theta == 0.0) continue;  // nothing to perturb
    row.S_plus = sensitivity_coefficient(rep.F0, F[2 * i], theta, dtheta);
    row.S_minus = sensitivity_coefficient(rep.F0, F[2 * i + 1], theta, -dtheta);
    row.significant = std::abs(row.S_plus) + std::abs(row.S_minus) >= threshold;
  }
  return rep;
}

std::span<const std::string_view> default_significant_set(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::RpaUp: return kRpaUp;
    case ScenarioKind::RpaDown: return kRpaDown;
    case ScenarioKind::RsaUp: return kRsaUp;
    case ScenarioKind::RsaDown: return kRsaDown;
    case ScenarioKind::RestToExercise: return kExercise;
    case ScenarioKind::PosturalChange: return kPosture;
  }
  return {};
}

CvsParameters PatientSpec::apply(const CvsParameters& base) const {
  CvsParameters p = base;
  for (const auto& [name, factor] : factors) {
    const auto info = find_parameter(name);
    if (!info) throw std::invalid_argument("unknown parameter in patient spec: " + name);
    p.*info->field = base.*info->field * factor;
  }
  return p;
}

PatientSpec generate_patient(std::uint64_t seed, std::span<const std::string_view> parameters,
                             double spread) {
  PatientSpec spec;
  spec.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto name : parameters) {
    if (!find_parameter(name)) throw std::invalid_argument("unknown parameter: " + std::string(name));
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    spec.factors[std::string(name)] = 1.0 - spread + 2.0 * spread * u;
  }
  return spec;
}

PatientSpec generate_patient(std::uint64_t seed, ScenarioKind kind) {
  return generate_patient(seed, default_significant_set(kind));
}

std::uint64_t patient_seed(std::uint64_t cohort_seed, ScenarioKind kind, std::uint64_t index) {
  return splitmix64(splitmix64(cohort_seed ^ (static_cast<std::uint64_t>(kind) << 56)) + index);
}

}  // namespace lvad
