#include "lvad/parameters.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace lvad {

namespace {

using P = CvsParameters;
using U = ParameterUnit;

constexpr std::array<ParameterInfo, 48> kTable{{
    {"Eeslvf", &P::Eeslvf, U::Elastance, "LV end systolic elastance", true},
    {"Eesrvf", &P::Eesrvf, U::Elastance, "RV end systolic elastance", true},
    {"Eao", &P::Eao, U::Elastance, "Aortic elastance", true},
    {"Eesla", &P::Eesla, U::Elastance, "LA end systolic elastance", true},
    {"Eesra", &P::Eesra, U::Elastance, "RA end systolic elastance", true},
    {"Epa", &P::Epa, U::Elastance, "Pulmonary arterial elastance", true},
    {"Epu", &P::Epu, U::Elastance, "Pulmonary vein elastance", true},
    {"Esa", &P::Esa, U::Elastance, "Systemic arterial elastance", true},
    {"Esv", &P::Esv, U::Elastance, "Systemic vein elastance", true},
    {"Evc", &P::Evc, U::Elastance, "Vena cava elastance", true},
    {"Rao", &P::Rao, U::Resistance, "Aortic resistance", true},
    {"Rra", &P::Rra, U::Resistance, "Right atrium resistance", true},
    {"Rpv", &P::Rpv, U::Resistance, "Pulmonary valve resistance", true},
    {"Rsv", &P::Rsv, U::Resistance, "Systemic venous resistance", true},
    {"Tc", &P::Tc, U::Time, "Heart rate coefficient", true},
    {"Tsys0", &P::Tsys0, U::Time, "Maximum systolic heart period", true},
    {"V0la", &P::V0la, U::Volume, "LA end diastolic volume at zero pressure", true},
    {"V0lvf", &P::V0lvf, U::Volume, "LV end diastolic volume at zero pressure", true},
    {"V0ra", &P::V0ra, U::Volume, "RA end diastolic volume at zero pressure", true},
    {"V0rvf", &P::V0rvf, U::Volume, "RV end diastolic volume at zero pressure", true},
    {"Vdla", &P::Vdla, U::Volume, "LA end systolic volume at zero pressure", true},
    {"Vdlvf", &P::Vdlvf, U::Volume, "LV end systolic volume at zero pressure", true},
    {"Vdra", &P::Vdra, U::Volume, "RA end systolic volume at zero pressure", true},
    {"Vdrvf", &P::Vdrvf, U::Volume, "RV end systolic volume at zero pressure", true},
    {"Rmt", &P::Rmt, U::Resistance, "Mitral valve resistance", true},
    {"Rav", &P::Rav, U::Resistance, "Aortic valve resistance", true},
    {"Vuao", &P::Vuao, U::Volume, "Aortic unstressed volume", true},
    {"Vupa", &P::Vupa, U::Volume, "Pulmonary arterial unstressed volume", true},
    {"Vupu", &P::Vupu, U::Volume, "Pulmonary vein unstressed volume", true},
    {"Vusa", &P::Vusa, U::Volume, "Systemic arterial unstressed volume", true},
    {"Vusv", &P::Vusv, U::Volume, "Systemic vein unstressed volume", true},
    {"Vuvc", &P::Vuvc, U::Volume, "Vena cava unstressed volume", true},
    {"P0la", &P::P0la, U::Pressure, "LA end diastolic stiffness scaling term", true},
    {"P0lvf", &P::P0lvf, U::Pressure, "LV end diastolic stiffness scaling term", true},
    {"P0ra", &P::P0ra, U::Pressure, "RA end diastolic stiffness scaling term", true},
    {"P0rvf", &P::P0rvf, U::Pressure, "RV end diastolic stiffness scaling term", true},
    {"Vtotal", &P::Vtotal, U::Volume, "Total blood volume", true},
    {"lambda_la", &P::lambda_la, U::Stiffness, "LA end diastolic stiffness coefficient", true},
    {"lambda_lvf", &P::lambda_lvf, U::Stiffness, "LV end diastolic stiffness coefficient", true},
    {"lambda_ra", &P::lambda_ra, U::Stiffness, "RA end diastolic stiffness coefficient", true},
    {"lambda_rvf", &P::lambda_rvf, U::Stiffness, "RV end diastolic stiffness coefficient", true},
    {"Lao", &P::Lao, U::Inertance, "Aortic inertance", true},
    {"Lpa", &P::Lpa, U::Inertance, "Pulmonary arterial inertance", true},
    {"Rsa", &P::Rsa, U::Resistance, "Systemic arterial resistance", false},
    {"Rpa", &P::Rpa, U::Resistance, "Pulmonary arterial resistance", false},
    {"Pthor", &P::Pthor, U::Pressure, "Intrathoracic pressure", false},
    {"Rtc", &P::Rtc, U::Resistance, "Tricuspid valve resistance", false},
    {"Rpu", &P::Rpu, U::Resistance, "Pulmonary venous resistance", false},
}};

constexpr std::size_t kPublishedCount = 43;

}  // namespace

std::span<const ParameterInfo> cvs_parameter_table() { return kTable; }

std::span<const ParameterInfo> published_parameters() {
  return std::span<const ParameterInfo>(kTable).first(kPublishedCount);
}

std::optional<ParameterInfo> find_parameter(std::string_view name) {
  auto it = std::find_if(kTable.begin(), kTable.end(),
                         [&](const ParameterInfo& p) { return p.name == name; });
  if (it == kTable.end()) return std::nullopt;
  return *it;
}

std::string_view unit_symbol(ParameterUnit unit) {
  switch (unit) {
    case U::Elastance: return "mmHg/mL";
    case U::Resistance: return "mmHg*s/mL";
    case U::Inertance: return "mmHg*s^2/mL";
    case U::Volume: return "mL";
    case U::Stiffness: return "1/mL";
    case U::Pressure: return "mmHg";
    case U::Time: return "s";
  }
  return "";
}

double CvsParameters::unstressed_volume() const {
  return Vuao + Vupa + Vupu + Vusa + Vusv + Vuvc + V0la + V0lvf + V0ra + V0rvf;
}

void CvsParameters::validate() const {
  for (const auto& info : kTable) {
    const double v = this->*info.field;
    const std::string name(info.name);
    switch (info.unit) {
      case U::Elastance:
      case U::Resistance:
      case U::Inertance:
      case U::Stiffness:
      case U::Time:
        if (!(v > 0.0)) throw std::invalid_argument("parameter " + name + " must be > 0");
        break;
      case U::Volume:
        if (!(v >= 0.0)) throw std::invalid_argument("parameter " + name + " must be >= 0");
        break;
      case U::Pressure:
        if (info.name != "Pthor" && !(v > 0.0))
          throw std::invalid_argument("parameter " + name + " must be > 0");
        break;
    }
  }
  if (!(Vtotal > unstressed_volume()))
    throw std::invalid_argument("Vtotal must exceed the sum of unstressed volumes");
  if (!(Tsys0 * Tsys0 < Tc))
    throw std::invalid_argument("Tsys0 too long for heart period Tc");
}

double& CvsParameters::operator[](std::string_view name) {
  auto info = find_parameter(name);
  if (!info) throw std::out_of_range("unknown cvs parameter: " + std::string(name));
  return this->*(info->field);
}

double CvsParameters::operator[](std::string_view name) const {
  return const_cast<CvsParameters&>(*this)[name];
}

}  // namespace lvad
