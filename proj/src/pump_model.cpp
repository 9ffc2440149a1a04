#include "lvad/pump_model.hpp"

#include <stdexcept>

namespace lvad {

void PumpParameters::validate() const {
  if (!(a2 > 0.0)) throw std::invalid_argument("pump.a2 must be > 0");
  if (!(a1 >= 0.0) || !(a0 >= 0.0)) throw std::invalid_argument("pump.a1 and pump.a0 must be >= 0");
  if (!(Rin > 0.0 && Rout > 0.0)) throw std::invalid_argument("pump cannula resistances must be > 0");
  if (!(Lin > 0.0 && Lout > 0.0)) throw std::invalid_argument("pump cannula inertances must be > 0");
  if (!(Rlsuc_gain >= 0.0)) throw std::invalid_argument("pump.Rlsuc_gain must be >= 0");
  if (!(speed_min < speed_max)) throw std::invalid_argument("pump.speed_min must be < pump.speed_max");
}

}  // namespace lvad
