#include <sstream>

#include "fibscale/geometry.hpp"
#include "fibscale/types.hpp"

namespace fibscale {

std::string PrecisionProfile::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "escape_radius=" << escape_radius << "\nmax_iter=" << max_iter
     << "\nfar_potential=" << far_potential << "\nsteps_per_halving=" << steps_per_halving
     << "\nnewton_cap=" << newton_cap << "\nstall_subdivision_cap=" << stall_subdivision_cap
     << "\nray_tol=" << ray_tol << "\nlift_ambiguity_ratio=" << lift_ambiguity_ratio
     << "\nlift_subdivision_cap=" << lift_subdivision_cap
     << "\nresample_divisor=" << resample_divisor
     << "\nguaranteed_divisor=" << guaranteed_divisor
     << "\nequipotential_samples=" << equipotential_samples
     << "\nmin_equip_level_factor=" << min_equip_level_factor
     << "\ngrid_coarse=" << grid_coarse << "\ngrid_fine=" << grid_fine
     << "\ncg_tol=" << cg_tol << "\ncg_max_iter=" << cg_max_iter
     << "\nlanding_newton_cap=" << landing_newton_cap << "\nlanding_tol=" << landing_tol
     << "\n";
  return os.str();
}

uint64_t PrecisionProfile::hash() const { return fnv1a(describe()); }

}  // namespace fibscale
