#pragma once
// Turbulence side of the model: the semilinear k-equation with Neumann
// boundary data, the scalar ODE for the viscosity ratio phi0, the derived
// constants (M, b1, beta0) and membership in the candidate set G.

#include <vector>

#include "turbctl/grid.hpp"
#include "turbctl/stokes.hpp"

namespace turbctl {

struct TurbulenceState {
  std::vector<ScalarField> k;  // nodes 0..nt, k >= 0
  std::vector<double> phi0;    // nodes 0..nt
};

struct DerivedConstants {
  double M = 0.0;
  double b1 = 0.0;  // +inf when a == 2 (constraint degenerates)
  double beta0 = 0.0;
  bool b1_infinite = false;
};

// IMEX step for  k_t + v~.grad k - (kappa + c0 phi~) lap k + k^2/phi~
//               = c_nu phi~ |Dv~|^2,  dk/dn = 0:
// donor-cell upwind advection (explicit), implicit diffusion, reaction
// semi-implicit as k_old*k_new/phi~, explicit source. The step matrix is
// an M-matrix, so nonnegativity of k is preserved.
// Throws when dt violates the advective CFL bound (message carries the
// required dt).
std::vector<ScalarField> solve_k_equation(const GridSpec& g,
                                          const PhysParams& phys,
                                          const Trajectory& v_tilde,
                                          const std::vector<double>& phi_tilde,
                                          const ScalarField& k0);

// RK4 on  phi0' = -(2 c0/|O|) (int |grad k|^2/(alpha_reg+k)^2) phi0^2
//                 + ((a-2)/|O|) int k,
// with the spatial integrals sampled per node (midpoint quadrature) and
// linearly interpolated in time. Throws if phi0 <= 0 at any node.
std::vector<double> integrate_phi0(const std::vector<ScalarField>& k,
                                   const PhysParams& phys, const GridSpec& g);

DerivedConstants compute_constants(const PhysParams& phys,
                                   const ScalarField& k0, double T,
                                   const GridSpec& g);

struct GMembership {
  bool member = false;
  bool phi_in_range = false;
  bool d2_ok = false;
  bool d4_ok = false;
  double phi_min = 0.0, phi_max = 0.0;
  double int_d2 = 0.0;  // space-time integral of |Dv|^2
  double int_d4 = 0.0;  // space-time integral of |Dv|^4
  double d2_bound = 0.0;  // b1^2
};

GMembership check_G_membership(const GridSpec& g, const Trajectory& v_tilde,
                               const std::vector<double>& phi_tilde,
                               const DerivedConstants& consts);

}  // namespace turbctl
