#pragma once
// Time steppers for the linearized velocity system with time-varying
// viscosity mu(t) = nu + c_nu*Phi0(t), and its exact discrete adjoint.
// One forward step is v_{n+1} = P H_n^{-1} (v_n + dt*b) with
// H_n = I - dt*mu*Laplacian (implicit Euler) and P the Leray projector;
// the adjoint solver applies the transposed step maps, so forward/adjoint
// satisfy the discrete duality identity to solver tolerance.

#include <optional>
#include <string>
#include <vector>

#include "turbctl/grid.hpp"

namespace turbctl {

struct PhysParams {
  double nu = 3e-3;
  double c_nu = 0.025;
  double kappa = 1e-2;
  double c0 = 0.05;
  double a = 3.0;
  double phi00 = 0.1;
  double alpha_reg = 1e-3;

  void validate() const;
};

enum class TimeScheme { ImplicitEuler, CrankNicolson };

struct StokesOptions {
  TimeScheme scheme = TimeScheme::ImplicitEuler;
  double lin_tol = 1e-12;
  int lin_maxit = 100000;
  double div_tol = kDivTol;
};

struct Trajectory {
  GridSpec grid;
  std::vector<VelocityField> v;  // nodes 0..nt
  std::vector<ScalarField> p;    // nodes 0..nt, mean-free; p[0] = 0
  std::string produced_by;

  const VelocityField& final() const { return v.back(); }
};

class StokesStepper {
 public:
  // phi0 sampled at the nt+1 time nodes; mu taken at step midpoints
  StokesStepper(const GridSpec& g, const PhysParams& phys,
                std::vector<double> phi0, StokesOptions opt = {});

  const GridSpec& grid() const { return grid_; }
  double mu(int step) const { return mu_[step]; }

  // node n -> n+1; b is the momentum source at the new node (may be null)
  VelocityField step(int n, const VelocityField& vn, const VelocityField* b,
                     ScalarField* pressure = nullptr) const;
  // transpose of the linear step map v_n -> v_{n+1}; source_w, when
  // given, receives the intermediate H^{-1} P w (see source_transpose)
  VelocityField step_transpose(int n, const VelocityField& w,
                               ScalarField* pressure = nullptr,
                               VelocityField* source_w = nullptr) const;
  // transpose of the source injection dt*b -> v_{n+1} (without the dt
  // factor): H^{-1} P w. Coincides with step_transpose for implicit
  // Euler; Crank-Nicolson steps pair their source with this instead.
  VelocityField source_transpose(int n, const VelocityField& w) const;

 private:
  VelocityField helmholtz_solve(double coef, const VelocityField& rhs) const;

  GridSpec grid_;
  StokesOptions opt_;
  std::vector<double> mu_;  // nt entries
};

// Solves the controlled forward system. control/forcing are node-indexed
// (0..nt, entry 0 unused); either may be empty. The control is restricted
// to omega through the face masks of `mask` when given.
Trajectory solve_forward(const GridSpec& g, const PhysParams& phys,
                         const std::vector<double>& phi0,
                         const std::vector<VelocityField>& control,
                         const RegionMask* mask,
                         const std::vector<VelocityField>& forcing,
                         const VelocityField& v0, StokesOptions opt = {});

// Backward-in-time adjoint with terminal value phiT and forcing F
// (node-indexed 0..nt; F may be empty). Exact transpose of the forward
// step maps; the PDE adjoint is recovered in the refinement limit.
Trajectory solve_adjoint(const GridSpec& g, const PhysParams& phys,
                         const std::vector<double>& phi0,
                         const std::vector<VelocityField>& F,
                         const VelocityField& phiT, StokesOptions opt = {});

}  // namespace turbctl
