#pragma once
// Weighted extremal problem for the linear system: minimize the
// rho~/eta~-weighted cost plus a terminal penalty over omega-supported
// controls. Solved matrix-free by preconditioned CG with gradients from
// the exact discrete adjoint; a dense optimality-system oracle provides
// an independent reference on small instances.

#include <cstdint>
#include <utility>
#include <vector>

#include "turbctl/grid.hpp"
#include "turbctl/stokes.hpp"
#include "turbctl/weights.hpp"

namespace turbctl {

struct ControlProblem {
  GridSpec grid;
  PhysParams phys;
  std::vector<double> phi0;      // nt+1 nodes
  std::vector<VelocityField> f;  // node-indexed 0..nt; may be empty
  VelocityField v0;
  RegionMask mask;
  const CarlemanWeightSet* ws = nullptr;
  double eps_pen = 1e-8;  // terminal penalty weight 1/eps_pen
  double cg_tol = 1e-6;   // relative gradient norm
  int cg_maxit = 2400;
  TimeScheme scheme = TimeScheme::ImplicitEuler;

  void validate() const;
};

struct ControlSolution {
  std::vector<VelocityField> u;  // nodes 0..nt, entry 0 zero, omega-supported
  Trajectory v;
  double cost_v = 0.0;      // integral of rho~^2 |v|^2
  double cost_u = 0.0;      // integral over omega of eta~^2 |u|^2
  double final_norm = 0.0;  // ||v(T)||
  int iterations = 0;
  double rel_gradient = 0.0;
  bool converged = false;
  bool stalled = false;  // CG stopped at its rounding noise floor
};

// cell-centered weight values averaged to the MAC faces (boundary faces
// take the adjacent cell value; their velocity entries are zero anyway)
VelocityField weights_to_faces(const GridSpec& g, const double* cells);

// trapezoidal-in-time, midpoint-in-space quadrature of the two weighted
// cost integrals (rho~-weighted state, eta~-weighted control); u may be
// empty (treated as zero)
std::pair<double, double> assemble_cost(const Trajectory& v,
                                        const std::vector<VelocityField>& u,
                                        const CarlemanWeightSet& ws);

// warm_start, when given, seeds the CG iteration (nodes 1..nt are read);
// useful when re-solving after a small change of the source term
ControlSolution solve_null_control(
    const ControlProblem& prob,
    const std::vector<VelocityField>* warm_start = nullptr);

// Dense assembly of the discrete optimality system (forward constraint,
// adjoint equation, gradient stationarity), solved by LU. Rejects
// instances with more than 20000 unknowns.
ControlSolution dense_kkt_oracle(const ControlProblem& prob);

struct ContinuityReport {
  struct Row {
    double data_dist = 0.0;  // sqrt(||dv0||^2 + eta~-weighted ||df||^2)
    double sol_dist = 0.0;   // sqrt(rho~-weighted ||dv||^2 + eta~ ||du||^2)
    double ratio = 0.0;      // sol_dist / data_dist
  };
  std::vector<Row> rows;   // one per halving, largest perturbation first
  double lipschitz = 0.0;  // max ratio across the sweep
  bool monotone = false;   // sol_dist strictly decreasing
};

ContinuityReport continuity_check(const ControlProblem& prob,
                                  int n_perturbations, uint64_t seed);

struct EnergyReport {
  double lhs_energy = 0.0, rhs_energy = 0.0, cstar_energy = 0.0;
  double lhs_grad = 0.0, rhs_grad = 0.0, cstar_grad = 0.0;
  bool finite = false;
};

// empirical constants of the weighted L2 and H1 energy estimates;
// capped-weight nodes are excluded from the quadrature
EnergyReport verify_energy_estimates(const ControlProblem& prob,
                                     const ControlSolution& sol);

struct CarlemanRatioReport {
  std::vector<double> ratios;  // observability LHS/RHS, one per sample
  double max_ratio = 0.0;
  bool finite = false;
};

// Monte-Carlo check of the observability inequality: random
// (F, phi_T) adjoint solves, weighted LHS/RHS ratio distribution
CarlemanRatioReport carleman_ratio_test(const CarlemanWeightSet& ws,
                                        const PhysParams& phys,
                                        const std::vector<double>& phi0,
                                        const RegionMask& mask, int n_samples,
                                        uint64_t seed);

}  // namespace turbctl
