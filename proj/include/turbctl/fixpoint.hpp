#pragma once
// Outer nonlinear layer: Picard iteration on the advective source term
// inside the weighted control solve, and the fixed-point iteration over
// (velocity, viscosity-ratio) pairs that couples the control problem to
// the turbulence equations.

#include <string>
#include <vector>

#include "turbctl/control.hpp"
#include "turbctl/keps.hpp"

namespace turbctl {

struct FixpointParams {
  double fp_tol = 1e-6;      // combined outer residual tolerance
  double picard_tol = 1e-8;  // weighted source-increment tolerance
  int max_outer = 30;
  int max_picard = 25;
  double final_tol = 1e-3;   // required final ||v(T)|| / ||v0||
  double eps_small = 5.0;    // H1_0 smallness gate on v0
  bool nonlinear_inner = true;  // include (v.grad)v via Picard

  void validate() const;
};

// Thrown when the Picard source iteration grows for three consecutive
// iterations; carries the full residual history (the signal that the
// initial velocity violates the smallness regime).
struct PicardDivergence : Error {
  std::vector<double> residuals;
  explicit PicardDivergence(std::vector<double> r);
};

struct PicardInfo {
  std::vector<double> residuals;  // weighted ||f_n - f_{n-1}|| per iteration
  int iterations = 0;
  bool converged = false;
};

// centered-difference advective product (v . grad) v interpolated to the
// MAC faces; boundary faces are zero (no-slip)
VelocityField advective_product(const GridSpec& g, const VelocityField& v);

// Nonlinear control solve: Picard on the source f = -(v.grad)v around
// solve_null_control. prob_template supplies grid, physics, mask, weights
// and solver knobs; v0, phi0 and f are filled in here. Requires the
// H1_0 norm of v0 to be at most eps_small. With nonlinear_inner=false a
// single linear solve is performed.
// v_guess/u_warm, when given, seed the iteration: the initial source is
// built from v_guess instead of zero and the first inner solve starts
// from u_warm (used to hand a previous outer iterate back in).
ControlSolution nonlinear_control_solve(const VelocityField& v0,
                                        const std::vector<double>& phi0,
                                        const ControlProblem& prob_template,
                                        const FixpointParams& params,
                                        PicardInfo* info = nullptr,
                                        const Trajectory* v_guess = nullptr,
                                        const std::vector<VelocityField>* u_warm = nullptr);

struct MapBResult {
  ControlSolution sol;
  std::vector<ScalarField> k;  // nodes 0..nt
  std::vector<double> phi0;    // nodes 0..nt
  PicardInfo picard;
};

// One application of the composed map: k-equation driven by the current
// (v~, phi~), then the viscosity-ratio ODE, then the nonlinear control
// solve with the resulting phi0. Failures are annotated with the step
// that produced them; Picard divergence propagates unchanged.
MapBResult map_B(const Trajectory& v_tilde, const std::vector<double>& phi_tilde,
                 const VelocityField& v0, const ScalarField& k0,
                 const ControlProblem& prob_template,
                 const FixpointParams& params,
                 const std::vector<VelocityField>* u_warm = nullptr);

// Per-outer-iteration time series of the produced iterate, the raw
// material of the run's tabular output.
struct IterTimeseries {
  std::vector<double> norm_v;       // ||v(t_n)||, nodes 0..nt
  std::vector<double> norm_grad_v;  // H1_0 seminorm per node
  std::vector<double> phi0;         // nodes 0..nt
  double cost_v = 0.0, cost_u = 0.0, final_norm = 0.0;
  bool in_G = false;
};

struct FixedPointReport {
  int outer_iterations = 0;
  std::vector<IterTimeseries> timeseries;  // one entry per outer iteration
  std::vector<double> residuals;  // combined L4(0,T;V) + sup distance
  std::vector<GMembership> membership;  // of each produced iterate
  std::vector<int> picard_iterations;
  double final_ratio = 0.0;  // ||v(T)|| / ||v0||
  bool converged = false;
  bool g_exit = false;       // some iterate left G
  bool picard_diverged = false;
  std::string failure;       // non-empty on inner-solver failure
};

struct FixedPointResult {
  ControlSolution sol;
  TurbulenceState state;
  DerivedConstants consts;
  FixedPointReport report;
};

// Fixed-point iteration started from (0, phi00): repeatedly applies map_B
// until the combined residual (L4-in-time V-norm for the velocity plus
// sup-norm for the viscosity ratio) drops below fp_tol. The converged
// flag additionally requires every iterate in G and the terminal norm
// condition; Picard divergence is caught and reported, not rethrown.
FixedPointResult fixed_point_solve(const VelocityField& v0,
                                   const ScalarField& k0,
                                   const ControlProblem& prob_template,
                                   const FixpointParams& params);

}  // namespace turbctl
