#pragma once
// Carleman weight families: the spatial profile eta0, the time profiles
// tau and ell, the weight arrays built from them, and the empirical
// verification of the inequalities the construction relies on.

#include <cstdint>
#include <string>
#include <vector>

#include "turbctl/grid.hpp"

namespace turbctl {

struct WeightParams {
  double lambda = 1.0;   // >= find_lambda00 result
  double s = 1e-5;       // Carleman parameter
  double m0 = 4.0;       // shift making the alpha-derivative bounds hold
  // Clamp on exponents before exponentiation. Algorithms forming inner
  // products of rho~^2-weighted fields square the clamped values again, so
  // the cap must satisfy 4*exp_cap < log(DBL_MAX) ~ 709 with headroom;
  // the clamped plateau (e^{2*40} at the time endpoints) is already far
  // stiffer than any terminal penalty in use.
  double exp_cap = 40;

  void validate() const;
};

// Time profile tau: t on [0,T/4], T-t on [3T/4,T], symmetric C2 quintic
// blend in between with peak at T/2. Throws on t outside [0,T].
double eval_tau(double t, double T);
double eval_tau_t(double t, double T);
double eval_tau_tt(double t, double T);

// ell: constant T/2 on [0,T/2], T-t on [3T/4,T], monotone C1 cubic blend.
double eval_ell(double t, double T);
double eval_ell_t(double t, double T);

// eta0(x,y) = sin(pi x/Lx) sin(pi y/Ly); requires the domain center inside
// omega0 so that the unique critical point is covered.
ScalarField build_eta0(const GridSpec& g, const RegionMask& mask);

// Smallest lambda (bisection to 1e-6) with max_x N <= 2 min_x N for
// N(x) = e^{lambda(|eta0|_inf + m0 + 1)} - e^{lambda(eta0(x) + m0)}.
double find_lambda00(const ScalarField& eta0, double m0);

// Smallest power-of-two m0 whose alpha-derivative bound constants are
// stable (within a factor 2) under doubling m0.
double choose_m0(const GridSpec& g, const ScalarField& eta0, double lambda);

// All weight families evaluated at cell centers x time nodes 0..nt.
// Exponents are clamped at exp_cap before exponentiation; the time
// profiles are floored at a quarter time step so every entry is finite
// and strictly positive. Clamped entries are flagged.
struct CarlemanWeightSet {
  GridSpec grid;
  WeightParams params;
  ScalarField eta0;
  double eta0_max = 0.0;

  std::vector<double> num;  // ncells: e^{l(|eta0|+m0+1)} - e^{l(eta0+m0)}

  // floored time profiles and analytic derivatives, nt+1 nodes
  std::vector<double> tau, tau_t, tau_tt, ell, ell_t;

  // space-time arrays, (nt+1)*ncells, node-major
  std::vector<double> rho, xi;              // e^{s alpha}, via the tau profile
  std::vector<double> rho_tilde, xi_tilde;  // same with the flattened ell profile
  std::vector<double> eta_tilde;            // control-cost weight
  std::vector<uint8_t> capped;              // clamp hit at this node/cell

  // time-only arrays, nt+1 (spatial max/min reductions and the
  // energy-estimate multipliers)
  std::vector<double> rho_bar, xi_bar;
  std::vector<double> rho_star, xi_star;
  std::vector<double> rho_hat, zeta, gamma_w;
  std::vector<double> zeta_t;                     // chain rule on ell
  std::vector<uint8_t> capped_node;  // any clamp active at this node

  size_t ncells() const { return (size_t)grid.nx * grid.ny; }
  size_t idx(int n, size_t c) const { return (size_t)n * ncells() + c; }

  // evaluable alpha family (uncapped, floored profiles)
  double alpha(int n, size_t c) const { return num[c] / pow8(tau[n]); }
  double alpha_tilde(int n, size_t c) const { return num[c] / pow8(ell[n]); }
  double alpha_t(int n, size_t c) const {
    return -8.0 * tau_t[n] * num[c] / (pow8(tau[n]) * tau[n]);
  }
  double alpha_tt(int n, size_t c) const {
    double t8 = pow8(tau[n]);
    return num[c] * (72.0 * tau_t[n] * tau_t[n] / (t8 * tau[n] * tau[n]) -
                     8.0 * tau_tt[n] / (t8 * tau[n]));
  }

  static double pow8(double x) {
    double x2 = x * x, x4 = x2 * x2;
    return x4 * x4;
  }
};

CarlemanWeightSet build_weights(const WeightParams& params,
                                const ScalarField& eta0, const GridSpec& g);

struct InequalityReport {
  struct Row {
    std::string name;
    double cstar = 0.0;   // empirical constant max LHS/RHS
    size_t samples = 0;   // uncapped nodes used
    bool finite = false;
  };
  std::vector<Row> rows;
  bool all_finite = false;
  const Row& row(const std::string& name) const;
};

InequalityReport check_weight_inequalities(const CarlemanWeightSet& ws);

// Synthetic O(1)-bounded weight fields (smooth, strictly positive, no
// clamping) on the given grid. The genuine clamped weights span hundreds
// of orders of magnitude, which overflows double-precision quadratic
// forms in dense cross-checks; these stand in wherever an instance must
// be representable end-to-end (dense oracle, penalty sweeps).
CarlemanWeightSet bounded_test_weights(const GridSpec& g);

}  // namespace turbctl
