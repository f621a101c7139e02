#include "turbctl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace turbctl {

void WeightParams::validate() const {
  if (lambda <= 0) throw Error("weights.lambda must be > 0");
  if (s <= 0) throw Error("weights.s must be > 0");
  if (m0 <= 0) throw Error("weights.m0 must be > 0");
  if (exp_cap < 30 || exp_cap > 300)
    throw Error("weights.exp_cap must lie in [30, 300]");
}

namespace {

void check_time(double t, double T) {
  if (t < 0.0 || t > T) throw Error("time outside [0,T]");
}

// quintic blend on [0,1]: B(0)=0, B'(0)=1, B''(0)=0, B'(1)=B''(1)=0,
// B(1)=5/8; monotone increasing.
double blend(double s) {
  return s + s * s * s * (0.25 + s * (-1.375 + 0.75 * s));
}
double blend_d(double s) {
  return 1.0 + s * s * (0.75 + s * (-5.5 + 3.75 * s));
}
double blend_dd(double s) { return s * (1.5 + s * (-16.5 + 15.0 * s)); }

}  // namespace

double eval_tau(double t, double T) {
  check_time(t, T);
  double u = std::min(t, T - t);  // symmetric about T/2
  if (u <= 0.25 * T) return u;
  double sg = (u - 0.25 * T) / (0.25 * T);
  return 0.25 * T * (1.0 + blend(sg));
}

double eval_tau_t(double t, double T) {
  check_time(t, T);
  double sign = (t <= 0.5 * T) ? 1.0 : -1.0;
  double u = std::min(t, T - t);
  if (u <= 0.25 * T) return sign;
  double sg = (u - 0.25 * T) / (0.25 * T);
  return sign * blend_d(sg);
}

double eval_tau_tt(double t, double T) {
  check_time(t, T);
  double u = std::min(t, T - t);
  if (u <= 0.25 * T) return 0.0;
  double sg = (u - 0.25 * T) / (0.25 * T);
  return blend_dd(sg) * (4.0 / T);
}

double eval_ell(double t, double T) {
  check_time(t, T);
  if (t <= 0.5 * T) return 0.5 * T;
  if (t >= 0.75 * T) return T - t;
  double sg = (t - 0.5 * T) / (0.25 * T);
  // cubic Hermite: value T/2 -> T/4, slope 0 -> -1 (in t)
  double h00 = 2 * sg * sg * sg - 3 * sg * sg + 1;
  double h01 = -2 * sg * sg * sg + 3 * sg * sg;
  double h11 = sg * sg * sg - sg * sg;
  return 0.5 * T * h00 + 0.25 * T * h01 - 0.25 * T * h11;
}

double eval_ell_t(double t, double T) {
  check_time(t, T);
  if (t <= 0.5 * T) return 0.0;
  if (t >= 0.75 * T) return -1.0;
  double sg = (t - 0.5 * T) / (0.25 * T);
  return 3 * sg * sg - 4 * sg;
}

ScalarField build_eta0(const GridSpec& g, const RegionMask& mask) {
  mask.validate(g);
  if (!mask.omega0.contains(0.5 * g.Lx, 0.5 * g.Ly))
    throw Error("mask: omega0 must contain the domain center (profile "
                "gradient condition fails otherwise)");
  ScalarField eta(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      eta.at(i, j) = std::sin(M_PI * g.xc(i) / g.Lx) *
                     std::sin(M_PI * g.yc(j) / g.Ly);
  // verify |grad eta0| > 0 away from omega0 (analytic gradient)
  auto in0 = mask.omega0_cells(g);
  double gmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (in0[(size_t)j * g.nx + i]) continue;
      double x = g.xc(i), y = g.yc(j);
      double gx = (M_PI / g.Lx) * std::cos(M_PI * x / g.Lx) *
                  std::sin(M_PI * y / g.Ly);
      double gy = (M_PI / g.Ly) * std::sin(M_PI * x / g.Lx) *
                  std::cos(M_PI * y / g.Ly);
      gmin = std::min(gmin, std::hypot(gx, gy));
    }
  }
  if (!(gmin > 0.0))
    throw Error("eta0: vanishing gradient outside omega0");
  return eta;
}

namespace {

double ratio_213(const ScalarField& eta0, double m0, double lambda) {
  double emax = 0.0;
  for (double v : eta0.data) emax = std::max(emax, v);
  double nmax = 0.0, nmin = std::numeric_limits<double>::infinity();
  for (double v : eta0.data) {
    double n = std::exp(lambda * (emax + m0 + 1.0)) - std::exp(lambda * (v + m0));
    nmax = std::max(nmax, n);
    nmin = std::min(nmin, n);
  }
  return nmax / nmin;
}

}  // namespace

double find_lambda00(const ScalarField& eta0, double m0) {
  double lo = 1e-6, hi = 50.0;
  if (ratio_213(eta0, m0, lo) <= 2.0) return lo;
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    if (ratio_213(eta0, m0, mid) <= 2.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double choose_m0(const GridSpec& g, const ScalarField& eta0, double lambda) {
  // constants of |alpha_t| <= C xi^{9/8} and |alpha_tt| <= C xi^{5/4},
  // sampled on the time nodes away from the endpoints
  auto constants = [&](double m0, double& c1, double& c2) {
    double emax = 0.0;
    for (double v : eta0.data) emax = std::max(emax, v);
    c1 = c2 = 0.0;
    for (int n = 1; n < g.nt; ++n) {
      double t = n * g.dt();
      double tau = eval_tau(t, g.T), tau_t = eval_tau_t(t, g.T);
      double tau_tt = eval_tau_tt(t, g.T);
      double t8 = CarlemanWeightSet::pow8(tau);
      for (double e : eta0.data) {
        double num = std::exp(lambda * (emax + m0 + 1.0)) -
                     std::exp(lambda * (e + m0));
        double xi = std::exp(lambda * (e + m0)) / t8;
        double at = std::fabs(-8.0 * tau_t * num / (t8 * tau));
        double att = std::fabs(num * (72.0 * tau_t * tau_t / (t8 * tau * tau) -
                                      8.0 * tau_tt / (t8 * tau)));
        c1 = std::max(c1, at / std::pow(xi, 9.0 / 8.0));
        c2 = std::max(c2, att / std::pow(xi, 5.0 / 4.0));
      }
    }
  };
  double prev1, prev2;
  constants(1.0, prev1, prev2);
  for (double m0 = 1.0; m0 <= 64.0; m0 *= 2.0) {
    double c1, c2;
    constants(2.0 * m0, c1, c2);
    bool stable = c1 >= 0.5 * prev1 && c1 <= 2.0 * prev1 &&
                  c2 >= 0.5 * prev2 && c2 <= 2.0 * prev2;
    if (stable) return m0;
    prev1 = c1;
    prev2 = c2;
  }
  return 64.0;
}

CarlemanWeightSet build_weights(const WeightParams& params,
                                const ScalarField& eta0, const GridSpec& g) {
  params.validate();
  double lam00 = find_lambda00(eta0, params.m0);
  if (params.lambda < lam00)
    throw Error("weights.lambda below lambda00 = " + std::to_string(lam00));

  CarlemanWeightSet ws;
  ws.grid = g;
  ws.params = params;
  ws.eta0 = eta0;
  for (double v : eta0.data) ws.eta0_max = std::max(ws.eta0_max, v);

  const size_t nc = ws.ncells();
  const int nn = g.nt + 1;
  const double lam = params.lambda, s = params.s, m0 = params.m0;
  const double cap = params.exp_cap;
  const double floor_ = 0.25 * g.dt();

  ws.num.resize(nc);
  for (size_t c = 0; c < nc; ++c)
    ws.num[c] = std::exp(lam * (ws.eta0_max + m0 + 1.0)) -
                std::exp(lam * (eta0.data[c] + m0));
  double num_min = *std::min_element(ws.num.begin(), ws.num.end());
  double num_max = *std::max_element(ws.num.begin(), ws.num.end());

  ws.tau.resize(nn);
  ws.tau_t.resize(nn);
  ws.tau_tt.resize(nn);
  ws.ell.resize(nn);
  ws.ell_t.resize(nn);
  for (int n = 0; n < nn; ++n) {
    double t = n * g.dt();
    ws.tau[n] = std::max(eval_tau(t, g.T), floor_);
    ws.tau_t[n] = eval_tau_t(t, g.T);
    ws.tau_tt[n] = eval_tau_tt(t, g.T);
    ws.ell[n] = std::max(eval_ell(t, g.T), floor_);
    ws.ell_t[n] = eval_ell_t(t, g.T);
  }

  auto cap_exp = [&](double z, bool& hit) {
    if (z > cap) {
      hit = true;
      return cap;
    }
    return z;
  };

  ws.rho.resize((size_t)nn * nc);
  ws.xi.resize((size_t)nn * nc);
  ws.rho_tilde.resize((size_t)nn * nc);
  ws.xi_tilde.resize((size_t)nn * nc);
  ws.eta_tilde.resize((size_t)nn * nc);
  ws.capped.assign((size_t)nn * nc, 0);
  ws.rho_bar.resize(nn);
  ws.xi_bar.resize(nn);
  ws.rho_star.resize(nn);
  ws.xi_star.resize(nn);
  ws.rho_hat.resize(nn);
  ws.zeta.resize(nn);
  ws.gamma_w.resize(nn);
  ws.zeta_t.resize(nn);
  ws.capped_node.assign(nn, 0);

  for (int n = 0; n < nn; ++n) {
    double t8 = CarlemanWeightSet::pow8(ws.tau[n]);
    double l8 = CarlemanWeightSet::pow8(ws.ell[n]);
    bool node_hit = false;
    for (size_t c = 0; c < nc; ++c) {
      bool hit = false;
      double sa = s * ws.num[c] / t8;
      double sat = s * ws.num[c] / l8;
      double xv = std::exp(lam * (eta0.data[c] + m0));
      ws.rho[ws.idx(n, c)] = std::exp(cap_exp(sa, hit));
      ws.xi[ws.idx(n, c)] = xv / t8;
      ws.rho_tilde[ws.idx(n, c)] = std::exp(cap_exp(sat, hit));
      ws.xi_tilde[ws.idx(n, c)] = xv / l8;
      ws.eta_tilde[ws.idx(n, c)] =
          ws.rho_tilde[ws.idx(n, c)] / ws.xi_tilde[ws.idx(n, c)];
      if (hit) {
        ws.capped[ws.idx(n, c)] = 1;
        node_hit = true;
      }
      if (!std::isfinite(ws.rho[ws.idx(n, c)]) ||
          !std::isfinite(ws.eta_tilde[ws.idx(n, c)]))
        throw Error("weights: non-finite entry after capping");
    }
    bool hit = false;
    ws.rho_bar[n] = std::exp(cap_exp(s * num_max / t8, hit));
    ws.xi_bar[n] = std::exp(lam * (ws.eta0_max + m0)) / t8;
    ws.rho_star[n] = std::exp(cap_exp(s * num_max / l8, hit));
    ws.xi_star[n] = std::exp(lam * (ws.eta0_max + m0)) / l8;
    ws.rho_hat[n] = std::exp(cap_exp(s * num_min / l8, hit));
    double l = ws.ell[n];
    double l11 = l8 * l * l * l;
    ws.zeta[n] = ws.rho_hat[n] * l11 * l;
    ws.gamma_w[n] = ws.rho_hat[n] * l11 * l * std::pow(l, 4.5);
    // zeta_t via chain rule: d/dt [e^{s num_min / l^8} l^12]
    double dmin_alpha = -8.0 * ws.ell_t[n] * num_min / (l8 * l);
    ws.zeta_t[n] =
        ws.rho_hat[n] * (s * dmin_alpha * l11 * l + 12.0 * l11 * ws.ell_t[n]);
    if (hit || node_hit) ws.capped_node[n] = 1;
  }
  return ws;
}

const InequalityReport::Row& InequalityReport::row(
    const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw Error("inequality report: no row named " + name);
}

InequalityReport check_weight_inequalities(const CarlemanWeightSet& ws) {
  InequalityReport rep;
  const GridSpec& g = ws.grid;
  const size_t nc = ws.ncells();

  // profile spread: max num <= 2 min num (what find_lambda00 enforces)
  {
    double nmax = *std::max_element(ws.num.begin(), ws.num.end());
    double nmin = *std::min_element(ws.num.begin(), ws.num.end());
    rep.rows.push_back({"alpha0_max_min_ratio", nmax / nmin, nc,
                        std::isfinite(nmax / nmin) && nmax <= 2.0 * nmin});
  }

  auto maxratio = [&](auto&& lhs, auto&& rhs, const std::string& name) {
    double cstar = 0.0;
    size_t used = 0;
    for (int n = 0; n <= g.nt; ++n) {
      for (size_t c = 0; c < nc; ++c) {
        if (ws.capped[ws.idx(n, c)] || ws.capped_node[n]) continue;
        double r = lhs(n, c) / rhs(n, c);
        if (std::isfinite(r)) {
          cstar = std::max(cstar, r);
          ++used;
        }
      }
    }
    rep.rows.push_back({name, cstar, used, used > 0 && std::isfinite(cstar)});
  };

  maxratio([&](int n, size_t c) { return std::fabs(ws.alpha_t(n, c)); },
           [&](int n, size_t c) {
             return std::pow(ws.xi[ws.idx(n, c)], 9.0 / 8.0);
           },
           "alpha_t_vs_xi98");
  maxratio([&](int n, size_t c) { return std::fabs(ws.alpha_tt(n, c)); },
           [&](int n, size_t c) {
             return std::pow(ws.xi[ws.idx(n, c)], 5.0 / 4.0);
           },
           "alpha_tt_vs_xi54");
  maxratio([&](int n, size_t) { return ws.zeta[n]; },
           [&](int n, size_t c) { return ws.eta_tilde[ws.idx(n, c)]; },
           "zeta_le_eta");
  maxratio(
      [&](int n, size_t) { return std::fabs(ws.zeta[n] * ws.zeta_t[n]); },
      [&](int n, size_t) { return ws.rho_hat[n] * ws.rho_hat[n]; },
      "zeta_zetat_le_rho2");
  maxratio([&](int n, size_t c) {
             double e = ws.eta_tilde[ws.idx(n, c)];
             return e * e;
           },
           [&](int n, size_t) {
             double gm = ws.gamma_w[n];
             return ws.zeta[n] * gm * gm * gm;
           },
           "eta2_le_zeta_gamma3");
  maxratio([&](int n, size_t) { return ws.zeta[n]; },
           [&](int n, size_t) {
             double gm = ws.gamma_w[n];
             return gm * gm * gm;
           },
           "zeta_gamma3_le_gamma6");

  rep.all_finite = true;
  for (const auto& r : rep.rows) rep.all_finite = rep.all_finite && r.finite;
  return rep;
}

CarlemanWeightSet bounded_test_weights(const GridSpec& g) {
  CarlemanWeightSet ws;
  ws.grid = g;
  const size_t nc = (size_t)g.nx * g.ny;
  ws.rho_tilde.resize((size_t)(g.nt + 1) * nc);
  ws.eta_tilde.resize((size_t)(g.nt + 1) * nc);
  ws.capped_node.assign((size_t)g.nt + 1, 0);
  for (int n = 0; n <= g.nt; ++n) {
    double t = g.T * n / g.nt;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double x = (i + 0.5) * g.Lx / g.nx, y = (j + 0.5) * g.Ly / g.ny;
        size_t c = (size_t)n * nc + (size_t)j * g.nx + i;
        ws.rho_tilde[c] = 1.0 + 0.4 * std::sin(2 * x) * std::cos(3 * y) +
                          0.3 * std::cos(t);
        ws.eta_tilde[c] = 1.0 + 0.3 * std::cos(x + y) * std::sin(1 + t);
      }
  }
  return ws;
}

}  // namespace turbctl
