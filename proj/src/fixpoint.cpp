#include "turbctl/fixpoint.hpp"

#include <algorithm>
#include <cmath>

#include "turbctl/kernels.hpp"

namespace turbctl {

namespace k = kernels;

void FixpointParams::validate() const {
  if (!(fp_tol > 0) || !(picard_tol > 0) || !(final_tol > 0) ||
      !(eps_small > 0))
    throw Error("fixpoint: tolerances and eps_small must be > 0");
  if (max_outer < 1 || max_picard < 1)
    throw Error("fixpoint: max_outer and max_picard must be >= 1");
}

PicardDivergence::PicardDivergence(std::vector<double> r)
    : Error("picard: source iteration diverged (weighted residual grew for "
            "3 consecutive iterations after " +
            std::to_string(r.size()) +
            " iterations); the initial velocity is outside the smallness "
            "regime"),
      residuals(std::move(r)) {}

VelocityField advective_product(const GridSpec& g, const VelocityField& v) {
  VelocityField out(g);
  const double dx = g.dx(), dy = g.dy();
  // x-faces: u du/dx + v du/dy with v averaged from the four surrounding
  // y-faces; no-slip ghost values mirror the tangential component
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      double uc = v.x(i, j);
      double dudx = (v.x(i + 1, j) - v.x(i - 1, j)) / (2 * dx);
      double up = (j + 1 < g.ny) ? v.x(i, j + 1) : -v.x(i, j);
      double um = (j - 1 >= 0) ? v.x(i, j - 1) : -v.x(i, j);
      double dudy = (up - um) / (2 * dy);
      double vbar = 0.25 * (v.y(i - 1, j) + v.y(i, j) + v.y(i - 1, j + 1) +
                            v.y(i, j + 1));
      out.x(i, j) = uc * dudx + vbar * dudy;
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double vc = v.y(i, j);
      double dvdy = (v.y(i, j + 1) - v.y(i, j - 1)) / (2 * dy);
      double vp = (i + 1 < g.nx) ? v.y(i + 1, j) : -v.y(i, j);
      double vm = (i - 1 >= 0) ? v.y(i - 1, j) : -v.y(i, j);
      double dvdx = (vp - vm) / (2 * dx);
      double ubar = 0.25 * (v.x(i, j - 1) + v.x(i + 1, j - 1) + v.x(i, j) +
                            v.x(i + 1, j));
      out.y(i, j) = ubar * dvdx + vc * dvdy;
    }
  return out;
}

namespace {

// eta~^2 averaged to faces, one field per time node
std::vector<VelocityField> control_weight_faces(const CarlemanWeightSet& ws) {
  const GridSpec& g = ws.grid;
  const size_t nc = (size_t)g.nx * g.ny;
  std::vector<double> sq(nc);
  std::vector<VelocityField> out;
  out.reserve(g.nt + 1);
  for (int n = 0; n <= g.nt; ++n) {
    for (size_t c = 0; c < nc; ++c) {
      double e = ws.eta_tilde[(size_t)n * nc + c];
      sq[c] = e * e;
    }
    out.push_back(weights_to_faces(g, sq.data()));
  }
  return out;
}

double weighted_stack_norm(const GridSpec& g,
                           const std::vector<VelocityField>& wu,
                           const std::vector<VelocityField>& a,
                           const std::vector<VelocityField>& b) {
  const double dt = g.dt(), area = g.cell_area();
  double s = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    double tw = (n == 0 || n == g.nt) ? 0.5 : 1.0;
    double acc = 0.0;
    for (size_t i = 0; i < a[n].ux.size(); ++i) {
      double d = a[n].ux[i] - b[n].ux[i];
      acc += wu[n].ux[i] * d * d;
    }
    for (size_t i = 0; i < a[n].uy.size(); ++i) {
      double d = a[n].uy[i] - b[n].uy[i];
      acc += wu[n].uy[i] * d * d;
    }
    s += tw * dt * area * acc;
  }
  return std::sqrt(s);
}

}  // namespace

ControlSolution nonlinear_control_solve(const VelocityField& v0,
                                        const std::vector<double>& phi0,
                                        const ControlProblem& prob_template,
                                        const FixpointParams& params,
                                        PicardInfo* info,
                                        const Trajectory* v_guess,
                                        const std::vector<VelocityField>* u_warm) {
  params.validate();
  const GridSpec& g = prob_template.grid;
  double h1 = std::sqrt(h10_sq(g, v0));
  if (h1 > params.eps_small)
    throw Error("nonlinear_control_solve: ||v0||_H1 = " + std::to_string(h1) +
                " exceeds the smallness gate eps_small = " +
                std::to_string(params.eps_small));

  ControlProblem prob = prob_template;
  prob.v0 = v0;
  prob.phi0 = phi0;
  prob.f.clear();

  std::vector<VelocityField> f_init((size_t)g.nt + 1, VelocityField(g));
  if (params.nonlinear_inner && v_guess) {
    for (int n = 0; n <= g.nt; ++n) {
      f_init[n] = advective_product(g, v_guess->v[n]);
      scale(-1.0, f_init[n]);
    }
    prob.f = f_init;
  }

  ControlSolution sol = solve_null_control(prob, u_warm);
  PicardInfo pi;
  if (params.nonlinear_inner) {
    std::vector<VelocityField> wu = control_weight_faces(*prob.ws);
    std::vector<VelocityField> f_prev = std::move(f_init);
    int growth_streak = 0;
    double prev_res = 0.0;
    for (int it = 1; it <= params.max_picard; ++it) {
      std::vector<VelocityField> f_new;
      f_new.reserve(g.nt + 1);
      for (int n = 0; n <= g.nt; ++n) {
        VelocityField adv = advective_product(g, sol.v.v[n]);
        scale(-1.0, adv);
        f_new.push_back(std::move(adv));
      }
      double res = weighted_stack_norm(g, wu, f_new, f_prev);
      pi.residuals.push_back(res);
      pi.iterations = it;
      // the weighted scale is set by the clamped endpoint weights, so the
      // tolerance is taken relative to the first increment
      double gate = params.picard_tol * std::max(1.0, pi.residuals.front());
      if (res <= gate) {
        pi.converged = true;
        break;
      }
      // noise-floor exit: once well below the first increment, stop when
      // four iterations fail to improve by 15% (the re-solves are only
      // reshuffling inner-solver noise at that point)
      if (it > 4 && res < 0.1 * pi.residuals.front() &&
          res > 0.85 * pi.residuals[it - 4]) {
        pi.converged = true;
        break;
      }
      // genuine divergence: sustained growth above the first increment
      // (small flutter at the inner-solver noise floor is not divergence)
      growth_streak =
          (it > 1 && res > 1.5 * prev_res && res >= pi.residuals.front())
              ? growth_streak + 1
              : 0;
      prev_res = res;
      if (growth_streak >= 3) throw PicardDivergence(pi.residuals);
      prob.f = f_new;
      f_prev = std::move(f_new);
      // re-solves start from the previous optimum and only track the small
      // source update, so they get a reduced iteration budget; progress
      // still accumulates across the warm-start chain
      prob.cg_maxit = std::max(prob_template.cg_maxit / 4, 50);
      sol = solve_null_control(prob, &sol.u);
    }
  } else {
    pi.iterations = 1;
    pi.converged = true;
  }
  if (info) *info = std::move(pi);
  return sol;
}

MapBResult map_B(const Trajectory& v_tilde, const std::vector<double>& phi_tilde,
                 const VelocityField& v0, const ScalarField& k0,
                 const ControlProblem& prob_template,
                 const FixpointParams& params,
                 const std::vector<VelocityField>* u_warm) {
  const GridSpec& g = prob_template.grid;
  MapBResult r;
  try {
    r.k = solve_k_equation(g, prob_template.phys, v_tilde, phi_tilde, k0);
  } catch (const Error& e) {
    throw Error(std::string("map_B[k_equation]: ") + e.what());
  }
  try {
    r.phi0 = integrate_phi0(r.k, prob_template.phys, g);
  } catch (const Error& e) {
    throw Error(std::string("map_B[phi0_ode]: ") + e.what());
  }
  try {
    r.sol = nonlinear_control_solve(v0, r.phi0, prob_template, params,
                                    &r.picard, u_warm ? &v_tilde : nullptr,
                                    u_warm);
  } catch (const PicardDivergence&) {
    throw;  // self-identifying; callers detect the smallness violation
  } catch (const Error& e) {
    throw Error(std::string("map_B[control]: ") + e.what());
  }
  return r;
}

namespace {

double l4_v_distance(const GridSpec& g, const Trajectory& a,
                     const Trajectory& b) {
  const double dt = g.dt();
  double s = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    double tw = (n == 0 || n == g.nt) ? 0.5 : 1.0;
    VelocityField d = a.v[n];
    axpy(-1.0, b.v[n], d);
    double h1 = h10_sq(g, d);
    s += tw * dt * h1 * h1;
  }
  return std::pow(s, 0.25);
}

}  // namespace

FixedPointResult fixed_point_solve(const VelocityField& v0,
                                   const ScalarField& k0,
                                   const ControlProblem& prob_template,
                                   const FixpointParams& params) {
  params.validate();
  const GridSpec& g = prob_template.grid;
  for (double x : k0.data)
    if (x < 0) throw Error("fixed_point_solve: k0 must be nonnegative");

  FixedPointResult out;
  out.consts =
      compute_constants(prob_template.phys, k0, g.T, g);

  Trajectory vt;
  vt.grid = g;
  vt.v.assign((size_t)g.nt + 1, VelocityField(g));
  vt.p.assign((size_t)g.nt + 1, ScalarField(g));
  std::vector<double> phit((size_t)g.nt + 1, prob_template.phys.phi00);

  FixedPointReport& rep = out.report;
  std::vector<VelocityField> u_prev;
  for (int it = 1; it <= params.max_outer; ++it) {
    MapBResult r;
    try {
      r = map_B(vt, phit, v0, k0, prob_template, params,
                u_prev.empty() ? nullptr : &u_prev);
    } catch (const PicardDivergence& e) {
      rep.picard_diverged = true;
      rep.failure = e.what();
      break;
    } catch (const Error& e) {
      rep.failure = e.what();
      break;
    }
    double res = l4_v_distance(g, r.sol.v, vt);
    double sup = 0.0;
    for (int n = 0; n <= g.nt; ++n)
      sup = std::max(sup, std::abs(r.phi0[n] - phit[n]));
    res += sup;

    rep.outer_iterations = it;
    rep.residuals.push_back(res);
    rep.picard_iterations.push_back(r.picard.iterations);
    GMembership gm = check_G_membership(g, r.sol.v, r.phi0, out.consts);
    rep.membership.push_back(gm);
    if (!gm.member) rep.g_exit = true;
    bool stop = !gm.member;  // outside G the iteration cannot converge

    IterTimeseries ts;
    ts.norm_v.reserve(g.nt + 1);
    ts.norm_grad_v.reserve(g.nt + 1);
    for (int n = 0; n <= g.nt; ++n) {
      ts.norm_v.push_back(norm(g, r.sol.v.v[n]));
      ts.norm_grad_v.push_back(std::sqrt(h10_sq(g, r.sol.v.v[n])));
    }
    ts.phi0 = r.phi0;
    ts.cost_v = r.sol.cost_v;
    ts.cost_u = r.sol.cost_u;
    ts.final_norm = r.sol.final_norm;
    ts.in_G = gm.member;
    rep.timeseries.push_back(std::move(ts));

    vt = r.sol.v;
    phit = r.phi0;
    u_prev = r.sol.u;
    out.sol = std::move(r.sol);
    out.state.k = std::move(r.k);
    out.state.phi0 = phit;
    if (stop || res <= params.fp_tol) break;
  }

  double nv0 = norm(g, v0);
  rep.final_ratio = nv0 > 0 ? out.sol.final_norm / nv0 : 0.0;
  rep.converged = !rep.residuals.empty() &&
                  rep.residuals.back() <= params.fp_tol && !rep.g_exit &&
                  rep.failure.empty() &&
                  (nv0 == 0.0 || rep.final_ratio <= params.final_tol);
  return out;
}

}  // namespace turbctl
