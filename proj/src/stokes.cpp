#include "turbctl/stokes.hpp"

#include <cmath>

#include "turbctl/kernels.hpp"

namespace turbctl {

namespace k = kernels;

void PhysParams::validate() const {
  if (nu <= 0 || c_nu <= 0 || kappa <= 0 || c0 <= 0 || phi00 <= 0 ||
      alpha_reg <= 0)
    throw Error("physics: nu, c_nu, kappa, c0, phi00, alpha_reg must be > 0");
  if (a < 2.0) throw Error("physics.a must be >= 2");
}

namespace {

struct VfCgResult {
  int iterations = 0;
  double rel_residual = 1.0;
  bool converged = false;
};

// CG on MAC velocity fields; boundary faces stay pinned at zero because
// the operator and rhs both vanish there.
template <typename Apply>
VfCgResult cg_field(const Apply& apply, const VelocityField& b,
                    VelocityField& x, double rel_tol, int max_iter) {
  auto fdot = [](const VelocityField& a, const VelocityField& c) {
    return k::dot(a.ux.data(), c.ux.data(), a.ux.size()) +
           k::dot(a.uy.data(), c.uy.data(), a.uy.size());
  };
  VelocityField r = b, p(b.nx, b.ny), Ap(b.nx, b.ny);
  apply(x, Ap);
  axpy(-1.0, Ap, r);
  p = r;
  double bn = std::sqrt(fdot(b, b));
  if (bn == 0.0) bn = 1.0;
  double rr = fdot(r, r);
  VfCgResult res;
  res.rel_residual = std::sqrt(rr) / bn;
  if (res.rel_residual <= rel_tol) {
    res.converged = true;
    return res;
  }
  for (int it = 0; it < max_iter; ++it) {
    apply(p, Ap);
    double alpha = rr / fdot(p, Ap);
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    double rr_new = fdot(r, r);
    res.iterations = it + 1;
    res.rel_residual = std::sqrt(rr_new) / bn;
    if (res.rel_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    double beta = rr_new / rr;
    k::xpby(r.ux.data(), beta, p.ux.data(), p.ux.size());
    k::xpby(r.uy.data(), beta, p.uy.data(), p.uy.size());
    rr = rr_new;
  }
  return res;
}

}  // namespace

StokesStepper::StokesStepper(const GridSpec& g, const PhysParams& phys,
                             std::vector<double> phi0, StokesOptions opt)
    : grid_(g), opt_(opt) {
  phys.validate();
  if ((int)phi0.size() != g.nt + 1)
    throw Error("stokes: phi0 must have nt+1 samples");
  mu_.resize(g.nt);
  for (int n = 0; n < g.nt; ++n) {
    double phi_mid = 0.5 * (phi0[n] + phi0[n + 1]);
    if (phi_mid < 0) throw Error("stokes: Phi0 must be nonnegative");
    mu_[n] = phys.nu + phys.c_nu * phi_mid;
  }
}

VelocityField StokesStepper::helmholtz_solve(double coef,
                                             const VelocityField& rhs) const {
  auto apply = [&](const VelocityField& in, VelocityField& out) {
    out = vector_laplacian(grid_, in);
    scale(-coef, out);
    axpy(1.0, in, out);
  };
  VelocityField x(grid_);
  VfCgResult r = cg_field(apply, rhs, x, opt_.lin_tol, opt_.lin_maxit);
  if (!r.converged && r.rel_residual > 1e-9)
    throw Error("stokes: Helmholtz CG stalled, relative residual " +
                std::to_string(r.rel_residual) + " after " +
                std::to_string(r.iterations) + " iterations");
  return x;
}

VelocityField StokesStepper::step(int n, const VelocityField& vn,
                                  const VelocityField* b,
                                  ScalarField* pressure) const {
  const double dt = grid_.dt();
  VelocityField rhs = vn;
  if (b) axpy(dt, *b, rhs);
  if (opt_.scheme == TimeScheme::CrankNicolson) {
    VelocityField lap = vector_laplacian(grid_, vn);
    axpy(0.5 * dt * mu_[n], lap, rhs);
  }
  rhs.zero_boundary_faces();
  double coef = (opt_.scheme == TimeScheme::CrankNicolson) ? 0.5 * dt * mu_[n]
                                                           : dt * mu_[n];
  VelocityField vstar = helmholtz_solve(coef, rhs);
  ProjectionResult proj = project_divergence_free(grid_, vstar, opt_.lin_tol);
  if (pressure) {
    *pressure = proj.p;
    scale(1.0 / dt, *pressure);
  }
  return std::move(proj.v);
}

VelocityField StokesStepper::step_transpose(int n, const VelocityField& w,
                                            ScalarField* pressure,
                                            VelocityField* source_w) const {
  const double dt = grid_.dt();
  ProjectionResult proj = project_divergence_free(grid_, w, opt_.lin_tol);
  if (pressure) {
    *pressure = proj.p;
    scale(1.0 / dt, *pressure);
  }
  double coef = (opt_.scheme == TimeScheme::CrankNicolson) ? 0.5 * dt * mu_[n]
                                                           : dt * mu_[n];
  VelocityField z = helmholtz_solve(coef, proj.v);
  if (source_w) *source_w = z;
  if (opt_.scheme == TimeScheme::CrankNicolson) {
    VelocityField lap = vector_laplacian(grid_, z);
    axpy(0.5 * dt * mu_[n], lap, z);
  }
  return z;
}

VelocityField StokesStepper::source_transpose(int n,
                                              const VelocityField& w) const {
  const double dt = grid_.dt();
  ProjectionResult proj = project_divergence_free(grid_, w, opt_.lin_tol);
  double coef = (opt_.scheme == TimeScheme::CrankNicolson) ? 0.5 * dt * mu_[n]
                                                           : dt * mu_[n];
  return helmholtz_solve(coef, proj.v);
}

namespace {

void apply_face_masks(VelocityField& u, const std::vector<uint8_t>& mx,
                      const std::vector<uint8_t>& my) {
  for (size_t i = 0; i < u.ux.size(); ++i)
    if (!mx[i]) u.ux[i] = 0.0;
  for (size_t i = 0; i < u.uy.size(); ++i)
    if (!my[i]) u.uy[i] = 0.0;
}

}  // namespace

Trajectory solve_forward(const GridSpec& g, const PhysParams& phys,
                         const std::vector<double>& phi0,
                         const std::vector<VelocityField>& control,
                         const RegionMask* mask,
                         const std::vector<VelocityField>& forcing,
                         const VelocityField& v0, StokesOptions opt) {
  if (!v0.all_finite()) throw Error("solve_forward: v0 not finite");
  {
    double dv = max_abs(divergence(g, v0));
    if (dv > 1e-8 * (1.0 + max_abs(v0)))
      throw Error("solve_forward: v0 is not solenoidal (max |div| = " +
                  std::to_string(dv) + ")");
  }
  if (!control.empty() && (int)control.size() != g.nt + 1)
    throw Error("solve_forward: control must be node-indexed 0..nt");
  if (!forcing.empty() && (int)forcing.size() != g.nt + 1)
    throw Error("solve_forward: forcing must be node-indexed 0..nt");

  std::vector<uint8_t> mx, my;
  if (mask) {
    mx = mask->omega_faces_x(g);
    my = mask->omega_faces_y(g);
  }

  StokesStepper stepper(g, phys, phi0, opt);
  Trajectory traj;
  traj.grid = g;
  traj.produced_by = "solve_forward";
  traj.v.reserve(g.nt + 1);
  traj.p.assign(g.nt + 1, ScalarField(g));
  traj.v.push_back(v0);

  for (int n = 0; n < g.nt; ++n) {
    VelocityField b(g);
    bool has_b = false;
    if (!control.empty()) {
      VelocityField u = control[n + 1];
      if (mask) apply_face_masks(u, mx, my);
      axpy(1.0, u, b);
      has_b = true;
    }
    if (!forcing.empty()) {
      axpy(1.0, forcing[n + 1], b);
      has_b = true;
    }
    ScalarField pr(g);
    traj.v.push_back(stepper.step(n, traj.v[n], has_b ? &b : nullptr, &pr));
    traj.p[n + 1] = std::move(pr);
    double dv = max_abs(divergence(g, traj.v[n + 1]));
    // projection error scales with the pre-projection field, which the
    // source term can dominate even when the output nearly cancels
    double scale_in =
        max_abs(traj.v[n]) + (has_b ? g.dt() * max_abs(b) : 0.0);
    if (dv > opt.div_tol * (1.0 + max_abs(traj.v[n + 1]) + scale_in))
      throw Error("solve_forward: step " + std::to_string(n + 1) +
                  " divergence " + std::to_string(dv) + " above tolerance");
  }
  return traj;
}

Trajectory solve_adjoint(const GridSpec& g, const PhysParams& phys,
                         const std::vector<double>& phi0,
                         const std::vector<VelocityField>& F,
                         const VelocityField& phiT, StokesOptions opt) {
  if (!phiT.all_finite()) throw Error("solve_adjoint: phiT not finite");
  if (!F.empty() && (int)F.size() != g.nt + 1)
    throw Error("solve_adjoint: forcing must be node-indexed 0..nt");
  StokesStepper stepper(g, phys, phi0, opt);
  Trajectory traj;
  traj.grid = g;
  traj.produced_by = "solve_adjoint";
  traj.v.assign(g.nt + 1, VelocityField(g));
  traj.p.assign(g.nt + 1, ScalarField(g));
  traj.v[g.nt] = phiT;
  const double dt = g.dt();
  for (int n = g.nt - 1; n >= 0; --n) {
    VelocityField w = traj.v[n + 1];
    if (!F.empty()) axpy(dt, F[n], w);
    ScalarField pr(g);
    traj.v[n] = stepper.step_transpose(n, w, &pr);
    traj.p[n] = std::move(pr);
  }
  return traj;
}

}  // namespace turbctl
