#include "turbctl/keps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "turbctl/cg.hpp"

namespace turbctl {

namespace {

// 5-point Laplacian with homogeneous Neumann data (ghost mirror): the
// missing neighbour across a wall equals the interior value.
void laplace_neumann(const GridSpec& g, const std::vector<double>& k,
                     std::vector<double>& out) {
  const int nx = g.nx, ny = g.ny;
  const double ix2 = 1.0 / (g.dx() * g.dx()), iy2 = 1.0 / (g.dy() * g.dy());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      size_t c = (size_t)j * nx + i;
      double kc = k[c];
      double kw = (i > 0) ? k[c - 1] : kc;
      double ke = (i < nx - 1) ? k[c + 1] : kc;
      double ks = (j > 0) ? k[c - nx] : kc;
      double kn = (j < ny - 1) ? k[c + nx] : kc;
      out[c] = (kw - 2 * kc + ke) * ix2 + (ks - 2 * kc + kn) * iy2;
    }
}

// donor-cell upwind divergence of the advective flux u*k (flux form;
// boundary faces carry u = 0, so their flux vanishes)
ScalarField upwind_advection(const GridSpec& g, const VelocityField& u,
                             const ScalarField& k) {
  const int nx = g.nx, ny = g.ny;
  ScalarField adv(g);
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      auto fx = [&](int fi) {
        double uf = u.x(fi, j);
        if (uf == 0.0) return 0.0;
        return uf * (uf > 0 ? k.at(fi - 1, j) : k.at(fi, j));
      };
      auto fy = [&](int fj) {
        double vf = u.y(i, fj);
        if (vf == 0.0) return 0.0;
        return vf * (vf > 0 ? k.at(i, fj - 1) : k.at(i, fj));
      };
      adv.at(i, j) = (fx(i + 1) - fx(i)) * idx + (fy(j + 1) - fy(j)) * idy;
    }
  return adv;
}

}  // namespace

std::vector<ScalarField> solve_k_equation(const GridSpec& g,
                                          const PhysParams& phys,
                                          const Trajectory& v_tilde,
                                          const std::vector<double>& phi_tilde,
                                          const ScalarField& k0) {
  phys.validate();
  if ((int)v_tilde.v.size() != g.nt + 1)
    throw Error("k-equation: velocity trajectory must have nt+1 nodes");
  if ((int)phi_tilde.size() != g.nt + 1)
    throw Error("k-equation: phi_tilde must have nt+1 samples");
  if (!ScalarField(g).same_shape(k0)) throw Error("k-equation: k0 shape mismatch");
  for (double v : k0.data)
    if (!(v >= 0.0)) throw Error("k-equation: k0 must be nonnegative");
  for (double p : phi_tilde)
    if (!(p > 0.0)) throw Error("k-equation: phi_tilde must be positive");

  const double dt = g.dt();
  // advective CFL for the explicit donor-cell term
  double speed = 0.0;
  for (const auto& vn : v_tilde.v) {
    double mx = 0.0, my = 0.0;
    for (double v : vn.ux) mx = std::max(mx, std::fabs(v));
    for (double v : vn.uy) my = std::max(my, std::fabs(v));
    speed = std::max(speed, mx / g.dx() + my / g.dy());
  }
  if (dt * speed > 1.0)
    throw Error("k-equation: advective CFL violated, dt = " +
                std::to_string(dt) + " but dt <= " + std::to_string(1.0 / speed) +
                " required");

  std::vector<ScalarField> k;
  k.reserve(g.nt + 1);
  k.push_back(k0);

  const size_t nc = k0.size();
  std::vector<double> rhs(nc), react(nc), out(nc);
  for (int n = 0; n < g.nt; ++n) {
    const ScalarField& kn = k[n];
    double phi_mid = 0.5 * (phi_tilde[n] + phi_tilde[n + 1]);
    double diff = phys.kappa + phys.c0 * phi_mid;

    ScalarField adv = upwind_advection(g, v_tilde.v[n], kn);
    ScalarField src = sym_gradient_norm2(g, v_tilde.v[n]);
    for (size_t c = 0; c < nc; ++c) {
      rhs[c] = kn.data[c] - dt * adv.data[c] +
               dt * phys.c_nu * phi_tilde[n] * src.data[c];
      react[c] = dt * kn.data[c] / phi_tilde[n];
    }

    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
      laplace_neumann(g, x, y);
      for (size_t c = 0; c < nc; ++c)
        y[c] = x[c] - dt * diff * y[c] + react[c] * x[c];
    };
    std::vector<double> x = kn.data;  // warm start
    CgResult r = conjugate_gradient(apply, rhs, x, 1e-13, 20000);
    if (!r.converged && r.rel_residual > 1e-10)
      throw Error("k-equation: diffusion solve stalled at step " +
                  std::to_string(n) + ", relative residual " +
                  std::to_string(r.rel_residual));

    ScalarField knext(g);
    double mx = 0.0;
    for (double v : x) mx = std::max(mx, std::fabs(v));
    for (size_t c = 0; c < nc; ++c) {
      if (x[c] < -1e-10 * (1.0 + mx))
        throw Error("k-equation: positivity lost at step " + std::to_string(n));
      knext.data[c] = std::max(x[c], 0.0);
    }
    k.push_back(std::move(knext));
  }
  return k;
}

std::vector<double> integrate_phi0(const std::vector<ScalarField>& k,
                                   const PhysParams& phys, const GridSpec& g) {
  phys.validate();
  if ((int)k.size() != g.nt + 1)
    throw Error("phi0: k trajectory must have nt+1 nodes");
  const double area = g.cell_area(), omega = g.domain_area();
  const int nx = g.nx, ny = g.ny;

  // per-node integrals: I1 = int |grad k|^2/(alpha_reg+k)^2, I2 = int k
  std::vector<double> I1(g.nt + 1), I2(g.nt + 1);
  for (int n = 0; n <= g.nt; ++n) {
    const ScalarField& kn = k[n];
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        // squared gradient at the center: average of the squared face
        // differences; wall faces contribute 0 (Neumann)
        auto d = [&](int i2, int j2) {
          return kn.at(i2, j2) - kn.at(i, j);
        };
        double gx2 = 0.0, gy2 = 0.0;
        double ix2 = 1.0 / (g.dx() * g.dx()), iy2 = 1.0 / (g.dy() * g.dy());
        int cnt_x = 0, cnt_y = 0;
        if (i > 0) { gx2 += d(i - 1, j) * d(i - 1, j) * ix2; ++cnt_x; }
        if (i < nx - 1) { gx2 += d(i + 1, j) * d(i + 1, j) * ix2; ++cnt_x; }
        if (j > 0) { gy2 += d(i, j - 1) * d(i, j - 1) * iy2; ++cnt_y; }
        if (j < ny - 1) { gy2 += d(i, j + 1) * d(i, j + 1) * iy2; ++cnt_y; }
        double g2 = gx2 / std::max(cnt_x, 1) + gy2 / std::max(cnt_y, 1);
        double denom = phys.alpha_reg + kn.at(i, j);
        s1 += g2 / (denom * denom);
        s2 += kn.at(i, j);
      }
    I1[n] = s1 * area;
    I2[n] = s2 * area;
  }

  auto interp = [&](const std::vector<double>& f, double t) {
    double s = std::clamp(t / g.dt(), 0.0, (double)g.nt);
    int n = std::min((int)s, g.nt - 1);
    double w = s - n;
    return (1 - w) * f[n] + w * f[n + 1];
  };
  auto rhs = [&](double t, double phi) {
    return -2.0 * phys.c0 / omega * interp(I1, t) * phi * phi +
           (phys.a - 2.0) / omega * interp(I2, t);
  };

  std::vector<double> phi0(g.nt + 1);
  phi0[0] = phys.phi00;
  const double dt = g.dt();
  for (int n = 0; n < g.nt; ++n) {
    double t = n * dt, y = phi0[n];
    double k1 = rhs(t, y);
    double k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1);
    double k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2);
    double k4 = rhs(t + dt, y + dt * k3);
    phi0[n + 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!(phi0[n + 1] > 0.0))
      throw Error("phi0: nonpositive value " + std::to_string(phi0[n + 1]) +
                  " at node " + std::to_string(n + 1) + " (model breakdown)");
  }
  return phi0;
}

DerivedConstants compute_constants(const PhysParams& phys,
                                   const ScalarField& k0, double T,
                                   const GridSpec& g) {
  phys.validate();
  const double area = g.cell_area(), omega = g.domain_area();
  double l1 = 0.0, l2sq = 0.0;
  for (double v : k0.data) {
    l1 += v * area;
    l2sq += v * v * area;
  }
  DerivedConstants c;
  c.M = 2.0 * (phys.phi00 + (phys.a - 2.0) * T * l1 / omega);
  if (phys.a > 2.0) {
    c.b1 = std::sqrt(omega / (2.0 * (phys.a - 2.0) * phys.c_nu * T));
  } else {
    c.b1 = std::numeric_limits<double>::infinity();
    c.b1_infinite = true;
  }
  double al = phys.alpha_reg;
  double eT = std::exp(T);
  double denom = phys.kappa * al * al +
                 (2.0 * phys.c0 * phys.phi00 / omega) *
                     (T * eT * l2sq + phys.c_nu * phys.c_nu * c.M * c.M * (1.0 + T * eT));
  c.beta0 = phys.kappa * al * al * phys.phi00 / denom;
  return c;
}

GMembership check_G_membership(const GridSpec& g, const Trajectory& v_tilde,
                               const std::vector<double>& phi_tilde,
                               const DerivedConstants& consts) {
  if ((int)v_tilde.v.size() != g.nt + 1 || (int)phi_tilde.size() != g.nt + 1)
    throw Error("G membership: trajectories must have nt+1 nodes");
  GMembership m;
  m.phi_min = *std::min_element(phi_tilde.begin(), phi_tilde.end());
  m.phi_max = *std::max_element(phi_tilde.begin(), phi_tilde.end());
  m.phi_in_range = m.phi_min >= consts.beta0 * (1 - 1e-12) &&
                   m.phi_max <= consts.M * (1 + 1e-12);

  const double area = g.cell_area(), dt = g.dt();
  for (int n = 0; n <= g.nt; ++n) {
    ScalarField d2 = sym_gradient_norm2(g, v_tilde.v[n]);
    double s2 = 0.0, s4 = 0.0;
    for (double v : d2.data) {
      s2 += v;
      s4 += v * v;
    }
    double tw = (n == 0 || n == g.nt) ? 0.5 : 1.0;
    m.int_d2 += tw * dt * s2 * area;
    m.int_d4 += tw * dt * s4 * area;
  }
  m.d2_bound = consts.b1_infinite ? std::numeric_limits<double>::infinity()
                                  : consts.b1 * consts.b1;
  m.d2_ok = m.int_d2 <= m.d2_bound * (1 + 1e-12);
  m.d4_ok = m.int_d4 <= 1.0 + 1e-12;
  m.member = m.phi_in_range && m.d2_ok && m.d4_ok;
  return m;
}

}  // namespace turbctl
