#include "turbctl/grid.hpp"

#include <cmath>
#include <numeric>

#include "turbctl/cg.hpp"
#include "turbctl/kernels.hpp"

namespace turbctl {

namespace k = kernels;

void GridSpec::validate() const {
  if (nx < 6 || ny < 6) throw Error("grid: nx,ny must be >= 6");
  if (nt < 8) throw Error("grid: nt must be >= 8");
  if (Lx <= 0 || Ly <= 0 || T <= 0) throw Error("grid: Lx,Ly,T must be > 0");
}

void VelocityField::zero_boundary_faces() {
  for (int j = 0; j < ny; ++j) x(0, j) = x(nx, j) = 0.0;
  for (int i = 0; i < nx; ++i) y(i, 0) = y(i, ny) = 0.0;
}

bool VelocityField::all_finite() const {
  for (double v : ux)
    if (!std::isfinite(v)) return false;
  for (double v : uy)
    if (!std::isfinite(v)) return false;
  return true;
}

void RegionMask::validate(const GridSpec& g) const {
  const Rect domain{0.0, g.Lx, 0.0, g.Ly};
  if (!omega.nonempty() || !omega0.nonempty())
    throw Error("mask: omega and omega0 must be nonempty");
  if (!omega.strictly_inside(domain))
    throw Error("mask: omega must be strictly inside the domain");
  if (!omega0.strictly_inside(omega))
    throw Error("mask: omega0 must be strictly inside omega");
}

static std::vector<uint8_t> cells_in(const GridSpec& g, const Rect& r) {
  std::vector<uint8_t> m((size_t)g.nx * g.ny, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      m[(size_t)j * g.nx + i] = r.contains(g.xc(i), g.yc(j)) ? 1 : 0;
  return m;
}

std::vector<uint8_t> RegionMask::omega_cells(const GridSpec& g) const {
  return cells_in(g, omega);
}
std::vector<uint8_t> RegionMask::omega0_cells(const GridSpec& g) const {
  return cells_in(g, omega0);
}

std::vector<uint8_t> RegionMask::omega_faces_x(const GridSpec& g) const {
  std::vector<uint8_t> m((size_t)(g.nx + 1) * g.ny, 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)  // boundary faces stay outside
      m[(size_t)j * (g.nx + 1) + i] =
          omega.contains(i * g.dx(), g.yc(j)) ? 1 : 0;
  return m;
}
std::vector<uint8_t> RegionMask::omega_faces_y(const GridSpec& g) const {
  std::vector<uint8_t> m((size_t)g.nx * (g.ny + 1), 0);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      m[(size_t)j * g.nx + i] = omega.contains(g.xc(i), j * g.dy()) ? 1 : 0;
  return m;
}

// ---- algebra -------------------------------------------------------------

double dot(const GridSpec& g, const ScalarField& a, const ScalarField& b) {
  if (!a.same_shape(b)) throw Error("dot: shape mismatch");
  return g.cell_area() * k::dot(a.data.data(), b.data.data(), a.size());
}

double dot(const GridSpec& g, const VelocityField& a, const VelocityField& b) {
  if (!a.same_shape(b)) throw Error("dot: shape mismatch");
  return g.cell_area() * (k::dot(a.ux.data(), b.ux.data(), a.ux.size()) +
                          k::dot(a.uy.data(), b.uy.data(), a.uy.size()));
}

double norm(const GridSpec& g, const ScalarField& a) {
  return std::sqrt(dot(g, a, a));
}
double norm(const GridSpec& g, const VelocityField& a) {
  return std::sqrt(dot(g, a, a));
}

void axpy(double alpha, const VelocityField& x, VelocityField& y) {
  k::axpy(alpha, x.ux.data(), y.ux.data(), y.ux.size());
  k::axpy(alpha, x.uy.data(), y.uy.data(), y.uy.size());
}
void axpy(double alpha, const ScalarField& x, ScalarField& y) {
  k::axpy(alpha, x.data.data(), y.data.data(), y.size());
}
void scale(double alpha, VelocityField& x) {
  for (double& v : x.ux) v *= alpha;
  for (double& v : x.uy) v *= alpha;
}
void scale(double alpha, ScalarField& x) {
  for (double& v : x.data) v *= alpha;
}
double max_abs(const ScalarField& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}
double max_abs(const VelocityField& a) {
  double m = 0.0;
  for (double v : a.ux) m = std::max(m, std::fabs(v));
  for (double v : a.uy) m = std::max(m, std::fabs(v));
  return m;
}

// ---- operators -----------------------------------------------------------

ScalarField divergence(const GridSpec& g, const VelocityField& v) {
  if (v.nx != g.nx || v.ny != g.ny) throw Error("divergence: shape mismatch");
  ScalarField d(g);
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d.at(i, j) = (v.x(i + 1, j) - v.x(i, j)) * idx +
                   (v.y(i, j + 1) - v.y(i, j)) * idy;
  return d;
}

VelocityField gradient(const GridSpec& g, const ScalarField& p) {
  if (p.nx != g.nx || p.ny != g.ny) throw Error("gradient: shape mismatch");
  VelocityField gr(g);
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      gr.x(i, j) = (p.at(i, j) - p.at(i - 1, j)) * idx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      gr.y(i, j) = (p.at(i, j) - p.at(i, j - 1)) * idy;
  return gr;
}

// Component Laplacian on ux: tangential walls handled by the no-slip ghost
// ux(i,-1) = -ux(i,0). Normal-boundary faces are pinned and left at 0.
static void laplace_component(int ni, int nj, double idx2, double idy2,
                              const std::vector<double>& in,
                              std::vector<double>& out, bool ghost_in_y,
                              int i_lo, int i_hi) {
  // in/out are nj rows of ni values; interior columns [i_lo, i_hi)
  std::vector<double> ghost((size_t)ni);
  const double c = -2.0 * (idx2 + idy2);
  for (int j = 0; j < nj; ++j) {
    const double* mid = in.data() + (size_t)j * ni;
    const double* lo;
    const double* hi;
    if (j > 0) {
      lo = mid - ni;
    } else if (ghost_in_y) {
      for (int i = 0; i < ni; ++i) ghost[i] = -mid[i];
      lo = ghost.data();
    } else {
      lo = nullptr;  // row j=0 is a pinned boundary row, skipped below
    }
    if (j < nj - 1) {
      hi = mid + ni;
    } else if (ghost_in_y) {
      for (int i = 0; i < ni; ++i) ghost[i] = -mid[i];
      hi = ghost.data();
    } else {
      hi = nullptr;
    }
    double* o = out.data() + (size_t)j * ni;
    if (lo == nullptr || hi == nullptr) continue;  // pinned row
    k::stencil5(o + i_lo, mid + i_lo, lo + i_lo, hi + i_lo,
                (size_t)(i_hi - i_lo), c, idx2, idy2);
  }
}

VelocityField vector_laplacian(const GridSpec& g, const VelocityField& v) {
  if (v.nx != g.nx || v.ny != g.ny)
    throw Error("vector_laplacian: shape mismatch");
  VelocityField out(g);
  const double idx2 = 1.0 / (g.dx() * g.dx());
  const double idy2 = 1.0 / (g.dy() * g.dy());
  // ux: ni = nx+1 columns, pinned at i=0 and i=nx; ghost rows in y
  laplace_component(g.nx + 1, g.ny, idx2, idy2, v.ux, out.ux, true, 1, g.nx);
  // uy: rows j=0 and j=ny pinned; ghost columns in x -> transpose roles.
  // Handle uy directly (x is the tangential direction here).
  {
    const double c = -2.0 * (idx2 + idy2);
    for (int j = 1; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        double mid = v.y(i, j);
        double w = (i > 0) ? v.y(i - 1, j) : -mid;
        double e = (i < g.nx - 1) ? v.y(i + 1, j) : -mid;
        double s = v.y(i, j - 1);
        double n = v.y(i, j + 1);
        out.y(i, j) = c * mid + idx2 * (w + e) + idy2 * (s + n);
      }
    }
  }
  return out;
}

ScalarField sym_gradient_norm2(const GridSpec& g, const VelocityField& v) {
  if (v.nx != g.nx || v.ny != g.ny)
    throw Error("sym_gradient_norm2: shape mismatch");
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  // off-diagonal entry of Dv at cell corners, no-slip ghosts at walls
  std::vector<double> t12((size_t)(g.nx + 1) * (g.ny + 1));
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      double dudy;
      if (j == 0)
        dudy = 2.0 * v.x(i, 0) * idy;
      else if (j == g.ny)
        dudy = -2.0 * v.x(i, g.ny - 1) * idy;
      else
        dudy = (v.x(i, j) - v.x(i, j - 1)) * idy;
      double dvdx;
      if (i == 0)
        dvdx = 2.0 * v.y(0, j) * idx;
      else if (i == g.nx)
        dvdx = -2.0 * v.y(g.nx - 1, j) * idx;
      else
        dvdx = (v.y(i, j) - v.y(i - 1, j)) * idx;
      t12[(size_t)j * (g.nx + 1) + i] = dudy + dvdx;
    }
  }
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double d11 = 2.0 * (v.x(i + 1, j) - v.x(i, j)) * idx;
      double d22 = 2.0 * (v.y(i, j + 1) - v.y(i, j)) * idy;
      auto c = [&](int ci, int cj) {
        double t = t12[(size_t)cj * (g.nx + 1) + ci];
        return t * t;
      };
      double off2 = 0.25 * (c(i, j) + c(i + 1, j) + c(i, j + 1) + c(i + 1, j + 1));
      out.at(i, j) = d11 * d11 + d22 * d22 + 2.0 * off2;
    }
  }
  return out;
}

std::vector<double> corner_curl(const GridSpec& g, const VelocityField& v) {
  const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
  std::vector<double> w((size_t)(g.nx + 1) * (g.ny + 1));
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      double dudy;
      if (j == 0)
        dudy = 2.0 * v.x(i, 0) * idy;
      else if (j == g.ny)
        dudy = -2.0 * v.x(i, g.ny - 1) * idy;
      else
        dudy = (v.x(i, j) - v.x(i, j - 1)) * idy;
      double dvdx;
      if (i == 0)
        dvdx = 2.0 * v.y(0, j) * idx;
      else if (i == g.nx)
        dvdx = -2.0 * v.y(g.nx - 1, j) * idx;
      else
        dvdx = (v.y(i, j) - v.y(i - 1, j)) * idx;
      w[(size_t)j * (g.nx + 1) + i] = dvdx - dudy;
    }
  }
  return w;
}

double h10_sq(const GridSpec& g, const VelocityField& v) {
  VelocityField lap = vector_laplacian(g, v);
  return -dot(g, v, lap);
}

// ---- pressure Poisson ------------------------------------------------------

// Neumann cell Laplacian applied via mirrored ghost cells.
static void neumann_laplacian(const GridSpec& g, const std::vector<double>& p,
                              std::vector<double>& out) {
  const int nx = g.nx, ny = g.ny;
  const double idx2 = 1.0 / (g.dx() * g.dx());
  const double idy2 = 1.0 / (g.dy() * g.dy());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double c = p[(size_t)j * nx + i];
      double w = (i > 0) ? p[(size_t)j * nx + i - 1] : c;
      double e = (i < nx - 1) ? p[(size_t)j * nx + i + 1] : c;
      double s = (j > 0) ? p[(size_t)(j - 1) * nx + i] : c;
      double n = (j < ny - 1) ? p[(size_t)(j + 1) * nx + i] : c;
      out[(size_t)j * nx + i] = (w - 2.0 * c + e) * idx2 + (s - 2.0 * c + n) * idy2;
    }
  }
}

ScalarField poisson_neumann(const GridSpec& g, const ScalarField& rhs,
                            double rel_tol, int max_iter) {
  if (rhs.nx != g.nx || rhs.ny != g.ny)
    throw Error("poisson_neumann: shape mismatch");
  const size_t n = rhs.size();
  std::vector<double> b = rhs.data;
  double mean = std::accumulate(b.begin(), b.end(), 0.0) / (double)n;
  for (double& v : b) v = -(v - mean);  // solve (-lap) p = -(rhs - mean)

  std::vector<double> x(n, 0.0);
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    neumann_laplacian(g, in, out);
    for (double& v : out) v = -v;
  };
  CgResult r = conjugate_gradient(apply, b, x, rel_tol, max_iter);
  if (!r.converged && r.rel_residual > 1e-8)
    throw Error("poisson_neumann: CG stalled, relative residual " +
                std::to_string(r.rel_residual));
  double xm = std::accumulate(x.begin(), x.end(), 0.0) / (double)n;
  ScalarField p(g);
  for (size_t i = 0; i < n; ++i) p.data[i] = x[i] - xm;
  return p;
}

ProjectionResult project_divergence_free(const GridSpec& g,
                                         const VelocityField& v,
                                         double rel_tol) {
  ScalarField d = divergence(g, v);
  ScalarField p = poisson_neumann(g, d, rel_tol);
  VelocityField gp = gradient(g, p);
  ProjectionResult res{v, std::move(p)};
  axpy(-1.0, gp, res.v);
  res.v.zero_boundary_faces();
  return res;
}

VelocityField velocity_from_stream(
    const GridSpec& g, const std::function<double(double, double)>& psi) {
  VelocityField v(g);
  const double dx = g.dx(), dy = g.dy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      v.x(i, j) = (psi(i * dx, (j + 1) * dy) - psi(i * dx, j * dy)) / dy;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      v.y(i, j) = -(psi((i + 1) * dx, j * dy) - psi(i * dx, j * dy)) / dx;
  return v;
}

}  // namespace turbctl
