#pragma once
// Staggered (MAC) grid geometry, the field containers and the discrete
// differential operators. Velocity components live on faces, scalars at
// cell centers. All operators assume the rectangle [0,Lx]x[0,Ly] with
// homogeneous no-slip velocity on the boundary.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace turbctl {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct GridSpec {
  int nx = 0, ny = 0, nt = 0;
  double Lx = 0, Ly = 0, T = 0;

  double dx() const { return Lx / nx; }
  double dy() const { return Ly / ny; }
  double dt() const { return T / nt; }
  double cell_area() const { return dx() * dy(); }
  double domain_area() const { return Lx * Ly; }

  // cell-center coordinates
  double xc(int i) const { return (i + 0.5) * dx(); }
  double yc(int j) const { return (j + 0.5) * dy(); }

  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

// Cell-centered scalar, row-major in y (index j*nx + i).
struct ScalarField {
  int nx = 0, ny = 0;
  std::vector<double> data;

  ScalarField() = default;
  ScalarField(int nx_, int ny_) : nx(nx_), ny(ny_), data((size_t)nx_ * ny_, 0.0) {}
  explicit ScalarField(const GridSpec& g) : ScalarField(g.nx, g.ny) {}

  double& at(int i, int j) { return data[(size_t)j * nx + i]; }
  double at(int i, int j) const { return data[(size_t)j * nx + i]; }
  size_t size() const { return data.size(); }
  bool same_shape(const ScalarField& o) const { return nx == o.nx && ny == o.ny; }
};

// MAC velocity: ux on vertical faces (nx+1 x ny), uy on horizontal faces
// (nx x ny+1). Boundary faces carry the no-slip value 0 and stay pinned.
struct VelocityField {
  int nx = 0, ny = 0;
  std::vector<double> ux;  // index j*(nx+1) + i,  i in [0,nx], j in [0,ny-1]
  std::vector<double> uy;  // index j*nx + i,      i in [0,nx-1], j in [0,ny]

  VelocityField() = default;
  VelocityField(int nx_, int ny_)
      : nx(nx_), ny(ny_), ux((size_t)(nx_ + 1) * ny_, 0.0),
        uy((size_t)nx_ * (ny_ + 1), 0.0) {}
  explicit VelocityField(const GridSpec& g) : VelocityField(g.nx, g.ny) {}

  double& x(int i, int j) { return ux[(size_t)j * (nx + 1) + i]; }
  double x(int i, int j) const { return ux[(size_t)j * (nx + 1) + i]; }
  double& y(int i, int j) { return uy[(size_t)j * nx + i]; }
  double y(int i, int j) const { return uy[(size_t)j * nx + i]; }
  bool same_shape(const VelocityField& o) const { return nx == o.nx && ny == o.ny; }

  void zero_boundary_faces();
  bool all_finite() const;
};

struct Rect {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool strictly_inside(const Rect& outer) const {
    return x0 > outer.x0 && x1 < outer.x1 && y0 > outer.y0 && y1 < outer.y1;
  }
  bool nonempty() const { return x1 > x0 && y1 > y0; }
};

// Control region omega and the inner region omega0 of the weight
// construction, both axis-aligned rectangles.
struct RegionMask {
  Rect omega;
  Rect omega0;

  void validate(const GridSpec& g) const;

  // cell masks by cell-center membership
  std::vector<uint8_t> omega_cells(const GridSpec& g) const;
  std::vector<uint8_t> omega0_cells(const GridSpec& g) const;
  // face masks by face-midpoint membership in omega (for control support)
  std::vector<uint8_t> omega_faces_x(const GridSpec& g) const;
  std::vector<uint8_t> omega_faces_y(const GridSpec& g) const;
};

// ---- algebra -------------------------------------------------------------

double dot(const GridSpec& g, const ScalarField& a, const ScalarField& b);
double dot(const GridSpec& g, const VelocityField& a, const VelocityField& b);
double norm(const GridSpec& g, const ScalarField& a);
double norm(const GridSpec& g, const VelocityField& a);
// discrete H^1_0 seminorm squared (no-slip ghosts)
double h10_sq(const GridSpec& g, const VelocityField& v);

void axpy(double alpha, const VelocityField& x, VelocityField& y);
void axpy(double alpha, const ScalarField& x, ScalarField& y);
void scale(double alpha, VelocityField& x);
void scale(double alpha, ScalarField& x);
double max_abs(const ScalarField& a);
double max_abs(const VelocityField& a);

// ---- operators -----------------------------------------------------------

// second-order centered MAC divergence, cell-centered result
ScalarField divergence(const GridSpec& g, const VelocityField& v);

// centered pressure gradient to interior faces (boundary faces 0)
VelocityField gradient(const GridSpec& g, const ScalarField& p);

// 5-point component-wise Laplacian with no-slip ghost reflection;
// boundary faces of the result are 0
VelocityField vector_laplacian(const GridSpec& g, const VelocityField& v);

// |Dv|^2 with Dv = grad v + grad^T v, interpolated to cell centers
ScalarField sym_gradient_norm2(const GridSpec& g, const VelocityField& v);

// curl (scalar in 2D) at the (nx+1)x(ny+1) cell corners
std::vector<double> corner_curl(const GridSpec& g, const VelocityField& v);

// Solves the cell-centered Neumann Poisson problem  div(grad p) = rhs
// (rhs is made mean-free) by CG to the given relative residual.
// Throws Error with the residual on non-convergence.
ScalarField poisson_neumann(const GridSpec& g, const ScalarField& rhs,
                            double rel_tol = 1e-12, int max_iter = 20000);

struct ProjectionResult {
  VelocityField v;
  ScalarField p;  // potential used for the correction: v = v_in - grad p
};

// Discrete Leray projector onto divergence-free MAC fields.
ProjectionResult project_divergence_free(const GridSpec& g,
                                         const VelocityField& v,
                                         double rel_tol = 1e-12);

// Velocity from a stream function sampled at cell corners:
// ux = d(psi)/dy, uy = -d(psi)/dx; exactly divergence-free.
VelocityField velocity_from_stream(const GridSpec& g,
                                   const std::function<double(double, double)>& psi);

constexpr double kDivTol = 1e-10;

}  // namespace turbctl
