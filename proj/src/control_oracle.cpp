#include <Eigen/Dense>

#include "turbctl/control.hpp"

namespace turbctl {

namespace {

size_t face_count(const GridSpec& g) {
  return (size_t)(g.nx + 1) * g.ny + (size_t)g.nx * (g.ny + 1);
}

Eigen::VectorXd to_vec(const VelocityField& v) {
  Eigen::VectorXd x(v.ux.size() + v.uy.size());
  for (size_t i = 0; i < v.ux.size(); ++i) x[i] = v.ux[i];
  for (size_t i = 0; i < v.uy.size(); ++i) x[v.ux.size() + i] = v.uy[i];
  return x;
}

VelocityField from_vec(const GridSpec& g, const Eigen::VectorXd& x) {
  VelocityField v(g);
  for (size_t i = 0; i < v.ux.size(); ++i) v.ux[i] = x[i];
  for (size_t i = 0; i < v.uy.size(); ++i) v.uy[i] = x[v.ux.size() + i];
  return v;
}

}  // namespace

ControlSolution dense_kkt_oracle(const ControlProblem& prob) {
  prob.validate();
  const GridSpec& g = prob.grid;
  const int nt = g.nt;
  const double dt = g.dt();
  const size_t nf = face_count(g);

  // omega-face coordinates (control unknowns live only there)
  auto mx = prob.mask.omega_faces_x(g);
  auto my = prob.mask.omega_faces_y(g);
  std::vector<size_t> omega_idx;
  for (size_t i = 0; i < mx.size(); ++i)
    if (mx[i]) omega_idx.push_back(i);
  for (size_t i = 0; i < my.size(); ++i)
    if (my[i]) omega_idx.push_back(mx.size() + i);
  const size_t nu = omega_idx.size();

  const size_t block = 2 * nf + nu;
  const size_t N = (size_t)nt * block;
  if (N > 20000)
    throw Error("kkt oracle: instance has " + std::to_string(N) +
                " unknowns, limit is 20000");

  StokesOptions opt;
  opt.scheme = prob.scheme;
  StokesStepper stepper(g, prob.phys, prob.phi0, opt);

  // densified step map M_n and source map S_n = P H_n^{-1}
  auto densify = [&](int n, Eigen::MatrixXd& M, Eigen::MatrixXd& S) {
    M.resize(nf, nf);
    S.resize(nf, nf);
    for (size_t col = 0; col < nf; ++col) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(nf);
      e[col] = 1.0;
      VelocityField basis = from_vec(g, e);
      M.col(col) = to_vec(stepper.step(n, basis, nullptr));
      VelocityField src = stepper.step(n, VelocityField(g), &basis);
      S.col(col) = to_vec(src) / dt;
    }
  };
  std::vector<Eigen::MatrixXd> M(nt), S(nt);
  for (int n = 0; n < nt; ++n) densify(n, M[n], S[n]);

  // per-node squared weights on faces (L2 convention, area cancels)
  const size_t nc = (size_t)g.nx * g.ny;
  std::vector<double> sq(nc);
  auto face_sq = [&](const std::vector<double>& w, int n) {
    for (size_t c = 0; c < nc; ++c) {
      double v = w[(size_t)n * nc + c];
      sq[c] = v * v;
    }
    return to_vec(weights_to_faces(g, sq.data()));
  };

  auto tw = [&](int n) { return (n == 0 || n == nt) ? 0.5 : 1.0; };

  // unknown layout per node n = 1..nt: [v^n; u^n (omega coords); lambda^n]
  auto vo = [&](int n) { return (size_t)(n - 1) * block; };
  auto uo = [&](int n) { return vo(n) + nf; };
  auto lo = [&](int n) { return vo(n) + nf + nu; };

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);

  Eigen::VectorXd v0vec = to_vec(prob.v0);
  for (int n = 1; n <= nt; ++n) {
    size_t row = vo(n);  // constraint rows
    A.block(row, vo(n), nf, nf).setIdentity();
    if (n > 1) A.block(row, vo(n - 1), nf, nf) = -M[n - 1];
    for (size_t j = 0; j < nu; ++j)
      A.block(row, uo(n) + j, nf, 1) = -dt * S[n - 1].col(omega_idx[j]);
    if (n == 1) rhs.segment(row, nf) = M[0] * v0vec;
    if (!prob.f.empty())
      rhs.segment(row, nf) += dt * (S[n - 1] * to_vec(prob.f[n]));

    // v-stationarity rows
    size_t vrow = lo(n);
    Eigen::VectorXd wv = face_sq(prob.ws->rho_tilde, n);
    Eigen::VectorXd diag = 2.0 * tw(n) * dt * wv;
    if (n == nt) diag.array() += 2.0 / prob.eps_pen;
    A.block(vrow, vo(n), nf, nf) = diag.asDiagonal();
    A.block(vrow, lo(n), nf, nf).setIdentity();
    if (n < nt) A.block(vrow, lo(n + 1), nf, nf) = -M[n].transpose();

    // u-stationarity rows (omega coordinates)
    size_t urow = uo(n);
    Eigen::VectorXd wuv = face_sq(prob.ws->eta_tilde, n);
    for (size_t j = 0; j < nu; ++j) {
      size_t fj = omega_idx[j];
      A(urow + j, uo(n) + j) = 2.0 * tw(n) * dt * wuv[fj];
      A.block(urow + j, lo(n), 1, nf) = -dt * S[n - 1].col(fj).transpose();
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd x = lu.solve(rhs);
  double res = (A * x - rhs).norm() / std::max(rhs.norm(), 1.0);
  if (!(res < 1e-8)) {
    if (std::getenv("TURBCTL_KKT_DEBUG")) {
      Eigen::FullPivLU<Eigen::MatrixXd> flu(A);
      flu.setThreshold(1e-10);
      fprintf(stderr, "kkt debug: N=%zu rank=%ld\n", N, (long)flu.rank());
      if (flu.rank() < (long)N) {
        Eigen::MatrixXd ker = flu.kernel();
        Eigen::VectorXd kv = ker.col(0);
        kv /= kv.norm();
        for (int n = 1; n <= nt; ++n) {
          fprintf(stderr,
                  "  node %2d: |v|=%.3e |u|=%.3e |lam|=%.3e\n", n,
                  kv.segment(vo(n), nf).norm(), kv.segment(uo(n), nu).norm(),
                  kv.segment(lo(n), nf).norm());
        }
      }
    }
    throw Error("kkt oracle: dense solve residual " + std::to_string(res));
  }

  ControlSolution sol;
  sol.u.assign((size_t)nt + 1, VelocityField(g));
  sol.v.grid = g;
  sol.v.produced_by = "dense_kkt_oracle";
  sol.v.v.assign((size_t)nt + 1, VelocityField(g));
  sol.v.p.assign((size_t)nt + 1, ScalarField(g));
  sol.v.v[0] = prob.v0;
  for (int n = 1; n <= nt; ++n) {
    sol.v.v[n] = from_vec(g, x.segment(vo(n), nf));
    Eigen::VectorXd ufull = Eigen::VectorXd::Zero(nf);
    for (size_t j = 0; j < nu; ++j) ufull[omega_idx[j]] = x[uo(n) + j];
    sol.u[n] = from_vec(g, ufull);
  }
  auto [cv, cu] = assemble_cost(sol.v, sol.u, *prob.ws);
  sol.cost_v = cv;
  sol.cost_u = cu;
  sol.final_norm = norm(g, sol.v.final());
  sol.converged = true;
  return sol;
}

}  // namespace turbctl
