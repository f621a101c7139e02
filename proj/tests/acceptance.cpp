// End-to-end acceptance battery. Each criterion prints exactly one
// "criterion N: pass|FAIL" line with its pinned tolerance and measured
// values; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "turbctl/config.hpp"
#include "turbctl/fixpoint.hpp"
#include "turbctl/initial_data.hpp"

using namespace turbctl;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  (%s)\n", id, pass ? "pass" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

VelocityField random_solenoidal(const GridSpec& g, std::mt19937_64& rng,
                                double amp) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VelocityField v(g);
  for (auto& x : v.ux) x = d(rng);
  for (auto& x : v.uy) x = d(rng);
  v.zero_boundary_faces();
  v = project_divergence_free(g, v).v;
  double m = max_abs(v);
  if (m > 0) scale(amp / m, v);
  return v;
}

struct WeightSetup {
  GridSpec g;
  RegionMask mask;
  CarlemanWeightSet ws;
};

WeightSetup default_weights(GridSpec g) {
  WeightSetup su;
  su.g = g;
  su.mask.omega = Rect{0.2 * g.Lx, 0.8 * g.Lx, 0.2 * g.Ly, 0.8 * g.Ly};
  su.mask.omega0 = Rect{0.35 * g.Lx, 0.65 * g.Lx, 0.35 * g.Ly, 0.65 * g.Ly};
  ScalarField eta0 = build_eta0(g, su.mask);
  WeightParams p;
  p.lambda = std::max(find_lambda00(eta0, p.m0), 1.0);
  su.ws = build_weights(p, eta0, g);
  return su;
}

// 1. forward/adjoint duality identity on random data, 32x32x64
void criterion_duality() {
  auto t0 = std::chrono::steady_clock::now();
  GridSpec g{32, 32, 64, 1.0, 1.0, 1.0};
  std::vector<double> phi0((size_t)g.nt + 1, PhysParams{}.phi00);
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<VelocityField> u((size_t)g.nt + 1, VelocityField(g));
    for (int n = 1; n <= g.nt; ++n) {
      for (auto& x : u[n].ux) x = d(rng);
      for (auto& x : u[n].uy) x = d(rng);
      u[n].zero_boundary_faces();
    }
    VelocityField v0 = random_solenoidal(g, rng, 1.0);
    VelocityField phiT = random_solenoidal(g, rng, 1.0);
    Trajectory fwd = solve_forward(g, PhysParams{}, phi0, u, nullptr, {}, v0);
    Trajectory adj = solve_adjoint(g, PhysParams{}, phi0, {}, phiT);
    double lhs = dot(g, fwd.final(), phiT);
    double rhs = dot(g, v0, adj.v[0]);
    for (int n = 0; n < g.nt; ++n)
      rhs += g.dt() * dot(g, u[n + 1], adj.v[n]);
    worst = std::max(worst,
                     std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
  }
  double secs = seconds_since(t0);
  report(1, worst <= 1e-9 && secs < 10.0,
         "duality 20 sets: max rel err " + fmt(worst) + " <= 1e-9, " +
             fmt(secs) + "s < 10s");
}

// 2. iterative solver matches the dense optimality-system oracle
void criterion_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  GridSpec g{6, 6, 8, 1.0, 1.0, 0.5};
  CarlemanWeightSet ws = bounded_test_weights(g);
  ControlProblem prob;
  prob.grid = g;
  prob.mask.omega = Rect{0.2, 0.8, 0.2, 0.8};
  prob.mask.omega0 = Rect{0.35, 0.65, 0.35, 0.65};
  prob.ws = &ws;
  prob.eps_pen = 1e-2;
  prob.cg_tol = 1e-13;
  prob.cg_maxit = 4000;
  prob.phi0.assign((size_t)g.nt + 1, prob.phys.phi00);
  prob.v0 = random_eddies(g, 1.0, 1);
  prob.f.assign((size_t)g.nt + 1, VelocityField(g));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& fn : prob.f) {
    for (auto& x : fn.ux) x = 0.3 * d(rng);
    for (auto& x : fn.uy) x = 0.3 * d(rng);
    fn.zero_boundary_faces();
  }
  ControlSolution cg = solve_null_control(prob);
  ControlSolution oracle = dense_kkt_oracle(prob);
  auto stack_norm = [&](const std::vector<VelocityField>& u) {
    double s = 0.0;
    for (const auto& un : u) s += norm(g, un) * norm(g, un);
    return std::sqrt(s * g.dt());
  };
  double rel_u = std::abs(stack_norm(cg.u) - stack_norm(oracle.u)) /
                 stack_norm(oracle.u);
  double rel_v = std::abs(stack_norm(cg.v.v) - stack_norm(oracle.v.v)) /
                 stack_norm(oracle.v.v);
  double worst = std::max(rel_u, rel_v);
  double secs = seconds_since(t0);
  report(2, worst <= 1e-7 && secs < 60.0,
         "oracle 6x6x8: rel control " + fmt(rel_u) + ", rel state " +
             fmt(rel_v) + " <= 1e-7, " + fmt(secs) + "s < 60s");
}

// 3. flagship null-control run with defaults; the result is reused by the
// viscosity-ratio bound check (criterion 8)
FixedPointResult g_flagship;
bool g_flagship_ok = false;

void criterion_flagship() {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = parse_config("{}");  // documented defaults: 32x32x64, T=1
  ScalarField eta0 = build_eta0(cfg.grid, cfg.regions);
  WeightParams wp = cfg.weights;
  wp.lambda = resolve_lambda(cfg, eta0);
  CarlemanWeightSet ws = build_weights(wp, eta0, cfg.grid);
  ControlProblem tmpl;
  tmpl.grid = cfg.grid;
  tmpl.phys = cfg.physics;
  tmpl.mask = cfg.regions;
  tmpl.ws = &ws;
  tmpl.eps_pen = cfg.eps_pen;
  tmpl.cg_tol = cfg.cg_tol;
  tmpl.cg_maxit = cfg.cg_maxit;
  tmpl.scheme = cfg.scheme;
  g_flagship =
      fixed_point_solve(make_v0(cfg), make_k0(cfg), tmpl, cfg.fixpoint);
  g_flagship_ok = g_flagship.report.converged;
  bool all_in_g = true;
  for (const GMembership& gm : g_flagship.report.membership)
    all_in_g = all_in_g && gm.member;
  double secs = seconds_since(t0);
  report(3,
         g_flagship.report.converged &&
             g_flagship.report.final_ratio <= 1e-3 && all_in_g &&
             secs < 900.0,
         "32x32x64 defaults: converged=" +
             std::string(g_flagship.report.converged ? "yes" : "no") +
             ", ratio " + fmt(g_flagship.report.final_ratio) +
             " <= 1e-3, all iterates in G=" + (all_in_g ? "yes" : "no") +
             ", " + fmt(secs) + "s < 900s");
}

// 4. empirical weight-inequality constants finite and refinement-stable
void criterion_weight_inequalities() {
  WeightSetup s1 = default_weights(GridSpec{16, 16, 32, 1.0, 1.0, 1.0});
  WeightSetup s2 = default_weights(GridSpec{32, 32, 64, 1.0, 1.0, 1.0});
  InequalityReport r1 = check_weight_inequalities(s1.ws);
  InequalityReport r2 = check_weight_inequalities(s2.ws);
  bool ok = r1.all_finite && r2.all_finite &&
            r1.rows.size() == r2.rows.size();
  double worst = 0.0;
  for (size_t i = 0; ok && i < r1.rows.size(); ++i) {
    double a = r1.rows[i].cstar, b = r2.rows[i].cstar;
    worst = std::max(worst, std::max(a, b) / std::min(a, b));
  }
  ok = ok && worst <= 2.0;
  report(4, ok,
         "all constants finite; worst doubling drift " + fmt(worst) +
             " <= 2");
}

// 5. observability-ratio battery bounded and stable under doubling
void criterion_carleman_ratios() {
  WeightSetup s1 = default_weights(GridSpec{16, 16, 32, 1.0, 1.0, 1.0});
  WeightSetup s2 = default_weights(GridSpec{32, 32, 64, 1.0, 1.0, 1.0});
  std::vector<double> p1((size_t)s1.g.nt + 1, PhysParams{}.phi00);
  std::vector<double> p2((size_t)s2.g.nt + 1, PhysParams{}.phi00);
  CarlemanRatioReport r1 =
      carleman_ratio_test(s1.ws, PhysParams{}, p1, s1.mask, 50, 11);
  CarlemanRatioReport r2 =
      carleman_ratio_test(s2.ws, PhysParams{}, p2, s2.mask, 50, 11);
  bool ok = r1.finite && r2.finite && (int)r1.ratios.size() == 50;
  for (double r : r1.ratios) ok = ok && std::isfinite(r);
  ok = ok && r2.max_ratio <= 2.0 * r1.max_ratio;
  report(5, ok,
         "50 samples: max ratio " + fmt(r1.max_ratio) + ", doubled grid " +
             fmt(r2.max_ratio) + " <= 2x");
}

// 6. terminal norm strictly decreasing along the penalty sweep
void criterion_penalty_sweep() {
  GridSpec g{12, 12, 16, 1.0, 1.0, 0.5};
  CarlemanWeightSet ws = bounded_test_weights(g);
  ControlProblem prob;
  prob.grid = g;
  prob.mask.omega = Rect{0.2, 0.8, 0.2, 0.8};
  prob.mask.omega0 = Rect{0.35, 0.65, 0.35, 0.65};
  prob.ws = &ws;
  prob.cg_tol = 1e-12;
  prob.cg_maxit = 6000;
  prob.phi0.assign((size_t)g.nt + 1, prob.phys.phi00);
  prob.v0 = random_eddies(g, 1.0, 3);
  std::vector<double> finals;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    prob.eps_pen = eps;
    finals.push_back(solve_null_control(prob).final_norm);
  }
  bool ok = true;
  for (size_t i = 1; i < finals.size(); ++i)
    ok = ok && finals[i] < finals[i - 1];
  report(6, ok,
         "final norms " + fmt(finals[0]) + " > " + fmt(finals[1]) + " > " +
             fmt(finals[2]) + " > " + fmt(finals[3]));
}

// 7. k-solver: first-order scalar reduction and nonnegativity battery
void criterion_k_solver() {
  const double c = 0.5, T = 0.4;
  auto phi_of = [&](double t) { return 0.2 + 0.3 * t; };
  double integral = 0.0;
  const int nq = 200000;
  for (int i = 0; i < nq; ++i)
    integral += 0.5 * (T / nq) *
                (1.0 / phi_of(T * i / nq) + 1.0 / phi_of(T * (i + 1) / nq));
  double exact = 1.0 / (1.0 / c + integral);
  auto final_err = [&](int nt) {
    GridSpec g{8, 8, nt, 1.0, 1.0, T};
    Trajectory zero;
    zero.grid = g;
    zero.v.assign((size_t)nt + 1, VelocityField(g));
    ScalarField k0(g);
    for (auto& v : k0.data) v = c;
    std::vector<double> phi((size_t)nt + 1);
    for (int n = 0; n <= nt; ++n) phi[n] = phi_of(n * g.dt());
    auto k = solve_k_equation(g, PhysParams{}, zero, phi, k0);
    double err = 0.0;
    for (double v : k.back().data) err = std::max(err, std::fabs(v - exact));
    return err;
  };
  double rate = final_err(32) / final_err(64);
  bool first_order = rate >= 1.7 && rate <= 2.4;

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  double kmin = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    GridSpec g{8, 8, 8, 1.0, 1.0, 0.1 + 0.4 * d01(rng)};
    Trajectory tr;
    tr.grid = g;
    tr.v.assign((size_t)g.nt + 1, VelocityField(g));
    double amp = 0.5 * d01(rng);
    for (auto& vn : tr.v) vn = random_solenoidal(g, rng, amp);
    ScalarField k0(g);
    for (auto& v : k0.data) v = d01(rng);
    std::vector<double> phi((size_t)g.nt + 1, 0.05 + d01(rng));
    auto k = solve_k_equation(g, PhysParams{}, tr, phi, k0);
    for (const auto& kn : k)
      for (double v : kn.data) kmin = std::min(kmin, v);
  }
  report(7, first_order && kmin >= 0.0,
         "dt-halving error ratio " + fmt(rate) + " in [1.7, 2.4]; min k " +
             fmt(kmin) + " >= 0 over 100 cases");
}

// 8. viscosity-ratio bounds on the converged flagship run, plus the exact
// constant case (a = 2, uniform k)
void criterion_phi0_bounds() {
  bool flag_ok = g_flagship_ok;
  double pmin = 0.0, pmax = 0.0;
  if (flag_ok) {
    pmin = pmax = g_flagship.state.phi0.front();
    for (double p : g_flagship.state.phi0) {
      pmin = std::min(pmin, p);
      pmax = std::max(pmax, p);
    }
    flag_ok = pmin >= g_flagship.consts.beta0 * (1 - 1e-12) &&
              pmax <= g_flagship.consts.M * (1 + 1e-12);
  }

  GridSpec g{8, 8, 16, 1.0, 1.0, 0.5};
  PhysParams phys;
  phys.a = 2.0;  // the source term of the ratio equation vanishes
  Trajectory zero;
  zero.grid = g;
  zero.v.assign((size_t)g.nt + 1, VelocityField(g));
  ScalarField k0(g);
  for (auto& v : k0.data) v = 0.3;  // uniform, so grad k stays zero
  auto k = solve_k_equation(g, phys, zero,
                            std::vector<double>((size_t)g.nt + 1, phys.phi00),
                            k0);
  auto phi = integrate_phi0(k, phys, g);
  double dev = 0.0;
  for (double p : phi) dev = std::max(dev, std::fabs(p - phys.phi00));
  report(8, flag_ok && dev <= 1e-12,
         "flagship phi0 in [" + fmt(g_flagship.consts.beta0) + ", " +
             fmt(g_flagship.consts.M) + "]: [" + fmt(pmin) + ", " +
             fmt(pmax) + "]; a=2 uniform-k deviation " + fmt(dev) +
             " <= 1e-12");
}

// 9. smallness dichotomy over 10 random seeds at each amplitude
void criterion_dichotomy() {
  WeightSetup su = default_weights(GridSpec{16, 16, 32, 1.0, 1.0, 1.0});
  ControlProblem tmpl;
  tmpl.grid = su.g;
  tmpl.mask = su.mask;
  tmpl.ws = &su.ws;
  FixpointParams params;
  int converged = 0, diverged = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    FixedPointResult r = fixed_point_solve(random_eddies(su.g, 1e-3, seed),
                                           k0_bump(su.g, 0.1), tmpl, params);
    if (r.report.converged) ++converged;
  }
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    FixedPointResult r = fixed_point_solve(random_eddies(su.g, 1e-1, seed),
                                           k0_bump(su.g, 0.1), tmpl, params);
    if (r.report.picard_diverged && !r.report.failure.empty()) ++diverged;
  }
  report(9, converged == 10 && diverged >= 8,
         "amplitude 1e-3: " + std::to_string(converged) +
             "/10 converged (need 10); amplitude 1e-1: " +
             std::to_string(diverged) +
             "/10 reported divergence (need >= 8)");
}

// 10. Lipschitz continuity of the solution map under data perturbations
void criterion_continuity() {
  WeightSetup su = default_weights(GridSpec{16, 16, 12, 1.0, 1.0, 0.5});
  ControlProblem prob;
  prob.grid = su.g;
  prob.mask = su.mask;
  prob.ws = &su.ws;
  prob.eps_pen = 1e-4;
  prob.cg_tol = 1e-10;
  prob.cg_maxit = 2000;
  prob.phi0.assign((size_t)su.g.nt + 1, prob.phys.phi00);
  std::mt19937_64 rng(41);
  prob.v0 = random_solenoidal(su.g, rng, 1e-2);
  ContinuityReport rep = continuity_check(prob, 5, 99);
  bool ok = (int)rep.rows.size() == 5 && rep.monotone &&
            std::isfinite(rep.lipschitz);
  for (size_t i = 1; i < rep.rows.size(); ++i)
    ok = ok && rep.rows[i].sol_dist < rep.rows[i - 1].sol_dist;
  for (const auto& r : rep.rows)
    ok = ok && r.ratio <= rep.lipschitz * (1 + 1e-12);
  report(10, ok,
         "5 halvings, solution distance strictly decreasing; Lipschitz " +
             fmt(rep.lipschitz));
}

}  // namespace

int main() {
  criterion_duality();
  criterion_oracle();
  criterion_flagship();
  criterion_weight_inequalities();
  criterion_carleman_ratios();
  criterion_penalty_sweep();
  criterion_k_solver();
  criterion_phi0_bounds();
  criterion_dichotomy();
  criterion_continuity();
  if (g_failures == 0)
    std::printf("acceptance: all 10 criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
