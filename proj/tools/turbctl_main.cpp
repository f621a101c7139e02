// Command-line entry point: batch runs of the controlled fixed-point
// solver plus the verification subcommands (weight inequalities, the
// observability ratio test, the dense-oracle cross-check and parameter
// sweeps). Exit codes: 0 success, 2 configuration error, 3 solver
// failure, 4 verification failure.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "turbctl/config.hpp"
#include "turbctl/control.hpp"
#include "turbctl/fixpoint.hpp"
#include "turbctl/initial_data.hpp"
#include "turbctl/keps.hpp"
#include "turbctl/report.hpp"
#include "turbctl/snapshot.hpp"
#include "turbctl/weights.hpp"

namespace {

using namespace turbctl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Workbench {
  RunConfig cfg;
  ScalarField eta0;
  CarlemanWeightSet ws;
  double wall_weights = 0.0;
};

// Resolves lambda and builds the weight families for the configured grid.
Workbench build_workbench(RunConfig cfg) {
  Workbench wb;
  wb.cfg = std::move(cfg);
  auto t0 = Clock::now();
  wb.eta0 = build_eta0(wb.cfg.grid, wb.cfg.regions);
  wb.cfg.weights.lambda = resolve_lambda(wb.cfg, wb.eta0);
  wb.cfg.lambda_auto = false;  // echo carries the resolved value
  wb.ws = build_weights(wb.cfg.weights, wb.eta0, wb.cfg.grid);
  wb.wall_weights = seconds_since(t0);
  return wb;
}

ControlProblem make_problem(const Workbench& wb) {
  ControlProblem prob;
  prob.grid = wb.cfg.grid;
  prob.phys = wb.cfg.physics;
  prob.mask = wb.cfg.regions;
  prob.ws = &wb.ws;
  prob.eps_pen = wb.cfg.eps_pen;
  prob.cg_tol = wb.cfg.cg_tol;
  prob.cg_maxit = wb.cfg.cg_maxit;
  prob.scheme = wb.cfg.scheme;
  return prob;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io: cannot create directory " + dir);
}

void write_config_echo(const RunConfig& cfg, const std::string& dir) {
  std::string tmp = dir + "/config.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("io: cannot write " + tmp);
    out << config_echo(cfg);
  }
  fs::rename(tmp, dir + "/config.json");
}

int cmd_run(const RunConfig& cfg_in, bool verbose) {
  KvRows kv;
  std::string out_dir = cfg_in.io.out_dir;
  ensure_dir(out_dir);
  int exit_code = kExitSolver;
  auto t0 = Clock::now();
  try {
    Workbench wb = build_workbench(cfg_in);
    const RunConfig& cfg = wb.cfg;
    write_config_echo(cfg, out_dir);
    kv.emplace_back("lambda_used", format_number(cfg.weights.lambda));

    VelocityField v0 = make_v0(cfg);
    ScalarField k0 = make_k0(cfg);
    kv.emplace_back("norm_v0", format_number(norm(cfg.grid, v0)));
    kv.emplace_back("wall_weights_s", format_number(wb.wall_weights));

    DerivedConstants dc =
        compute_constants(cfg.physics, k0, cfg.grid.T, cfg.grid);
    kv.emplace_back("M", format_number(dc.M));
    kv.emplace_back("b1", dc.b1_infinite ? "inf" : format_number(dc.b1));
    kv.emplace_back("beta0", format_number(dc.beta0));

    auto ts = Clock::now();
    FixedPointResult r =
        fixed_point_solve(v0, k0, make_problem(wb), cfg.fixpoint);
    double wall_solve = seconds_since(ts);
    kv.emplace_back("wall_solve_s", format_number(wall_solve));

    const FixedPointReport& rep = r.report;
    kv.emplace_back("converged", rep.converged ? "true" : "false");
    kv.emplace_back("outer_iterations", std::to_string(rep.outer_iterations));
    kv.emplace_back("picard_diverged", rep.picard_diverged ? "true" : "false");
    kv.emplace_back("g_exit", rep.g_exit ? "true" : "false");
    if (!rep.failure.empty()) kv.emplace_back("failure", rep.failure);
    kv.emplace_back("final_norm", format_number(r.sol.final_norm));
    kv.emplace_back("final_ratio", format_number(rep.final_ratio));
    kv.emplace_back("cost_v", format_number(r.sol.cost_v));
    kv.emplace_back("cost_u", format_number(r.sol.cost_u));
    kv.emplace_back("cg_iterations", std::to_string(r.sol.iterations));
    kv.emplace_back("cg_rel_gradient", format_number(r.sol.rel_gradient));

    auto tio = Clock::now();
    write_timeseries_csv(out_dir + "/timeseries.csv", cfg.grid,
                         rep.timeseries);
    if (cfg.io.snapshot_every > 0) {
      char name[64];
      for (int n = 0; n <= cfg.grid.nt; n += cfg.io.snapshot_every) {
        double t = n * cfg.grid.dt();
        std::snprintf(name, sizeof name, "/v_%04d", n);
        write_snapshot(out_dir + name, cfg.grid, r.sol.v.v[n], "velocity", t);
        std::snprintf(name, sizeof name, "/k_%04d", n);
        write_snapshot(out_dir + name, cfg.grid, r.state.k[n], "k", t);
        std::snprintf(name, sizeof name, "/u_%04d", n);
        write_snapshot(out_dir + name, cfg.grid, r.sol.u[n], "control", t);
      }
    }
    kv.emplace_back("wall_io_s", format_number(seconds_since(tio)));

    if (verbose) {
      for (size_t i = 0; i < rep.residuals.size(); ++i)
        std::cout << "outer " << (i + 1) << ": residual "
                  << format_number(rep.residuals[i]) << ", picard "
                  << rep.picard_iterations[i] << ", in_G "
                  << (rep.membership[i].member ? 1 : 0) << "\n";
    }
    if (rep.picard_diverged) {
      std::cerr << "run: Picard source iteration diverged -- the initial "
                   "velocity lies outside the smallness regime ("
                << rep.failure << ")\n";
    } else if (!rep.converged) {
      std::cerr << "run: fixed-point iteration did not converge (residual "
                << (rep.residuals.empty()
                        ? std::string("n/a")
                        : format_number(rep.residuals.back()))
                << ", g_exit " << (rep.g_exit ? "true" : "false") << ")\n";
    } else {
      std::cout << "run: converged in " << rep.outer_iterations
                << " outer iterations, final ratio "
                << format_number(rep.final_ratio) << "\n";
    }
    exit_code = rep.converged ? kExitOk : kExitSolver;
  } catch (const Error& e) {
    kv.emplace_back("failure", e.what());
    std::cerr << "run: " << e.what() << "\n";
    exit_code = kExitSolver;
  }
  kv.emplace_back("wall_total_s", format_number(seconds_since(t0)));
  write_kv_atomic(out_dir + "/summary.txt", kv);
  return exit_code;
}

int cmd_check_weights(const RunConfig& cfg_in) {
  Workbench wb = build_workbench(cfg_in);
  ensure_dir(wb.cfg.io.out_dir);
  InequalityReport rep = check_weight_inequalities(wb.ws);
  KvRows kv;
  kv.emplace_back("lambda_used", format_number(wb.cfg.weights.lambda));
  std::cout << "inequality                         C*           samples\n";
  for (const auto& row : rep.rows) {
    std::printf("%-34s %-12s %zu%s\n", row.name.c_str(),
                row.finite ? format_number(row.cstar).c_str() : "inf",
                row.samples, row.finite ? "" : "  (NOT FINITE)");
    kv.emplace_back(row.name + ".cstar",
                    row.finite ? format_number(row.cstar) : "inf");
    kv.emplace_back(row.name + ".samples", std::to_string(row.samples));
  }
  kv.emplace_back("all_finite", rep.all_finite ? "true" : "false");
  write_kv_atomic(wb.cfg.io.out_dir + "/weight_report.txt", kv);
  return rep.all_finite ? kExitOk : kExitVerify;
}

int cmd_carleman_test(const RunConfig& cfg_in, int n_samples) {
  Workbench wb = build_workbench(cfg_in);
  const RunConfig& cfg = wb.cfg;
  ensure_dir(cfg.io.out_dir);
  std::vector<double> phi0((size_t)cfg.grid.nt + 1, cfg.physics.phi00);
  CarlemanRatioReport rep = carleman_ratio_test(
      wb.ws, cfg.physics, phi0, cfg.regions, n_samples, cfg.init.seed);
  {
    std::ofstream csv(cfg.io.out_dir + "/carleman_ratios.csv");
    csv << "sample, ratio\n";
    for (size_t i = 0; i < rep.ratios.size(); ++i)
      csv << i << ", " << format_number(rep.ratios[i]) << "\n";
  }
  KvRows kv;
  kv.emplace_back("samples", std::to_string(rep.ratios.size()));
  kv.emplace_back("max_ratio", format_number(rep.max_ratio));
  kv.emplace_back("finite", rep.finite ? "true" : "false");
  write_kv_atomic(cfg.io.out_dir + "/carleman_report.txt", kv);
  std::cout << "observability ratio over " << rep.ratios.size()
            << " samples: max " << format_number(rep.max_ratio)
            << (rep.finite ? "" : " (NOT FINITE)") << "\n";
  return rep.finite ? kExitOk : kExitVerify;
}

// Dense-oracle cross-check on a reduced instance: the dense optimality
// system is only representable for bounded weights and a few hundred
// unknowns, so the comparison runs at 6x6x8 with synthetic weights.
int cmd_oracle_compare(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.grid.nx = cfg.grid.ny = 6;
  cfg.grid.nt = 8;
  cfg.grid.T = 0.5;
  ensure_dir(cfg.io.out_dir);
  CarlemanWeightSet ws = bounded_test_weights(cfg.grid);

  ControlProblem prob;
  prob.grid = cfg.grid;
  prob.phys = cfg.physics;
  prob.mask = cfg.regions;
  prob.ws = &ws;
  prob.eps_pen = 1e-2;
  prob.cg_tol = 1e-13;
  prob.cg_maxit = 4000;
  prob.phi0.assign((size_t)cfg.grid.nt + 1, cfg.physics.phi00);
  prob.v0 = random_eddies(cfg.grid, 1.0, cfg.init.seed);
  prob.f.assign((size_t)cfg.grid.nt + 1, VelocityField(cfg.grid));
  std::mt19937_64 rng(cfg.init.seed + 1);
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
    for (const auto& un : u) {
      double nn = norm(cfg.grid, un);
      s += nn * nn;
    }
    return std::sqrt(s * cfg.grid.dt());
  };
  double nu_cg = stack_norm(cg.u), nu_or = stack_norm(oracle.u);
  double nv_cg = stack_norm(cg.v.v), nv_or = stack_norm(oracle.v.v);
  double rel_u = std::abs(nu_cg - nu_or) / std::max(nu_or, 1e-300);
  double rel_v = std::abs(nv_cg - nv_or) / std::max(nv_or, 1e-300);
  double worst = std::max(rel_u, rel_v);

  KvRows kv;
  kv.emplace_back("control_norm_cg", format_number(nu_cg));
  kv.emplace_back("control_norm_oracle", format_number(nu_or));
  kv.emplace_back("state_norm_cg", format_number(nv_cg));
  kv.emplace_back("state_norm_oracle", format_number(nv_or));
  kv.emplace_back("rel_control", format_number(rel_u));
  kv.emplace_back("rel_state", format_number(rel_v));
  kv.emplace_back("tolerance", "1e-07");
  kv.emplace_back("pass", worst <= 1e-7 ? "true" : "false");
  write_kv_atomic(cfg.io.out_dir + "/oracle_report.txt", kv);
  std::cout << "oracle comparison: relative discrepancy control "
            << format_number(rel_u) << ", state " << format_number(rel_v)
            << " (tolerance 1e-7)\n";
  return worst <= 1e-7 ? kExitOk : kExitVerify;
}

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  bool converged = false;
  int outer = 0;
  double final_norm = 0.0, final_ratio = 0.0, cost_v = 0.0, cost_u = 0.0;
  std::string failure;
};

int cmd_sweep(const RunConfig& cfg_in, const std::string& param,
              const std::vector<double>& values, int workers, bool verbose) {
  const std::vector<std::string> known{"eps_pen", "cg_tol", "s",
                                       "v0_amplitude", "seed"};
  if (std::find(known.begin(), known.end(), param) == known.end())
    throw Error("config: sweep parameter must be one of eps_pen, cg_tol, s, "
                "v0_amplitude, seed");
  ensure_dir(cfg_in.io.out_dir);

  std::vector<SweepRow> rows(values.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      SweepRow& row = rows[i];
      row.value = values[i];
      RunConfig cfg = cfg_in;
      if (param == "eps_pen") cfg.eps_pen = values[i];
      if (param == "cg_tol") cfg.cg_tol = values[i];
      if (param == "s") cfg.weights.s = values[i];
      if (param == "v0_amplitude") cfg.init.v0_amplitude = values[i];
      if (param == "seed") cfg.init.seed = (uint64_t)values[i];
      cfg.io.out_dir = cfg_in.io.out_dir + "/" + param + "_" +
                       format_number(values[i]);
      try {
        ensure_dir(cfg.io.out_dir);
        Workbench wb = build_workbench(cfg);
        write_config_echo(wb.cfg, cfg.io.out_dir);
        FixedPointResult r = fixed_point_solve(
            make_v0(wb.cfg), make_k0(wb.cfg), make_problem(wb),
            wb.cfg.fixpoint);
        row.ok = true;
        row.converged = r.report.converged;
        row.outer = r.report.outer_iterations;
        row.final_norm = r.sol.final_norm;
        row.final_ratio = r.report.final_ratio;
        row.cost_v = r.sol.cost_v;
        row.cost_u = r.sol.cost_u;
        row.failure = r.report.failure;
      } catch (const Error& e) {
        row.failure = e.what();
      }
    }
  };
  workers = std::max(1, std::min<int>(workers, (int)values.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::ofstream csv(cfg_in.io.out_dir + "/sweep.csv");
  csv << "param, value, converged, outer_iterations, final_norm, "
         "final_ratio, cost_v, cost_u\n";
  bool all_ok = true;
  for (const SweepRow& row : rows) {
    csv << param << ", " << format_number(row.value) << ", "
        << (row.converged ? 1 : 0) << ", " << row.outer << ", "
        << format_number(row.final_norm) << ", "
        << format_number(row.final_ratio) << ", "
        << format_number(row.cost_v) << ", " << format_number(row.cost_u)
        << "\n";
    if (verbose || !row.failure.empty())
      std::cout << param << " = " << format_number(row.value)
                << (row.converged ? ": converged" : ": not converged")
                << (row.failure.empty() ? "" : ", failure: " + row.failure)
                << "\n";
    all_ok = all_ok && row.ok;
  }
  std::cout << "sweep: wrote " << rows.size() << " rows to "
            << cfg_in.io.out_dir << "/sweep.csv\n";
  return all_ok ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed null-control workbench for a simplified "
               "two-equation turbulence model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int workers = 1;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON configuration file")
      ->required();
  app.add_option("--out", out_override, "override io.out_dir");
  app.add_option("--workers", workers, "concurrent runs for sweep");
  app.add_flag("--verbose", verbose, "per-iteration progress output");

  auto* run = app.add_subcommand("run", "execute a controlled run");
  auto* chw = app.add_subcommand("check-weights",
                                 "verify the weight-family inequalities");
  int n_samples = 50;
  auto* car = app.add_subcommand("carleman-test",
                                 "observability ratio distribution");
  car->add_option("-n,--samples", n_samples, "number of random instances");
  auto* orc = app.add_subcommand("oracle-compare",
                                 "dense optimality-system cross-check");
  std::string sweep_param;
  std::vector<double> sweep_values;
  auto* swp = app.add_subcommand("sweep", "repeated runs over a parameter");
  swp->add_option("param", sweep_param, "parameter name")->required();
  swp->add_option("values", sweep_values, "parameter values")->required();

  // global flags are accepted on either side of the subcommand
  for (CLI::App* sub : {run, chw, car, orc, swp}) sub->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;  // bad usage is a config error
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_override.empty()) cfg.io.out_dir = out_override;
    if (run->parsed()) return cmd_run(cfg, verbose);
    if (chw->parsed()) return cmd_check_weights(cfg);
    if (car->parsed()) return cmd_carleman_test(cfg, n_samples);
    if (orc->parsed()) return cmd_oracle_compare(cfg);
    if (swp->parsed())
      return cmd_sweep(cfg, sweep_param, sweep_values, workers, verbose);
  } catch (const Error& e) {
    std::string what = e.what();
    std::cerr << what << "\n";
    return what.rfind("config:", 0) == 0 || what.rfind("io:", 0) == 0
               ? kExitConfig
               : kExitSolver;
  }
  return kExitConfig;
}
