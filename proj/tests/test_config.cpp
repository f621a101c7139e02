#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "turbctl/config.hpp"
#include "turbctl/initial_data.hpp"
#include "turbctl/report.hpp"

using namespace turbctl;

namespace {

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  RunConfig c = parse_config("{}");
  CHECK(c.grid.nx == 32);
  CHECK(c.grid.ny == 32);
  CHECK(c.grid.nt == 64);
  CHECK(c.grid.T == 1.0);
  CHECK(c.physics.nu == 3e-3);
  CHECK(c.physics.c_nu == 0.025);
  CHECK(c.physics.a == 3.0);
  CHECK(c.lambda_auto);
  CHECK(c.weights.s == 1e-5);
  CHECK(c.weights.exp_cap == 40);
  CHECK(c.eps_pen == 1e-8);
  CHECK(c.cg_tol == 1e-6);
  CHECK(c.cg_maxit == 2400);
  CHECK(c.scheme == TimeScheme::ImplicitEuler);
  CHECK(c.fixpoint.fp_tol == 1e-6);
  CHECK(c.fixpoint.max_outer == 30);
  CHECK(c.fixpoint.max_picard == 25);
  CHECK(c.fixpoint.final_tol == 1e-3);
  CHECK(c.fixpoint.nonlinear_inner);
  CHECK(c.init.v0_kind == "random_eddies");
  CHECK(c.init.v0_amplitude == 1e-3);
  CHECK(c.init.k0_kind == "bump");
  CHECK(c.init.seed == 1);
}

TEST_CASE("config echo round-trips every field") {
  RunConfig c = parse_config(R"({
    "grid": {"nx": 12, "ny": 16, "nt": 24, "Lx": 2.0, "Ly": 1.5, "T": 0.75},
    "regions": {"omega": [0.3, 1.7, 0.2, 1.3], "omega0": [0.6, 1.4, 0.5, 1.0]},
    "physics": {"nu": 4e-3, "a": 2.5, "phi00": 0.2},
    "weights": {"lambda": 3.5, "s": 2e-5, "exp_cap": 60},
    "control": {"eps_pen": 1e-6, "cg_tol": 1e-8, "cg_maxit": 900,
                "scheme": "crank_nicolson"},
    "fixpoint": {"max_picard": 7, "inner": "linear"},
    "io": {"out_dir": "results", "snapshot_every": 4},
    "init": {"v0_kind": "single_eddy", "v0_amplitude": 0.01,
             "k0_kind": "random", "k0_amplitude": 0.05, "seed": 42}
  })");
  RunConfig r = parse_config(config_echo(c));
  CHECK(config_echo(r) == config_echo(c));
  CHECK(r.grid == c.grid);
  CHECK(r.weights.lambda == 3.5);
  CHECK_FALSE(r.lambda_auto);
  CHECK(r.scheme == TimeScheme::CrankNicolson);
  CHECK_FALSE(r.fixpoint.nonlinear_inner);
  CHECK(r.init.seed == 42);
  CHECK(r.io.out_dir == "results");
}

TEST_CASE("unknown keys are rejected with their field path") {
  std::string m = what_of([] { parse_config(R"({"grid": {"nz": 4}})"); });
  CHECK(m.find("grid.nz") != std::string::npos);
  CHECK(m.find("unknown key") != std::string::npos);

  m = what_of([] { parse_config(R"({"solver": {}})"); });
  CHECK(m.find("solver") != std::string::npos);

  m = what_of([] { parse_config(R"({"physics": {"Nu": 1e-2}})"); });
  CHECK(m.find("physics.Nu") != std::string::npos);
}

TEST_CASE("type mismatches name the offending field") {
  std::string m =
      what_of([] { parse_config(R"({"grid": {"nx": "many"}})"); });
  CHECK(m.find("grid.nx") != std::string::npos);
  CHECK(m.find("integer") != std::string::npos);

  m = what_of([] { parse_config(R"({"init": {"seed": -3}})"); });
  CHECK(m.find("init.seed") != std::string::npos);

  m = what_of([] { parse_config(R"({"regions": {"omega": [0, 1]}})"); });
  CHECK(m.find("regions.omega") != std::string::npos);
}

TEST_CASE("constraint violations name the field and the constraint") {
  std::string m =
      what_of([] { parse_config(R"({"physics": {"a": 1.5}})"); });
  CHECK(m.find("physics.a") != std::string::npos);
  CHECK(m.find("a >= 2") != std::string::npos);

  m = what_of([] { parse_config(R"({"grid": {"nx": 4}})"); });
  CHECK(m.find("grid.nx") != std::string::npos);

  // inside omega but missing the domain center
  m = what_of([] {
    parse_config(R"({"regions": {"omega0": [0.25, 0.45, 0.25, 0.45]}})");
  });
  CHECK(m.find("regions.omega0") != std::string::npos);
  CHECK(m.find("center") != std::string::npos);

  m = what_of([] { parse_config(R"({"weights": {"exp_cap": 500}})"); });
  CHECK(m.find("weights.exp_cap") != std::string::npos);
}

TEST_CASE("lambda accepts a number or the literal auto") {
  RunConfig c = parse_config(R"({"weights": {"lambda": "auto"}})");
  CHECK(c.lambda_auto);
  c = parse_config(R"({"weights": {"lambda": 2.25}})");
  CHECK_FALSE(c.lambda_auto);
  CHECK(c.weights.lambda == 2.25);
  std::string m =
      what_of([] { parse_config(R"({"weights": {"lambda": "big"}})"); });
  CHECK(m.find("weights.lambda") != std::string::npos);

  // auto resolution matches the direct profile computation
  RunConfig d = parse_config("{}");
  ScalarField eta0 = build_eta0(d.grid, d.regions);
  double lam = resolve_lambda(d, eta0);
  CHECK(lam >= 1.0);
  CHECK(lam == std::max(find_lambda00(eta0, d.weights.m0), 1.0));
}

TEST_CASE("invalid JSON and unreadable files are reported as config errors") {
  std::string m = what_of([] { parse_config("{ not json"); });
  CHECK(m.find("config:") != std::string::npos);
  CHECK(m.find("invalid JSON") != std::string::npos);
  m = what_of([] { load_config("/nonexistent/path.json"); });
  CHECK(m.find("cannot read") != std::string::npos);
}

TEST_CASE("initial data dispatch follows the init section") {
  RunConfig c = parse_config(
      R"({"grid": {"nx": 8, "ny": 8, "nt": 8},
          "init": {"v0_kind": "zero", "k0_kind": "uniform",
                   "k0_amplitude": 0.3}})");
  CHECK(max_abs(make_v0(c)) == 0.0);
  ScalarField k0 = make_k0(c);
  for (double v : k0.data) CHECK(v == 0.3);

  c.init.v0_kind = "random_eddies";
  c.init.v0_amplitude = 1e-2;
  c.init.seed = 7;
  VelocityField a = make_v0(c);
  VelocityField b = make_v0(c);
  CHECK(norm(c.grid, a) == doctest::Approx(1e-2).epsilon(1e-12));
  for (size_t i = 0; i < a.ux.size(); ++i) CHECK(a.ux[i] == b.ux[i]);
  c.init.seed = 8;
  VelocityField d = make_v0(c);
  double diff = 0.0;
  for (size_t i = 0; i < a.ux.size(); ++i)
    diff = std::max(diff, std::abs(a.ux[i] - d.ux[i]));
  CHECK(diff > 0.0);
}

TEST_CASE("number formatting round-trips exactly and stays compact") {
  for (double v : {0.0, 1.0, -1.5, 1e-3, 3e-3, 0.1, 1.0 / 3.0, 2.5e-308,
                   1.7976931348623157e308, 123456.789, -9.999999999999999e-7}) {
    std::string s = format_number(v);
    CHECK(std::stod(s) == v);
    CHECK(s.size() <= 24);
  }
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("key-value summaries write atomically and read back") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "turbctl_report_test";
  fs::create_directories(dir);
  std::string path = (dir / "summary.txt").string();

  KvRows rows{{"converged", "true"},
              {"final_ratio", format_number(1.643e-4)},
              {"note", "warm start"}};
  write_kv_atomic(path, rows);
  KvRows back = read_kv(path);
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].first == rows[i].first);
    CHECK(back[i].second == rows[i].second);
  }
  // no temporary file is left behind
  size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);

  // overwrite replaces the content completely
  write_kv_atomic(path, {{"k", "v"}});
  CHECK(read_kv(path).size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("time-series table has the fixed header and full rectangle") {
  namespace fs = std::filesystem;
  GridSpec g{8, 8, 4, 1.0, 1.0, 1.0};
  IterTimeseries ts;
  ts.norm_v.assign(g.nt + 1, 0.25);
  ts.norm_grad_v.assign(g.nt + 1, 0.5);
  ts.phi0.assign(g.nt + 1, 0.1);
  ts.cost_v = 1.5;
  ts.cost_u = 2.5;
  ts.final_norm = 1e-6;
  ts.in_G = true;
  std::vector<IterTimeseries> iters{ts, ts};

  fs::path path = fs::temp_directory_path() / "turbctl_timeseries_test.csv";
  write_timeseries_csv(path.string(), g, iters);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == kTimeseriesHeader);
  size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    CHECK(line.find(", ") != std::string::npos);
  }
  CHECK(rows == iters.size() * (size_t)(g.nt + 1));
  fs::remove(path);
}
