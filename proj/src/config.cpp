#include "turbctl/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "turbctl/initial_data.hpp"

namespace turbctl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error("config: " + path + ": " + msg);
}

double num(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

uint64_t uinteger(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<int64_t>() < 0)
    fail(path, "expected a nonnegative integer");
  return v.get<uint64_t>();
}

std::string str(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

Rect rect(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 4) fail(path, "expected [x0, x1, y0, y1]");
  Rect r;
  r.x0 = num(v[0], path);
  r.x1 = num(v[1], path);
  r.y0 = num(v[2], path);
  r.y1 = num(v[3], path);
  return r;
}

using Handlers = std::map<std::string, std::function<void(const json&)>>;

void apply_section(const json& sec, const std::string& name,
                   const Handlers& fields) {
  if (!sec.is_object()) fail(name, "expected an object section");
  for (const auto& [key, value] : sec.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) fail(name + "." + key, "unknown key");
    it->second(value);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (grid.nx < 6 || grid.ny < 6) fail("grid.nx", "nx, ny must be >= 6");
  if (grid.nt < 8) fail("grid.nt", "must be >= 8");
  if (grid.Lx <= 0 || grid.Ly <= 0) fail("grid.Lx", "Lx, Ly must be > 0");
  if (grid.T <= 0) fail("grid.T", "must be > 0");

  if (physics.nu <= 0) fail("physics.nu", "must be > 0");
  if (physics.c_nu <= 0) fail("physics.c_nu", "must be > 0");
  if (physics.kappa <= 0) fail("physics.kappa", "must be > 0");
  if (physics.c0 <= 0) fail("physics.c0", "must be > 0");
  if (physics.a < 2.0) fail("physics.a", "the constraint a >= 2 is violated");
  if (physics.phi00 <= 0) fail("physics.phi00", "must be > 0");
  if (physics.alpha_reg <= 0) fail("physics.alpha_reg", "must be > 0");

  if (!lambda_auto && weights.lambda <= 0)
    fail("weights.lambda", "must be > 0 or \"auto\"");
  if (weights.s <= 0) fail("weights.s", "must be > 0");
  if (weights.m0 <= 0) fail("weights.m0", "must be > 0");
  if (weights.exp_cap < 30 || weights.exp_cap > 300)
    fail("weights.exp_cap", "must lie in [30, 300]");

  if (eps_pen <= 0) fail("control.eps_pen", "must be > 0");
  if (cg_tol <= 0) fail("control.cg_tol", "must be > 0");
  if (cg_maxit < 1) fail("control.cg_maxit", "must be >= 1");

  if (fixpoint.fp_tol <= 0) fail("fixpoint.fp_tol", "must be > 0");
  if (fixpoint.picard_tol <= 0) fail("fixpoint.picard_tol", "must be > 0");
  if (fixpoint.max_outer < 1) fail("fixpoint.max_outer", "must be >= 1");
  if (fixpoint.max_picard < 1) fail("fixpoint.max_picard", "must be >= 1");
  if (fixpoint.final_tol <= 0) fail("fixpoint.final_tol", "must be > 0");
  if (fixpoint.eps_small <= 0) fail("fixpoint.eps_small", "must be > 0");

  if (io.out_dir.empty()) fail("io.out_dir", "must be nonempty");
  if (io.snapshot_every < 0) fail("io.snapshot_every", "must be >= 0");

  if (init.v0_kind != "random_eddies" && init.v0_kind != "single_eddy" &&
      init.v0_kind != "zero")
    fail("init.v0_kind", "must be random_eddies, single_eddy or zero");
  if (init.v0_amplitude < 0) fail("init.v0_amplitude", "must be >= 0");
  if (init.k0_kind != "uniform" && init.k0_kind != "bump" &&
      init.k0_kind != "random")
    fail("init.k0_kind", "must be uniform, bump or random");
  if (init.k0_amplitude < 0) fail("init.k0_amplitude", "must be >= 0");

  try {
    regions.validate(grid);
  } catch (const Error& e) {
    fail("regions", e.what());
  }
  // the weight construction additionally needs the domain center in omega0
  if (!regions.omega0.contains(0.5 * grid.Lx, 0.5 * grid.Ly))
    fail("regions.omega0", "must contain the domain center");
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw Error("config: top level must be an object");

  RunConfig c;
  Handlers sections{
      {"grid",
       [&](const json& s) {
         apply_section(
             s, "grid",
             {{"nx", [&](const json& v) { c.grid.nx = integer(v, "grid.nx"); }},
              {"ny", [&](const json& v) { c.grid.ny = integer(v, "grid.ny"); }},
              {"nt", [&](const json& v) { c.grid.nt = integer(v, "grid.nt"); }},
              {"Lx", [&](const json& v) { c.grid.Lx = num(v, "grid.Lx"); }},
              {"Ly", [&](const json& v) { c.grid.Ly = num(v, "grid.Ly"); }},
              {"T", [&](const json& v) { c.grid.T = num(v, "grid.T"); }}});
       }},
      {"regions",
       [&](const json& s) {
         apply_section(s, "regions",
                       {{"omega",
                         [&](const json& v) {
                           c.regions.omega = rect(v, "regions.omega");
                         }},
                        {"omega0", [&](const json& v) {
                           c.regions.omega0 = rect(v, "regions.omega0");
                         }}});
       }},
      {"physics",
       [&](const json& s) {
         apply_section(
             s, "physics",
             {{"nu",
               [&](const json& v) { c.physics.nu = num(v, "physics.nu"); }},
              {"c_nu",
               [&](const json& v) { c.physics.c_nu = num(v, "physics.c_nu"); }},
              {"kappa",
               [&](const json& v) {
                 c.physics.kappa = num(v, "physics.kappa");
               }},
              {"c0",
               [&](const json& v) { c.physics.c0 = num(v, "physics.c0"); }},
              {"a", [&](const json& v) { c.physics.a = num(v, "physics.a"); }},
              {"phi00",
               [&](const json& v) {
                 c.physics.phi00 = num(v, "physics.phi00");
               }},
              {"alpha_reg", [&](const json& v) {
                 c.physics.alpha_reg = num(v, "physics.alpha_reg");
               }}});
       }},
      {"weights",
       [&](const json& s) {
         apply_section(
             s, "weights",
             {{"lambda",
               [&](const json& v) {
                 if (v.is_string()) {
                   if (v.get<std::string>() != "auto")
                     fail("weights.lambda", "must be a number or \"auto\"");
                   c.lambda_auto = true;
                 } else {
                   c.lambda_auto = false;
                   c.weights.lambda = num(v, "weights.lambda");
                 }
               }},
              {"s",
               [&](const json& v) { c.weights.s = num(v, "weights.s"); }},
              {"m0",
               [&](const json& v) { c.weights.m0 = num(v, "weights.m0"); }},
              {"exp_cap", [&](const json& v) {
                 c.weights.exp_cap = num(v, "weights.exp_cap");
               }}});
       }},
      {"control",
       [&](const json& s) {
         apply_section(
             s, "control",
             {{"eps_pen",
               [&](const json& v) { c.eps_pen = num(v, "control.eps_pen"); }},
              {"cg_tol",
               [&](const json& v) { c.cg_tol = num(v, "control.cg_tol"); }},
              {"cg_maxit",
               [&](const json& v) {
                 c.cg_maxit = integer(v, "control.cg_maxit");
               }},
              {"scheme", [&](const json& v) {
                 std::string sc = str(v, "control.scheme");
                 if (sc == "implicit_euler")
                   c.scheme = TimeScheme::ImplicitEuler;
                 else if (sc == "crank_nicolson")
                   c.scheme = TimeScheme::CrankNicolson;
                 else
                   fail("control.scheme",
                        "must be implicit_euler or crank_nicolson");
               }}});
       }},
      {"fixpoint",
       [&](const json& s) {
         apply_section(
             s, "fixpoint",
             {{"fp_tol",
               [&](const json& v) {
                 c.fixpoint.fp_tol = num(v, "fixpoint.fp_tol");
               }},
              {"picard_tol",
               [&](const json& v) {
                 c.fixpoint.picard_tol = num(v, "fixpoint.picard_tol");
               }},
              {"max_outer",
               [&](const json& v) {
                 c.fixpoint.max_outer = integer(v, "fixpoint.max_outer");
               }},
              {"max_picard",
               [&](const json& v) {
                 c.fixpoint.max_picard = integer(v, "fixpoint.max_picard");
               }},
              {"final_tol",
               [&](const json& v) {
                 c.fixpoint.final_tol = num(v, "fixpoint.final_tol");
               }},
              {"eps_small",
               [&](const json& v) {
                 c.fixpoint.eps_small = num(v, "fixpoint.eps_small");
               }},
              {"inner", [&](const json& v) {
                 std::string in = str(v, "fixpoint.inner");
                 if (in == "nonlinear")
                   c.fixpoint.nonlinear_inner = true;
                 else if (in == "linear")
                   c.fixpoint.nonlinear_inner = false;
                 else
                   fail("fixpoint.inner", "must be nonlinear or linear");
               }}});
       }},
      {"io",
       [&](const json& s) {
         apply_section(
             s, "io",
             {{"out_dir",
               [&](const json& v) { c.io.out_dir = str(v, "io.out_dir"); }},
              {"snapshot_every", [&](const json& v) {
                 c.io.snapshot_every = integer(v, "io.snapshot_every");
               }}});
       }},
      {"init", [&](const json& s) {
         apply_section(
             s, "init",
             {{"v0_kind",
               [&](const json& v) { c.init.v0_kind = str(v, "init.v0_kind"); }},
              {"v0_amplitude",
               [&](const json& v) {
                 c.init.v0_amplitude = num(v, "init.v0_amplitude");
               }},
              {"k0_kind",
               [&](const json& v) { c.init.k0_kind = str(v, "init.k0_kind"); }},
              {"k0_amplitude",
               [&](const json& v) {
                 c.init.k0_amplitude = num(v, "init.k0_amplitude");
               }},
              {"seed", [&](const json& v) {
                 c.init.seed = uinteger(v, "init.seed");
               }}});
       }}};
  apply_section(root, "(top level)", sections);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const RunConfig& c) {
  json root;
  root["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"nt", c.grid.nt},
                  {"Lx", c.grid.Lx}, {"Ly", c.grid.Ly}, {"T", c.grid.T}};
  root["regions"] = {
      {"omega",
       {c.regions.omega.x0, c.regions.omega.x1, c.regions.omega.y0,
        c.regions.omega.y1}},
      {"omega0",
       {c.regions.omega0.x0, c.regions.omega0.x1, c.regions.omega0.y0,
        c.regions.omega0.y1}}};
  root["physics"] = {
      {"nu", c.physics.nu},       {"c_nu", c.physics.c_nu},
      {"kappa", c.physics.kappa}, {"c0", c.physics.c0},
      {"a", c.physics.a},         {"phi00", c.physics.phi00},
      {"alpha_reg", c.physics.alpha_reg}};
  root["weights"] = {{"s", c.weights.s},
                     {"m0", c.weights.m0},
                     {"exp_cap", c.weights.exp_cap}};
  if (c.lambda_auto)
    root["weights"]["lambda"] = "auto";
  else
    root["weights"]["lambda"] = c.weights.lambda;
  root["control"] = {
      {"eps_pen", c.eps_pen},
      {"cg_tol", c.cg_tol},
      {"cg_maxit", c.cg_maxit},
      {"scheme", c.scheme == TimeScheme::ImplicitEuler ? "implicit_euler"
                                                       : "crank_nicolson"}};
  root["fixpoint"] = {
      {"fp_tol", c.fixpoint.fp_tol},
      {"picard_tol", c.fixpoint.picard_tol},
      {"max_outer", c.fixpoint.max_outer},
      {"max_picard", c.fixpoint.max_picard},
      {"final_tol", c.fixpoint.final_tol},
      {"eps_small", c.fixpoint.eps_small},
      {"inner", c.fixpoint.nonlinear_inner ? "nonlinear" : "linear"}};
  root["io"] = {{"out_dir", c.io.out_dir},
                {"snapshot_every", c.io.snapshot_every}};
  root["init"] = {{"v0_kind", c.init.v0_kind},
                  {"v0_amplitude", c.init.v0_amplitude},
                  {"k0_kind", c.init.k0_kind},
                  {"k0_amplitude", c.init.k0_amplitude},
                  {"seed", c.init.seed}};
  return root.dump(2) + "\n";
}

double resolve_lambda(const RunConfig& c, const ScalarField& eta0) {
  if (!c.lambda_auto) return c.weights.lambda;
  return std::max(find_lambda00(eta0, c.weights.m0), 1.0);
}

VelocityField make_v0(const RunConfig& c) {
  if (c.init.v0_kind == "random_eddies")
    return random_eddies(c.grid, c.init.v0_amplitude, c.init.seed);
  if (c.init.v0_kind == "single_eddy")
    return single_eddy(c.grid, c.init.v0_amplitude);
  return VelocityField(c.grid);  // zero
}

ScalarField make_k0(const RunConfig& c) {
  if (c.init.k0_kind == "uniform")
    return k0_uniform(c.grid, c.init.k0_amplitude);
  if (c.init.k0_kind == "bump") return k0_bump(c.grid, c.init.k0_amplitude);
  return k0_random(c.grid, c.init.k0_amplitude, c.init.seed);
}

}  // namespace turbctl
