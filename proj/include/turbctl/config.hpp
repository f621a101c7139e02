#pragma once
// Run configuration: a sectioned JSON file mapped onto the solver
// parameter structs, with unknown-key detection and field-path error
// messages, plus the seeded initial-data dispatch.

#include <cstdint>
#include <string>

#include "turbctl/control.hpp"
#include "turbctl/fixpoint.hpp"
#include "turbctl/grid.hpp"
#include "turbctl/stokes.hpp"
#include "turbctl/weights.hpp"

namespace turbctl {

struct InitConfig {
  std::string v0_kind = "random_eddies";  // random_eddies | single_eddy | zero
  double v0_amplitude = 1e-3;
  std::string k0_kind = "bump";  // uniform | bump | random
  double k0_amplitude = 0.1;
  uint64_t seed = 1;
};

struct IoConfig {
  std::string out_dir = "out";
  int snapshot_every = 0;  // 0 disables field snapshots
};

struct RunConfig {
  GridSpec grid{32, 32, 64, 1.0, 1.0, 1.0};
  RegionMask regions{Rect{0.2, 0.8, 0.2, 0.8}, Rect{0.35, 0.65, 0.35, 0.65}};
  PhysParams physics;
  WeightParams weights;
  bool lambda_auto = true;  // weights.lambda = "auto"
  double eps_pen = 1e-8;
  double cg_tol = 1e-6;
  int cg_maxit = 2400;
  TimeScheme scheme = TimeScheme::ImplicitEuler;
  FixpointParams fixpoint;
  IoConfig io;
  InitConfig init;

  // throws Error naming the offending field path and the constraint
  void validate() const;
};

// Parses JSON text / a JSON file into RunConfig. Unknown keys, type
// mismatches and constraint violations raise Error with the field path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical serialization of the effective configuration (after auto
// resolution the caller may have applied); parse_config(config_echo(c))
// reproduces c.
std::string config_echo(const RunConfig& c);

// Resolves weights.lambda = auto via find_lambda00 on the given eta0.
double resolve_lambda(const RunConfig& c, const ScalarField& eta0);

// Seeded initial-data dispatch per the init section.
VelocityField make_v0(const RunConfig& c);
ScalarField make_k0(const RunConfig& c);

}  // namespace turbctl
