#pragma once
// Named, reproducible initial-data generators: seeded stream-function
// eddy superpositions for the velocity and simple nonnegative profiles
// for the turbulent energy.

#include <cstdint>

#include "turbctl/grid.hpp"

namespace turbctl {

// Superposition of low-mode stream-function eddies with seeded random
// coefficients, rescaled so the discrete L2 norm equals amplitude.
// Exactly divergence-free; deterministic per (grid, amplitude, seed).
VelocityField random_eddies(const GridSpec& g, double amplitude,
                            uint64_t seed);

// Single centered eddy (fundamental stream-function mode), L2-normalized
// to amplitude.
VelocityField single_eddy(const GridSpec& g, double amplitude);

// k0 profiles: constant, a smooth centered bump, or a seeded nonnegative
// random mixture of low modes. All are >= 0 with max value = amplitude.
ScalarField k0_uniform(const GridSpec& g, double amplitude);
ScalarField k0_bump(const GridSpec& g, double amplitude);
ScalarField k0_random(const GridSpec& g, double amplitude, uint64_t seed);

}  // namespace turbctl
