#pragma once
// Field persistence: a key-value text header next to a raw little-endian
// float64 payload, plus legacy-VTK export for visualization.

#include <string>

#include "turbctl/grid.hpp"

namespace turbctl {

// Writes <base>.meta (text header) and <base>.raw (row-major float64).
void write_snapshot(const std::string& base, const GridSpec& g,
                    const ScalarField& f, const std::string& kind,
                    double time);
// Velocity snapshots store ux then uy in one payload.
void write_snapshot(const std::string& base, const GridSpec& g,
                    const VelocityField& v, const std::string& kind,
                    double time);

ScalarField read_scalar_snapshot(const std::string& base, GridSpec* g_out = nullptr);
VelocityField read_velocity_snapshot(const std::string& base, GridSpec* g_out = nullptr);

// Legacy VTK structured-points file with the scalar as point data.
void write_vtk(const std::string& path, const GridSpec& g,
               const ScalarField& f, const std::string& name);

}  // namespace turbctl
