#pragma once
// Run artifacts: structured key-value summary files (written atomically)
// and the comma-separated time-series table with its fixed header.

#include <string>
#include <utility>
#include <vector>

#include "turbctl/fixpoint.hpp"
#include "turbctl/grid.hpp"

namespace turbctl {

// Deterministic shortest-round-trip formatting used in every artifact.
std::string format_number(double v);

using KvRows = std::vector<std::pair<std::string, std::string>>;

// Writes "key = value" lines to a temporary file in the same directory
// and renames it into place, so readers never observe a partial summary.
void write_kv_atomic(const std::string& path, const KvRows& rows);

KvRows read_kv(const std::string& path);

inline constexpr const char* kTimeseriesHeader =
    "iter, t, norm_v, norm_grad_v, phi0, cost_v, cost_u, final_norm, in_G";

// One row per (outer iteration, time node); per-iteration scalars are
// repeated on each of that iteration's rows.
void write_timeseries_csv(const std::string& path, const GridSpec& g,
                          const std::vector<IterTimeseries>& iters);

}  // namespace turbctl
