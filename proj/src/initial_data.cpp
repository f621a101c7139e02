#include "turbctl/initial_data.hpp"

#include <cmath>
#include <random>

namespace turbctl {

namespace {

constexpr int kModes = 3;  // low-mode band of the eddy generator

}  // namespace

VelocityField random_eddies(const GridSpec& g, double amplitude,
                            uint64_t seed) {
  g.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double c[kModes][kModes];
  for (int m = 0; m < kModes; ++m)
    for (int n = 0; n < kModes; ++n) c[m][n] = d(rng);
  auto psi = [&](double x, double y) {
    double s = 0.0;
    for (int m = 0; m < kModes; ++m)
      for (int n = 0; n < kModes; ++n)
        s += c[m][n] * std::sin((m + 1) * M_PI * x / g.Lx) *
             std::sin((n + 1) * M_PI * y / g.Ly);
    return s;
  };
  VelocityField v = velocity_from_stream(g, psi);
  double nv = norm(g, v);
  if (nv > 0) scale(amplitude / nv, v);
  return v;
}

VelocityField single_eddy(const GridSpec& g, double amplitude) {
  g.validate();
  auto psi = [&](double x, double y) {
    return std::sin(M_PI * x / g.Lx) * std::sin(M_PI * y / g.Ly);
  };
  VelocityField v = velocity_from_stream(g, psi);
  double nv = norm(g, v);
  if (nv > 0) scale(amplitude / nv, v);
  return v;
}

ScalarField k0_uniform(const GridSpec& g, double amplitude) {
  g.validate();
  if (amplitude < 0) throw Error("k0: amplitude must be >= 0");
  ScalarField f(g);
  for (auto& x : f.data) x = amplitude;
  return f;
}

ScalarField k0_bump(const GridSpec& g, double amplitude) {
  g.validate();
  if (amplitude < 0) throw Error("k0: amplitude must be >= 0");
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.at(i, j) = amplitude * std::sin(M_PI * g.xc(i) / g.Lx) *
                   std::sin(M_PI * g.yc(j) / g.Ly);
  return f;
}

ScalarField k0_random(const GridSpec& g, double amplitude, uint64_t seed) {
  g.validate();
  if (amplitude < 0) throw Error("k0: amplitude must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  double c[kModes][kModes];
  double csum = 0.0;
  for (int m = 0; m < kModes; ++m)
    for (int n = 0; n < kModes; ++n) {
      c[m][n] = d(rng);
      csum += c[m][n];
    }
  ScalarField f(g);
  double fmax = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double s = 0.0;
      for (int m = 0; m < kModes; ++m)
        for (int n = 0; n < kModes; ++n)
          s += c[m][n] * std::sin((m + 1) * M_PI * g.xc(i) / g.Lx) *
               std::sin((n + 1) * M_PI * g.yc(j) / g.Ly);
      // shift by the coefficient mass so the mixture stays nonnegative
      f.at(i, j) = s + csum;
      fmax = std::max(fmax, f.at(i, j));
    }
  if (fmax > 0)
    for (auto& x : f.data) x *= amplitude / fmax;
  return f;
}

}  // namespace turbctl
