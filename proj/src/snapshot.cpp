#include "turbctl/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace turbctl {

static_assert(std::endian::native == std::endian::little,
              "snapshot payload assumes a little-endian host");

namespace {

void write_header(const std::string& base, const GridSpec& g,
                  const std::string& kind, double time, size_t count) {
  std::ofstream h(base + ".meta");
  if (!h) throw Error("snapshot: cannot open " + base + ".meta");
  h.precision(17);
  h << "kind " << kind << "\n"
    << "nx " << g.nx << "\n"
    << "ny " << g.ny << "\n"
    << "dx " << g.dx() << "\n"
    << "dy " << g.dy() << "\n"
    << "time " << time << "\n"
    << "count " << count << "\n"
    << "layout row_major_float64_le\n";
}

void write_payload(const std::string& base, const double* p, size_t n) {
  std::ofstream raw(base + ".raw", std::ios::binary);
  if (!raw) throw Error("snapshot: cannot open " + base + ".raw");
  raw.write(reinterpret_cast<const char*>(p), (std::streamsize)(n * sizeof(double)));
}

std::map<std::string, std::string> read_header(const std::string& base) {
  std::ifstream h(base + ".meta");
  if (!h) throw Error("snapshot: cannot open " + base + ".meta");
  std::map<std::string, std::string> kv;
  std::string key, value;
  while (h >> key >> value) kv[key] = value;
  return kv;
}

std::vector<double> read_payload(const std::string& base, size_t n) {
  std::ifstream raw(base + ".raw", std::ios::binary);
  if (!raw) throw Error("snapshot: cannot open " + base + ".raw");
  std::vector<double> v(n);
  raw.read(reinterpret_cast<char*>(v.data()), (std::streamsize)(n * sizeof(double)));
  if ((size_t)raw.gcount() != n * sizeof(double))
    throw Error("snapshot: short payload in " + base + ".raw");
  return v;
}

GridSpec grid_from(const std::map<std::string, std::string>& kv) {
  GridSpec g;
  g.nx = std::stoi(kv.at("nx"));
  g.ny = std::stoi(kv.at("ny"));
  g.Lx = std::stod(kv.at("dx")) * g.nx;
  g.Ly = std::stod(kv.at("dy")) * g.ny;
  g.nt = 8;
  g.T = 1.0;  // time axis not part of a single snapshot
  return g;
}

}  // namespace

void write_snapshot(const std::string& base, const GridSpec& g,
                    const ScalarField& f, const std::string& kind,
                    double time) {
  write_header(base, g, kind, time, f.size());
  write_payload(base, f.data.data(), f.size());
}

void write_snapshot(const std::string& base, const GridSpec& g,
                    const VelocityField& v, const std::string& kind,
                    double time) {
  write_header(base, g, kind, time, v.ux.size() + v.uy.size());
  std::vector<double> buf;
  buf.reserve(v.ux.size() + v.uy.size());
  buf.insert(buf.end(), v.ux.begin(), v.ux.end());
  buf.insert(buf.end(), v.uy.begin(), v.uy.end());
  write_payload(base, buf.data(), buf.size());
}

ScalarField read_scalar_snapshot(const std::string& base, GridSpec* g_out) {
  auto kv = read_header(base);
  GridSpec g = grid_from(kv);
  ScalarField f(g.nx, g.ny);
  f.data = read_payload(base, (size_t)g.nx * g.ny);
  if (g_out) *g_out = g;
  return f;
}

VelocityField read_velocity_snapshot(const std::string& base, GridSpec* g_out) {
  auto kv = read_header(base);
  GridSpec g = grid_from(kv);
  VelocityField v(g.nx, g.ny);
  auto buf = read_payload(base, v.ux.size() + v.uy.size());
  std::memcpy(v.ux.data(), buf.data(), v.ux.size() * sizeof(double));
  std::memcpy(v.uy.data(), buf.data() + v.ux.size(), v.uy.size() * sizeof(double));
  if (g_out) *g_out = g;
  return v;
}

void write_vtk(const std::string& path, const GridSpec& g,
               const ScalarField& f, const std::string& name) {
  std::ofstream out(path);
  if (!out) throw Error("vtk: cannot open " + path);
  out << "# vtk DataFile Version 2.0\n"
      << name << "\nASCII\nDATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << g.nx << " " << g.ny << " 1\n"
      << "ORIGIN " << 0.5 * g.dx() << " " << 0.5 * g.dy() << " 0\n"
      << "SPACING " << g.dx() << " " << g.dy() << " 1\n"
      << "POINT_DATA " << (size_t)g.nx * g.ny << "\n"
      << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  out.precision(12);
  for (double v : f.data) out << v << "\n";
}

}  // namespace turbctl
