#include "turbctl/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace turbctl {

std::string format_number(double v) {
  // shortest representation that round-trips a double
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  return "nan";
}

void write_kv_atomic(const std::string& path, const KvRows& rows) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("report: cannot write " + tmp);
    for (const auto& [k, v] : rows) out << k << " = " << v << "\n";
    out.flush();
    if (!out) throw Error("report: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("report: cannot rename " + tmp + " to " + path);
}

KvRows read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("report: cannot read " + path);
  KvRows rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t eq = line.find(" = ");
    if (eq == std::string::npos)
      throw Error("report: malformed line in " + path + ": " + line);
    rows.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return rows;
}

void write_timeseries_csv(const std::string& path, const GridSpec& g,
                          const std::vector<IterTimeseries>& iters) {
  std::ostringstream out;
  out << kTimeseriesHeader << "\n";
  const double dt = g.dt();
  for (size_t it = 0; it < iters.size(); ++it) {
    const IterTimeseries& ts = iters[it];
    for (int n = 0; n <= g.nt; ++n) {
      out << (it + 1) << ", " << format_number(n * dt) << ", "
          << format_number(ts.norm_v[n]) << ", "
          << format_number(ts.norm_grad_v[n]) << ", "
          << format_number(ts.phi0[n]) << ", " << format_number(ts.cost_v)
          << ", " << format_number(ts.cost_u) << ", "
          << format_number(ts.final_norm) << ", " << (ts.in_G ? 1 : 0)
          << "\n";
    }
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error("report: cannot write " + tmp);
    f << out.str();
    f.flush();
    if (!f) throw Error("report: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("report: cannot rename " + tmp + " to " + path);
}

}  // namespace turbctl
