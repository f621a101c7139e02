#pragma once
// Matrix-free conjugate gradients on raw coefficient vectors.

#include <cmath>
#include <cstddef>
#include <vector>

#include "turbctl/kernels.hpp"

namespace turbctl {

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// Solves A x = b for SPD A given by apply(in, out). x holds the initial
// guess on entry and the solution on exit.
template <typename Apply>
CgResult conjugate_gradient(const Apply& apply, const std::vector<double>& b,
                            std::vector<double>& x, double rel_tol,
                            int max_iter) {
  namespace k = kernels;
  const std::size_t n = b.size();
  std::vector<double> r(n), p(n), Ap(n);

  apply(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  p = r;

  double bnorm = std::sqrt(k::dot(b.data(), b.data(), n));
  if (bnorm == 0.0) bnorm = 1.0;
  double rr = k::dot(r.data(), r.data(), n);

  CgResult res;
  res.rel_residual = std::sqrt(rr) / bnorm;
  if (res.rel_residual <= rel_tol) {
    res.converged = true;
    return res;
  }
  for (int it = 0; it < max_iter; ++it) {
    apply(p, Ap);
    double pAp = k::dot(p.data(), Ap.data(), n);
    if (pAp <= 0.0) break;  // loss of positivity, bail with diagnostics
    double alpha = rr / pAp;
    k::axpy(alpha, p.data(), x.data(), n);
    k::axpy(-alpha, Ap.data(), r.data(), n);
    double rr_new = k::dot(r.data(), r.data(), n);
    res.iterations = it + 1;
    res.rel_residual = std::sqrt(rr_new) / bnorm;
    if (res.rel_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    k::xpby(r.data(), rr_new / rr, p.data(), n);
    rr = rr_new;
  }
  return res;
}

}  // namespace turbctl
