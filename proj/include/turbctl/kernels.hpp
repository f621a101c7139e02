#pragma once
// Data-parallel inner loops used by the field operators and the iterative
// solvers. Every kernel has a scalar reference implementation plus optional
// SIMD variants (AVX2 on x86-64, NEON on arm64) selected once at startup.
// The dispatched variants must be bit-compatible in the sense tested by
// tests/test_kernels.cpp: same result to within reassociation rounding.

#include <cstddef>

namespace turbctl::kernels {

struct KernelTable {
  // r = sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha*x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] = x[i] + beta*y[i]
  void (*xpby)(const double* x, double beta, double* y, std::size_t n);
  // out[i] = c*mid[i] + cx*(mid[i-1]+mid[i+1]) + cy*(lo[i]+hi[i])
  // mid must have valid entries at [-1] and [n].
  void (*stencil5)(double* out, const double* mid, const double* lo,
                   const double* hi, std::size_t n, double c, double cx,
                   double cy);
  // r = sum_i w[i]*x[i]*x[i]
  double (*weighted_sq_sum)(const double* w, const double* x, std::size_t n);
  const char* name;
};

// Scalar reference table (always available).
const KernelTable& scalar();

// Best table for the running CPU, chosen once.
const KernelTable& active();

#if defined(TURBCTL_HAVE_AVX2)
const KernelTable& avx2();
#endif
#if defined(TURBCTL_HAVE_NEON)
const KernelTable& neon();
#endif

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void xpby(const double* x, double beta, double* y, std::size_t n) {
  active().xpby(x, beta, y, n);
}
inline void stencil5(double* out, const double* mid, const double* lo,
                     const double* hi, std::size_t n, double c, double cx,
                     double cy) {
  active().stencil5(out, mid, lo, hi, n, c, cx, cy);
}
inline double weighted_sq_sum(const double* w, const double* x,
                              std::size_t n) {
  return active().weighted_sq_sum(w, x, n);
}

}  // namespace turbctl::kernels
