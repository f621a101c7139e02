#include "turbctl/kernels.hpp"

namespace turbctl::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_scalar(const double* x, double beta, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void stencil5_scalar(double* out, const double* mid, const double* lo,
                     const double* hi, std::size_t n, double c, double cx,
                     double cy) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = c * mid[i] + cx * (mid[i - 1] + mid[i + 1]) + cy * (lo[i] + hi[i]);
}

double weighted_sq_sum_scalar(const double* w, const double* x,
                              std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

const KernelTable kScalar = {dot_scalar,      axpy_scalar,
                             xpby_scalar,     stencil5_scalar,
                             weighted_sq_sum_scalar, "scalar"};

const KernelTable& pick_active() {
#if defined(TURBCTL_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return avx2();
#endif
#if defined(TURBCTL_HAVE_NEON)
  return neon();
#endif
  return kScalar;
}

}  // namespace

const KernelTable& scalar() { return kScalar; }

const KernelTable& active() {
  static const KernelTable& t = pick_active();
  return t;
}

}  // namespace turbctl::kernels
