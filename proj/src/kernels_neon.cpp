#include <arm_neon.h>

#include "turbctl/kernels.hpp"

namespace turbctl::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_neon(const double* x, double beta, double* y, std::size_t n) {
  float64x2_t vb = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), vb, vld1q_f64(y + i)));
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void stencil5_neon(double* out, const double* mid, const double* lo,
                   const double* hi, std::size_t n, double c, double cx,
                   double cy) {
  float64x2_t vc = vdupq_n_f64(c);
  float64x2_t vcx = vdupq_n_f64(cx);
  float64x2_t vcy = vdupq_n_f64(cy);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t m = vld1q_f64(mid + i);
    float64x2_t lr = vaddq_f64(vld1q_f64(mid + i - 1), vld1q_f64(mid + i + 1));
    float64x2_t vu = vaddq_f64(vld1q_f64(lo + i), vld1q_f64(hi + i));
    float64x2_t acc = vmulq_f64(vc, m);
    acc = vfmaq_f64(acc, vcx, lr);
    acc = vfmaq_f64(acc, vcy, vu);
    vst1q_f64(out + i, acc);
  }
  for (; i < n; ++i)
    out[i] = c * mid[i] + cx * (mid[i - 1] + mid[i + 1]) + cy * (lo[i] + hi[i]);
}

double weighted_sq_sum_neon(const double* w, const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vx = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), vx), vx);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

const KernelTable kNeon = {dot_neon,      axpy_neon,
                           xpby_neon,     stencil5_neon,
                           weighted_sq_sum_neon, "neon"};

}  // namespace

const KernelTable& neon() { return kNeon; }

}  // namespace turbctl::kernels
