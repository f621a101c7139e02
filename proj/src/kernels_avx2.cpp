#include <immintrin.h>

#include "turbctl/kernels.hpp"

namespace turbctl::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby_avx2(const double* x, double beta, double* y, std::size_t n) {
  __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(vb, vy, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void stencil5_avx2(double* out, const double* mid, const double* lo,
                   const double* hi, std::size_t n, double c, double cx,
                   double cy) {
  __m256d vc = _mm256_set1_pd(c);
  __m256d vcx = _mm256_set1_pd(cx);
  __m256d vcy = _mm256_set1_pd(cy);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d m = _mm256_loadu_pd(mid + i);
    __m256d l = _mm256_loadu_pd(mid + i - 1);
    __m256d r = _mm256_loadu_pd(mid + i + 1);
    __m256d v = _mm256_loadu_pd(lo + i);
    __m256d u = _mm256_loadu_pd(hi + i);
    __m256d acc = _mm256_mul_pd(vc, m);
    acc = _mm256_fmadd_pd(vcx, _mm256_add_pd(l, r), acc);
    acc = _mm256_fmadd_pd(vcy, _mm256_add_pd(v, u), acc);
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i)
    out[i] = c * mid[i] + cx * (mid[i - 1] + mid[i + 1]) + cy * (lo[i] + hi[i]);
}

double weighted_sq_sum_avx2(const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), vx), vx, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

const KernelTable kAvx2 = {dot_avx2,      axpy_avx2,
                           xpby_avx2,     stencil5_avx2,
                           weighted_sq_sum_avx2, "avx2"};

}  // namespace

const KernelTable& avx2() { return kAvx2; }

}  // namespace turbctl::kernels
