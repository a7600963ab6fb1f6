// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "lego/simd/kernels.hpp"
#include "lego/srelu.hpp"

namespace lego::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void srelu(const double* x, double* value, double* deriv, std::size_t n, int q, double rho) {
  const __m256d vrho = _mm256_set1_pd(rho);
  const __m256d vneg_rho = _mm256_set1_pd(-rho);
  const __m256d vq = _mm256_set1_pd(static_cast<double>(q));
  const __m256d vflat = _mm256_set1_pd(rho / q);
  const __m256d vshift = _mm256_set1_pd(rho * (1.0 - 1.0 / q));
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d t = _mm256_div_pd(vx, vrho);
    __m256d p = one;
    for (int k = 1; k < q; ++k) p = _mm256_mul_pd(p, t);
    const __m256d poly = _mm256_div_pd(_mm256_mul_pd(p, vx), vq);
    const __m256d lin = _mm256_sub_pd(vx, vshift);
    const __m256d lo = _mm256_cmp_pd(vx, vneg_rho, _CMP_LE_OQ);
    const __m256d hi = _mm256_cmp_pd(vx, vrho, _CMP_GT_OQ);
    __m256d v = _mm256_blendv_pd(poly, vflat, lo);
    v = _mm256_blendv_pd(v, lin, hi);
    __m256d dv = _mm256_blendv_pd(p, zero, lo);
    dv = _mm256_blendv_pd(dv, one, hi);
    _mm256_storeu_pd(value + i, v);
    _mm256_storeu_pd(deriv + i, dv);
  }
  for (; i < n; ++i) srelu_main(x[i], q, rho, value[i], deriv[i]);
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamStep& s) {
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d k1 = _mm256_set1_pd(s.correction1);
  const __m256d k2 = _mm256_set1_pd(s.correction2);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d vm = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(c1, g));
    const __m256d vv = _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(c2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, k2)), eps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(vm, k1)), denom);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
    param[i] -= s.lr * (m[i] * s.correction1) / (std::sqrt(v[i] * s.correction2) + s.eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", &axpy, &dot, &srelu, &adam};
  return table;
}

}  // namespace lego::simd
