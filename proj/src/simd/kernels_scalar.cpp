#include <cmath>

#include "lego/simd/kernels.hpp"
#include "lego/srelu.hpp"

namespace lego::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void srelu(const double* x, double* value, double* deriv, std::size_t n, int q, double rho) {
  for (std::size_t i = 0; i < n; ++i) srelu_main(x[i], q, rho, value[i], deriv[i]);
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamStep& s) {
  const double b1 = s.beta1;
  const double b2 = s.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    param[i] -= s.lr * (m[i] * s.correction1) / (std::sqrt(v[i] * s.correction2) + s.eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &axpy, &dot, &srelu, &adam};
  return table;
}

}  // namespace lego::simd
