#pragma once

#include <cstddef>

namespace lego::simd {

/// Bias-corrected Adam coefficients for one step.
struct AdamStep {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double correction1 = 1.0;  // 1 / (1 - beta1^t)
  double correction2 = 1.0;  // 1 / (1 - beta2^t)
};

// Inner loops of the model. Every kernel has a portable scalar reference and
// optional vectorized variants; the variants must agree with the reference to
// rounding (they may reassociate sums and fuse multiply-adds).
struct KernelTable {
  const char* name;

  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// Main smoothed ReLU and its derivative, elementwise.
  void (*srelu)(const double* x, double* value, double* deriv, std::size_t n, int q, double rho);
  /// Adam update of param from grad with moment buffers m and v.
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n, const AdamStep& step);
};

const KernelTable& scalar_kernels();
/// AVX2+FMA table, or nullptr when not compiled in or not supported by the CPU.
const KernelTable* avx2_kernels();

/// The table used by the library: the widest variant the CPU supports.
const KernelTable& kernels();

}  // namespace lego::simd
