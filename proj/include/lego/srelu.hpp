#pragma once

namespace lego {

enum class SReluVariant { Main, Modified };

/// Smoothed ReLU parameters.
///
/// Main:      rho/q                       x <= -rho
///            x^q / (rho^(q-1) q)         -rho < x <= rho
///            x - rho (1 - 1/q)           x > rho
///
/// Modified adds a shallow negative-slope arm and saturation at `cap`:
///            slope*cap - slope^2/2       x <= -cap
///            -slope*x - slope^2/2        -cap < x <= -slope
///            x^2 / 2                     -slope < x <= 0
///            x^q / (rho^(q-1) q)         0 < x <= rho
///            x - rho (1 - 1/q)           rho < x <= cap
///            cap - rho (1 - 1/q)         x > cap
/// The slope^2/2 offsets make the function continuous at -slope.
struct SReluConfig {
  int q = 4;
  double rho = 0.05;
  SReluVariant variant = SReluVariant::Main;
  double slope = 1e-3;  // varpi
  double cap = 10.0;    // B of the modified variant
  /// Reference constant (d - 1) / (d - 1 + e^cap), recorded alongside the variant.
  double lambda = 0.0;

  /// Throws std::invalid_argument if the configuration is not usable.
  void validate() const;
};

double srelu(double x, const SReluConfig& cfg);
double srelu_prime(double x, const SReluConfig& cfg);

/// Breakpoints of the piecewise definition, ascending.
int srelu_breakpoints(const SReluConfig& cfg, double* out);

/// Main-variant value and derivative (shared by the scalar kernels).
inline void srelu_main(double x, int q, double rho, double& value, double& deriv) {
  if (x <= -rho) {
    value = rho / q;
    deriv = 0.0;
  } else if (x <= rho) {
    // x^(q-1) / rho^(q-1) computed as (x/rho)^(q-1)
    const double t = x / rho;
    double p = 1.0;
    for (int k = 1; k < q; ++k) p *= t;
    deriv = p;
    value = p * x / q;
  } else {
    value = x - rho * (1.0 - 1.0 / q);
    deriv = 1.0;
  }
}

}  // namespace lego
