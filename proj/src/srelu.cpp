#include "lego/srelu.hpp"

#include <stdexcept>

namespace lego {

void SReluConfig::validate() const {
  if (q < 4 || q % 2 != 0) throw std::invalid_argument("sReLU exponent q must be an even integer >= 4");
  if (!(rho > 0.0)) throw std::invalid_argument("sReLU width rho must be positive");
  if (variant == SReluVariant::Modified) {
    if (!(slope > 0.0)) throw std::invalid_argument("modified sReLU needs a positive slope");
    if (!(cap > rho)) throw std::invalid_argument("modified sReLU needs cap > rho");
    if (!(cap > slope)) throw std::invalid_argument("modified sReLU needs cap > slope");
  }
}

namespace {

double poly(double x, int q, double rho) {
  const double t = x / rho;
  double p = 1.0;
  for (int k = 1; k < q; ++k) p *= t;
  return p * x / q;
}

double poly_prime(double x, int q, double rho) {
  const double t = x / rho;
  double p = 1.0;
  for (int k = 1; k < q; ++k) p *= t;
  return p;
}

}  // namespace

double srelu(double x, const SReluConfig& cfg) {
  const double q = cfg.q;
  if (cfg.variant == SReluVariant::Main) {
    double v = 0.0;
    double dv = 0.0;
    srelu_main(x, cfg.q, cfg.rho, v, dv);
    return v;
  }
  const double w = cfg.slope;
  const double b = cfg.cap;
  if (x <= -b) return w * b - 0.5 * w * w;
  if (x <= -w) return -w * x - 0.5 * w * w;
  if (x <= 0.0) return 0.5 * x * x;
  if (x <= cfg.rho) return poly(x, cfg.q, cfg.rho);
  if (x <= b) return x - cfg.rho * (1.0 - 1.0 / q);
  return b - cfg.rho * (1.0 - 1.0 / q);
}

double srelu_prime(double x, const SReluConfig& cfg) {
  if (cfg.variant == SReluVariant::Main) {
    double v = 0.0;
    double dv = 0.0;
    srelu_main(x, cfg.q, cfg.rho, v, dv);
    return dv;
  }
  const double w = cfg.slope;
  const double b = cfg.cap;
  if (x <= -b) return 0.0;
  if (x <= -w) return -w;
  if (x <= 0.0) return x;
  if (x <= cfg.rho) return poly_prime(x, cfg.q, cfg.rho);
  if (x <= b) return 1.0;
  return 0.0;
}

int srelu_breakpoints(const SReluConfig& cfg, double* out) {
  if (cfg.variant == SReluVariant::Main) {
    out[0] = -cfg.rho;
    out[1] = cfg.rho;
    return 2;
  }
  out[0] = -cfg.cap;
  out[1] = -cfg.slope;
  out[2] = 0.0;
  out[3] = cfg.rho;
  out[4] = cfg.cap;
  return 5;
}

}  // namespace lego
