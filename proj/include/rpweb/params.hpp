#pragma once

#include <cmath>
#include <stdexcept>

namespace rpw {

// Model constants. theta is the half opening angle of the search quadrangle,
// n the scale parameter (used as a positive real), alpha the inner radius
// fraction, and a_exp < b_exp the two angular-window exponents.
struct ModelParams {
  double theta = 0.0;
  double n = 0.0;
  double alpha = 0.0;
  double a_exp = 0.0;
  double b_exp = 0.0;

  double c = 0.0;    // tan(theta)
  double tau = 0.0;  // 1/alpha - 1

  ModelParams() = default;
  ModelParams(double theta_, double n_, double alpha_, double a_, double b_)
      : theta(theta_), n(n_), alpha(alpha_), a_exp(a_), b_exp(b_) {
    validate();
    c = std::tan(theta);
    tau = 1.0 / alpha - 1.0;
  }

  static ModelParams defaults(double n_ = 1e4) {
    return ModelParams(std::atan(1.0) * 2.0 / 2.0, n_, 0.5, 0.3, 0.45);  // theta = pi/4
  }

  void validate() const {
    constexpr double half_pi = 1.57079632679489661923;
    if (!(theta > 0.0 && theta < half_pi)) throw std::invalid_argument("theta must be in (0, pi/2)");
    if (!(n > 0.0)) throw std::invalid_argument("n must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
    if (!(a_exp > 0.25 && a_exp < 0.5)) throw std::invalid_argument("a_exp must be in (1/4,1/2)");
    if (!(b_exp > a_exp && b_exp < 0.5)) throw std::invalid_argument("b_exp must be in (a_exp,1/2)");
    // L_n(s) must stay positive over the whole strip s in [0, tau*n].
    double tau_ = 1.0 / alpha - 1.0;
    if (std::log(n) / n * (1.0 + tau_) >= 1.0)
      throw std::invalid_argument("scale too small: (log n / n)(1+tau) must be < 1");
  }

  double log_n() const { return std::log(n); }

  // d(s) = (1+c^2) / (2 (1+s/n))
  double d_of(double s) const { return (1.0 + c * c) / (2.0 * (1.0 + s / n)); }

  // c_n(s) = c (1 + d(s)/n); > c for finite n, -> c as n -> infinity
  double c_n(double s) const { return c * (1.0 + d_of(s) / n); }

  // d'_n(s) = (1+s/n)^2 / (1 - (log n / n)(1+s/n))
  double d_prime_n(double s) const {
    double u = 1.0 + s / n;
    double denom = 1.0 - log_n() / n * u;
    if (denom <= 0.0) throw std::domain_error("d_prime_n: outside valid regime");
    return u * u / denom;
  }

  // L_n(s) = d'_n(s) log n, the waiting-time truncation depth
  double big_l(double s) const { return d_prime_n(s) * log_n(); }

  // mean of a nonnegative variable with tail exp(-c v^2)
  double c_hat() const { return 0.5 * std::sqrt(3.14159265358979323846 / c); }

  // variance rate of the limiting Brownian motion
  double sigma2() const { return c / (3.0 * c_hat()); }

  // the paper's printed diffusion coefficient, squared (kept for reporting)
  double omega_paper_sq() const {
    double w = std::pow(c, 0.75) / (std::sqrt(6.0) * std::pow(3.14159265358979323846, 0.25));
    return w * w;
  }

  // tail parameter of the waiting law beyond the strip top:
  // a_n = c (1 + d(tau n)/n) (1+tau)^{-4}
  double a_n() const {
    double p = 1.0 + tau;
    return c_n(tau * n) / (p * p * p * p);
  }

  // half-width growth rate of the search triangle at apex time s
  double triangle_slope(double s) const {
    if (s < tau * n) return c_n(s) / (1.0 + s / n);
    return c_n(tau * n) / (1.0 + tau);
  }

  // truncation depth of the search triangle at apex time s
  double triangle_depth(double s) const {
    return s < tau * n ? big_l(s) : big_l(tau * n);
  }

  // law of large numbers limit curve: lim S_{rn}/n = c_hat r / (1 - c_hat r)
  double lln_curve(double r) const {
    double ch = c_hat();
    return ch * r / (1.0 - ch * r);
  }
};

}  // namespace rpw
