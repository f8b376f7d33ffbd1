#pragma once

// Bessel functions of integer order and the kappa-parameterized radial
// profiles (sigma_kappa, phi, psi) of the J0-squared background conductivities.
//
// Everything that depends on sqrt(kappa) is evaluated through the reduced
// series R_n(s) = sum_k (-s/4)^k / (k! (n+k)!), for which
//   J_n(x) = (x/2)^n R_n(x^2),    I_n(x) = (x/2)^n R_n(-x^2).
// R_n is entire in s, so a single code path covers kappa < 0, kappa = 0 and
// kappa > 0 with s = kappa r^2 and no complex arithmetic.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

namespace calderon {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

/// Square of the first positive zero of J0.
inline constexpr double kJ0FirstZeroSquared = 5.783185962946784;
inline constexpr double kJ0FirstZero = 2.404825557695773;

class Kappa {
 public:
  constexpr Kappa() = default;
  explicit Kappa(double value) : value_(value) {
    if (!std::isfinite(value) || value >= kJ0FirstZeroSquared) {
      throw std::invalid_argument("kappa must be finite and below j_{0,1}^2 = 5.7832 (got " +
                                  std::to_string(value) + ")");
    }
  }
  [[nodiscard]] constexpr double value() const { return value_; }
  [[nodiscard]] constexpr bool is_zero() const { return value_ == 0.0; }

 private:
  double value_ = 0.0;
};

namespace detail {

inline double factorial_inverse(int n) {
  double t = 1.0;
  for (int k = 2; k <= n; ++k) t /= k;
  return t;
}

}  // namespace detail

/// Reduced Bessel series R_n(s) for n >= 0.
inline double bessel_reduced(int n, double s) {
  if (n < 0) throw std::invalid_argument("bessel_reduced: order must be nonnegative");
  double term = detail::factorial_inverse(n);
  double sum = term;
  const double q = -0.25 * s;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(n + k));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) && k > 0.5 * std::sqrt(std::abs(s))) break;
  }
  return sum;
}

/// R_n at complex argument (plane-wave expansions with complex eta . eta).
inline cplx bessel_reduced(int n, cplx s) {
  if (n < 0) throw std::invalid_argument("bessel_reduced: order must be nonnegative");
  cplx term = detail::factorial_inverse(n);
  cplx sum = term;
  const cplx q = -0.25 * s;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(n + k));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) && k > 0.5 * std::sqrt(std::abs(s))) break;
  }
  return sum;
}

/// J_n(x) for integer n. Power series for |x| <= 12, library routine beyond.
inline double bessel_j(int n, double x) {
  if (n < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(-n, x);
  if (x < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_j(n, -x);
  if (x > 12.0) return std::cyl_bessel_j(static_cast<double>(n), x);
  double prefactor = 1.0;
  for (int k = 1; k <= n; ++k) prefactor *= 0.5 * x;
  // R_n carries the 1/n!; keep (x/2)^n separate to avoid early underflow.
  return prefactor * bessel_reduced(n, x * x);
}

/// Modified Bessel I_n(x) for integer n.
inline double bessel_i(int n, double x) {
  if (n < 0) return bessel_i(-n, x);
  if (x < 0) return (n % 2 == 0 ? 1.0 : -1.0) * bessel_i(n, -x);
  if (x > 12.0) return std::cyl_bessel_i(static_cast<double>(n), x);
  double prefactor = 1.0;
  for (int k = 1; k <= n; ++k) prefactor *= 0.5 * x;
  return prefactor * bessel_reduced(n, -x * x);
}

/// Background conductivity sigma_kappa(r) = J0(sqrt(kappa) r)^2 (I0 branch for kappa < 0).
inline double sigma_kappa(Kappa kappa, double r) {
  const double j0 = bessel_reduced(0, kappa.value() * r * r);
  return j0 * j0;
}

/// d/dr sigma_kappa(r) = -2 sqrt(kappa) J0 J1 = -kappa r R_0 R_1.
inline double sigma_kappa_dr(Kappa kappa, double r) {
  const double s = kappa.value() * r * r;
  return -kappa.value() * r * bessel_reduced(0, s) * bessel_reduced(1, s);
}

/// phi^kappa_ell(r) = J_|l|(sqrt(kappa) r) / J_|l|(sqrt(kappa)); r^|l| at kappa = 0.
inline double phi_kappa(Kappa kappa, int ell, double r) {
  const int n = std::abs(ell);
  return std::pow(r, n) * bessel_reduced(n, kappa.value() * r * r) /
         bessel_reduced(n, kappa.value());
}

/// phi^kappa_ell(r) / r^|ell|, smooth and nonzero at the origin.
inline double phi_kappa_reduced(Kappa kappa, int ell, double r) {
  const int n = std::abs(ell);
  return bessel_reduced(n, kappa.value() * r * r) / bessel_reduced(n, kappa.value());
}

/// psi^kappa_ell(r) = sqrt(kappa) r (J1/J0 - J_{|l|+1}/J_|l|)(sqrt(kappa) r).
///
/// In reduced form psi = (s/2)(R_1/R_0 - R_{|l|+1}/R_|l|) with s = kappa r^2,
/// which is analytic in s and vanishes at r = 0 and at kappa = 0.
inline double psi_kappa(Kappa kappa, int ell, double r) {
  const int n = std::abs(ell);
  const double s = kappa.value() * r * r;
  if (s == 0.0) return 0.0;
  return 0.5 * s *
         (bessel_reduced(1, s) / bessel_reduced(0, s) - bessel_reduced(n + 1, s) / bessel_reduced(n, s));
}

/// d/dr phi^kappa_ell at r = 1, equal to |l| - (kappa/2) R_{|l|+1}(kappa) / R_|l|(kappa).
inline double phi_kappa_boundary_slope(Kappa kappa, int ell) {
  const int n = std::abs(ell);
  const double k = kappa.value();
  if (k == 0.0) return n;
  return n - 0.5 * k * bessel_reduced(n + 1, k) / bessel_reduced(n, k);
}

}  // namespace calderon
