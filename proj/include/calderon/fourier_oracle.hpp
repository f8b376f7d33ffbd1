#pragma once

// Fourier-domain checks of reconstructions.
//
// Convention: F f(xi) = int_D f(x) e^{-i x . xi} dx. For a pair eta1 + eta2 = -i xi
// the product of plane waves e^{eta1 . x} e^{eta2 . x} is the Fourier kernel, so
// a bilinear pairing of plane-wave boundary traces with a DtN map yields
// Fourier values. On the circle, e^{eta . x} = sum_l c_l(eta) e_l with
//   c_l = sqrt(2 pi) (a/2)^l R_l(-q),        l >= 0,
//   c_l = sqrt(2 pi) (b/2)^|l| R_|l|(-q),    l < 0,
// where a = eta_1 - i eta_2, b = eta_1 + i eta_2, q = eta . eta = a b.

#include "calderon/born_inverse.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/forward_solver.hpp"
#include "calderon/moment_engine.hpp"
#include "calderon/specfun.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace calderon {

using CVec2 = std::array<cplx, 2>;

struct PlaneWavePair {
  Eigen::Vector2d xi = Eigen::Vector2d::Zero();
  CVec2 eta1{};
  CVec2 eta2{};
  Kappa kappa;
};

/// eta_+- = -(i/2) xi +- sqrt(-kappa + |xi|^2 / 4) xi_perp / |xi|, principal square root.
inline PlaneWavePair make_plane_wave_pair(const Eigen::Vector2d& xi, Kappa kappa) {
  const double n = xi.norm();
  if (!(n > 0.0)) throw std::invalid_argument("plane-wave pair: xi must be nonzero");
  const cplx s = std::sqrt(cplx(-kappa.value() + 0.25 * n * n, 0.0));
  const cplx i(0.0, 1.0);
  const Eigen::Vector2d perp(-xi(1) / n, xi(0) / n);
  PlaneWavePair p;
  p.xi = xi;
  p.kappa = kappa;
  for (int k = 0; k < 2; ++k) {
    p.eta1[k] = -0.5 * i * xi(k) + s * perp(k);
    p.eta2[k] = -0.5 * i * xi(k) - s * perp(k);
  }
  return p;
}

inline cplx bilinear_dot(const CVec2& u, const CVec2& v) { return u[0] * v[0] + u[1] * v[1]; }

/// zeta = -(xi_1 - i xi_2) / 2.
inline cplx zeta(const Eigen::Vector2d& xi) { return -0.5 * cplx(xi(0), -xi(1)); }

/// <e_l, e^{eta . x}> on the unit circle.
inline cplx plane_wave_coefficient(const CVec2& eta, int ell) {
  const cplx q = bilinear_dot(eta, eta);
  const int n = std::abs(ell);
  const cplx base = ell >= 0 ? eta[0] - cplx(0.0, 1.0) * eta[1] : eta[0] + cplx(0.0, 1.0) * eta[1];
  return std::sqrt(2.0 * kPi) * std::pow(0.5 * base, n) * bessel_reduced(n, -q);
}

/// Coefficients c_l for |l| <= n_max, index l + n_max.
inline std::vector<cplx> plane_wave_coefficients(const CVec2& eta, int n_max) {
  std::vector<cplx> c(2 * n_max + 1);
  for (int l = -n_max; l <= n_max; ++l) c[l + n_max] = plane_wave_coefficient(eta, l);
  return c;
}

struct FourierValue {
  cplx value = 0.0;
  double tail_estimate = 0.0;
};

namespace detail {

/// sum_{|l| > l_max} |c_l| weight(l) summed to convergence.
inline double coefficient_tail(const CVec2& eta, int l_max, const std::function<double(int)>& weight) {
  double tail = 0.0;
  for (int n = l_max + 1; n < l_max + 400; ++n) {
    const double t = (std::abs(plane_wave_coefficient(eta, n)) + std::abs(plane_wave_coefficient(eta, -n))) * weight(n);
    tail += t;
    if (t <= 1e-18 * std::max(tail, 1e-300) && n > l_max + 8) break;
  }
  return tail;
}

inline void check_budget(const char* stage, double tail, double budget) {
  if (tail > budget) {
    std::ostringstream msg;
    msg << stage << ": truncation tail " << tail << " exceeds budget " << budget;
    throw NumericalError(msg.str());
  }
}

}  // namespace detail

/// F gamma^B(xi) = -(2 / |xi|^2) <e_eta1, Lambda_gamma e_eta2> at kappa = 0.
inline FourierValue pairing_fourier_born_k0(const DtNMatrix& dtn, const Eigen::Vector2d& xi,
                                            double tail_budget = 1e-6) {
  const PlaneWavePair pair = make_plane_wave_pair(xi, Kappa{});
  const int L = dtn.l_max();
  // eta1 is analytic (l >= 0) and eta2 antianalytic (m <= 0), so only M[-l][m] with l >= 0, m <= 0 enters.
  const auto c1 = plane_wave_coefficients(pair.eta1, L);
  const auto c2 = plane_wave_coefficients(pair.eta2, L);
  cplx acc = 0.0;
  double entry_scale = 0.0;
  for (int l = 1; l <= L; ++l) {
    for (int m = 1; m <= L; ++m) {
      const cplx entry = dtn.at(-l, -m);
      acc += c1[l + L] * c2[-m + L] * entry;
      entry_scale = std::max(entry_scale, std::abs(entry) / std::sqrt(static_cast<double>(l * m)));
    }
  }
  const double factor = 2.0 / xi.squaredNorm();
  // Entries of a DtN map grow at most like sqrt(l m) times the observed constant.
  auto sqrt_weight = [](int n) { return std::sqrt(static_cast<double>(n)); };
  double head1 = 0.0, head2 = 0.0;
  for (int n = 1; n <= L; ++n) {
    head1 += std::abs(c1[n + L]) * std::sqrt(static_cast<double>(n));
    head2 += std::abs(c2[-n + L]) * std::sqrt(static_cast<double>(n));
  }
  const double t1 = detail::coefficient_tail(pair.eta1, L, sqrt_weight);
  const double t2 = detail::coefficient_tail(pair.eta2, L, sqrt_weight);
  const double tail = factor * entry_scale * (t1 * head2 + head1 * t2 + t1 * t2);
  detail::check_budget("pairing_fourier_born_k0", tail, tail_budget);
  return {-factor * acc, tail};
}

/// F f(xi) = 2 pi sum_{l,m <= N} i^{l+m} / (l! m!) mu0_{l,m} conj(zeta)^l zeta^m.
/// moments(l, m) = mu^0_{l,m}[f] for 0 <= l, m <= N.
inline FourierValue series_fourier_k0(const Eigen::MatrixXcd& moments, const Eigen::Vector2d& xi,
                                      double tail_budget = std::numeric_limits<double>::infinity()) {
  const int N = static_cast<int>(moments.rows()) - 1;
  if (N < 0 || moments.cols() != moments.rows()) throw std::invalid_argument("series_fourier_k0: square moment table required");
  const cplx z = zeta(xi);
  const cplx zb = std::conj(z);
  std::vector<cplx> pa(N + 1), pb(N + 1);
  cplx ia = 1.0, ib = 1.0;
  for (int n = 0; n <= N; ++n) {
    pa[n] = ia * detail::factorial_inverse(n);
    pb[n] = ib * detail::factorial_inverse(n);
    ia *= cplx(0.0, 1.0) * zb;
    ib *= cplx(0.0, 1.0) * z;
  }
  cplx acc = 0.0;
  for (int l = 0; l <= N; ++l)
    for (int m = 0; m <= N; ++m) acc += pa[l] * pb[m] * moments(l, m);
  // |mu0_{l,m}| <= max|mu0| beyond the table; the omitted sum of |zeta|^{l+m} / (l! m!) is 2 S_N T_N + T_N^2.
  const double az = std::abs(z);
  double s_n = 0.0, t_n = 0.0, t = 1.0;
  for (int n = 0; n <= N + 400; ++n) {
    (n <= N ? s_n : t_n) += t;
    t *= az / (n + 1);
    if (n > N && t <= 1e-18 * t_n) break;
  }
  const double tail = 2.0 * kPi * moments.cwiseAbs().maxCoeff() * (2.0 * s_n * t_n + t_n * t_n);
  detail::check_budget("series_fourier_k0", tail, tail_budget);
  return {2.0 * kPi * acc, tail};
}

/// Weight w_n = (Q/2)^n R_n(kappa) for n >= 0 and (-kappa / (2Q))^|n| R_|n|(kappa) for n < 0,
/// Q = (|zeta| + sqrt(|zeta|^2 - kappa)) / |zeta|.
inline cplx series_kappa_weight(Kappa kappa, cplx q_ratio, int n) {
  const double k = kappa.value();
  if (n >= 0) return std::pow(0.5 * q_ratio, n) * bessel_reduced(n, k);
  return std::pow(-k / (2.0 * q_ratio), -n) * bessel_reduced(-n, k);
}

/// Bilateral series for F f(xi) from mu^kappa moments; moments(l + N, m + N) = mu^kappa_{l,m}[f].
inline FourierValue series_fourier_kappa(Kappa kappa, const Eigen::MatrixXcd& moments, const Eigen::Vector2d& xi,
                                         double tail_budget = std::numeric_limits<double>::infinity()) {
  if (kappa.is_zero()) throw std::invalid_argument("series_fourier_kappa: kappa = 0, use series_fourier_k0");
  if (!(xi.norm() > 0.0)) throw std::invalid_argument("series_fourier_kappa: xi must be nonzero");
  if (moments.rows() != moments.cols() || moments.rows() % 2 == 0) {
    throw std::invalid_argument("series_fourier_kappa: moment table must be (2N+1) x (2N+1)");
  }
  const int N = static_cast<int>(moments.rows() - 1) / 2;
  const cplx z = zeta(xi);
  const double az = std::abs(z);
  const cplx q_ratio = (az + std::sqrt(cplx(az * az - kappa.value(), 0.0))) / az;
  const cplx i(0.0, 1.0);
  std::vector<cplx> left(2 * N + 1), right(2 * N + 1);
  for (int n = -N; n <= N; ++n) {
    const cplx w = series_kappa_weight(kappa, q_ratio, n);
    left[n + N] = std::pow(i, n) * w * std::pow(std::conj(z), n);
    right[n + N] = std::pow(i, n) * w * std::pow(z, n);
  }
  cplx acc = 0.0, shell = 0.0;
  for (int l = -N; l <= N; ++l) {
    for (int m = -N; m <= N; ++m) {
      const cplx term = left[l + N] * right[m + N] * moments(l + N, m + N);
      acc += term;
      if (std::max(std::abs(l), std::abs(m)) == N) shell += std::abs(term);
    }
  }
  const double tail = 2.0 * kPi * std::abs(shell);
  detail::check_budget("series_fourier_kappa", tail, tail_budget);
  return {2.0 * kPi * acc, tail};
}

/// mu^0 table of a Born reconstruction from its basis coefficients (closed-form cell moments).
inline Eigen::MatrixXcd mu0_table(const BornReconstruction& rec, int n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  const BasisSpec& spec = rec.spec;
  for (int l = 0; l <= n; ++l) {
    for (int m = 0; m <= n; ++m) {
      const int j = l - m;
      if (std::abs(j) > spec.l_max) continue;
      for (int i = 1; i <= spec.i_count; ++i) out(l, m) += rec.coefficient(i, j) * mu_moment_0(l, m, spec, {i, j});
    }
  }
  return out;
}

/// Lambda^S_{q(gamma)} - Lambda^S_{-kappa} on |l|, |m| <= L, with the boundary factor a_gamma.
struct SchrodingerDifference {
  int l_max = 0;
  double a_gamma = 1.0;
  Eigen::MatrixXcd entries;  // (l + L, m + L)

  [[nodiscard]] cplx operator()(int l, int m) const { return entries(l + l_max, m + l_max); }
};

/// Converts a full-block conductivity DtN matrix with Lambda^S = gamma^{-1/2} (Lambda_gamma + d_nu gamma / 2) gamma^{-1/2}
/// and subtracts the background eigenvalues phi'_l(1). gamma must be a_gamma sigma_kappa on the boundary.
inline SchrodingerDifference schrodinger_difference(const DtNMatrix& dtn, const ConductivityField& gamma, Kappa kappa,
                                                    int boundary_samples = 256, double tolerance = 1e-9) {
  if (dtn.block() != DtNBlock::Full) throw std::invalid_argument("schrodinger_difference: full DtN block required");
  const int L = dtn.l_max();
  if (boundary_samples <= 4 * L) throw std::invalid_argument("schrodinger_difference: too few boundary samples");
  std::vector<double> normal(boundary_samples);
  double g_min = std::numeric_limits<double>::infinity(), g_max = -g_min;
  const double h = 1e-4;
  for (int t = 0; t < boundary_samples; ++t) {
    const double th = 2.0 * kPi * t / boundary_samples;
    const double g = gamma.value(1.0, th);
    g_min = std::min(g_min, g);
    g_max = std::max(g_max, g);
    if (gamma.gradient) {
      normal[t] = gamma.gradient(1.0, th)[0];
    } else {
      // one-sided fourth-order difference
      normal[t] = (25.0 * g - 48.0 * gamma.value(1.0 - h, th) + 36.0 * gamma.value(1.0 - 2 * h, th) -
                   16.0 * gamma.value(1.0 - 3 * h, th) + 3.0 * gamma.value(1.0 - 4 * h, th)) /
                  (12.0 * h);
    }
  }
  if (g_max - g_min > tolerance * std::abs(g_max)) {
    std::ostringstream msg;
    msg << "schrodinger_difference: gamma is not constant on the boundary (spread " << g_max - g_min
        << "), so a_gamma is undefined";
    throw std::invalid_argument(msg.str());
  }
  const double g1 = 0.5 * (g_min + g_max);
  SchrodingerDifference out;
  out.l_max = L;
  out.a_gamma = g1 / sigma_kappa(kappa, 1.0);
  out.entries = Eigen::MatrixXcd::Zero(2 * L + 1, 2 * L + 1);
  // <e_l, h e_m> = (1 / 2 pi) int h e^{i (m - l) theta}
  std::vector<cplx> hhat(4 * L + 1);
  for (int k = -2 * L; k <= 2 * L; ++k) {
    cplx acc = 0.0;
    for (int t = 0; t < boundary_samples; ++t) acc += normal[t] * std::polar(1.0, 2.0 * kPi * k * t / boundary_samples);
    hhat[k + 2 * L] = acc / static_cast<double>(boundary_samples);
  }
  for (int l = -L; l <= L; ++l) {
    for (int m = -L; m <= L; ++m) {
      cplx v = (dtn(l, m) + 0.5 * hhat[m - l + 2 * L]) / g1;
      if (l == m) v -= phi_kappa_boundary_slope(kappa, l);
      out.entries(l + L, m + L) = v;
    }
  }
  return out;
}

/// Radial gamma: the difference is diagonal with d_l = (lambda_l + gamma'(1)/2) / gamma(1) - phi'_l(1).
inline SchrodingerDifference schrodinger_difference_radial(const std::vector<double>& dtn_eigen, double gamma_boundary,
                                                           double gamma_boundary_dr, Kappa kappa) {
  if (dtn_eigen.empty() || !(gamma_boundary > 0.0)) throw std::invalid_argument("schrodinger_difference_radial: bad input");
  const int L = static_cast<int>(dtn_eigen.size()) - 1;
  SchrodingerDifference out;
  out.l_max = L;
  out.a_gamma = gamma_boundary / sigma_kappa(kappa, 1.0);
  out.entries = Eigen::MatrixXcd::Zero(2 * L + 1, 2 * L + 1);
  for (int l = -L; l <= L; ++l) {
    out.entries(l + L, l + L) =
        (dtn_eigen[std::abs(l)] + 0.5 * gamma_boundary_dr) / gamma_boundary - phi_kappa_boundary_slope(kappa, l);
  }
  return out;
}

/// F[L_sigma gamma^B](xi) = 2 a_gamma <e_eta1, (Lambda^S_q - Lambda^S_{-kappa}) e_eta2>.
inline FourierValue pairing_fourier_born_kappa(const SchrodingerDifference& diff, Kappa kappa,
                                               const Eigen::Vector2d& xi, double tail_budget = 1e-6) {
  const PlaneWavePair pair = make_plane_wave_pair(xi, kappa);
  const int L = diff.l_max;
  const auto c1 = plane_wave_coefficients(pair.eta1, L);
  const auto c2 = plane_wave_coefficients(pair.eta2, L);
  cplx acc = 0.0;
  const double entry_scale = diff.entries.cwiseAbs().maxCoeff();
  double head1 = 0.0, head2 = 0.0;
  for (int l = -L; l <= L; ++l) {
    head1 += std::abs(c1[l + L]);
    head2 += std::abs(c2[l + L]);
    for (int m = -L; m <= L; ++m) acc += c1[l + L] * c2[m + L] * diff(-l, m);
  }
  auto unit = [](int) { return 1.0; };
  const double t1 = detail::coefficient_tail(pair.eta1, L, unit);
  const double t2 = detail::coefficient_tail(pair.eta2, L, unit);
  const double tail = 2.0 * std::abs(diff.a_gamma) * entry_scale * (t1 * head2 + head1 * t2 + t1 * t2);
  detail::check_budget("pairing_fourier_born_kappa", tail, tail_budget);
  return {2.0 * diff.a_gamma * acc, tail};
}

inline void write_fourier_csv_header(std::ostream& os) { os << "xi1,xi2,re,im,tail_estimate\n"; }

inline void write_fourier_csv_row(std::ostream& os, const Eigen::Vector2d& xi, const FourierValue& v) {
  os.precision(17);
  os << xi(0) << ',' << xi(1) << ',' << v.value.real() << ',' << v.value.imag() << ',' << v.tail_estimate << '\n';
}

}  // namespace calderon
