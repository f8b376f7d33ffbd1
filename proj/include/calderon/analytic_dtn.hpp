#pragma once

// Exact DtN matrices for radial piecewise-constant conductivities and for
// their compositions f o c with Mobius automorphisms c of the disk.
//
// Radial factor: in each annulus u = A r^n + B r^-n. The ratio
// w(r) = B r^-n / (A r^n) is carried outward, which never forms r^-n itself.
// Conformal factor: by conformal invariance of div(gamma grad u) = 0 in the
// plane, <conj e_l, Lambda_{f o c} e_m> = sum_k conj(b_lk) b_mk lambda_k[f],
// where b_mk are the Fourier coefficients of e_m o c^{-1} on the circle.

#include "calderon/conductivity.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/forward_solver.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace calderon {

/// gamma(r) = values[k] for radii[k-1] < r <= radii[k] (radii[-1] = 0, radii[K-1] = 1).
class LayeredRadialConductivity {
 public:
  LayeredRadialConductivity(std::vector<double> radii, std::vector<double> values)
      : radii_(std::move(radii)), values_(std::move(values)) {
    if (values_.size() != radii_.size() + 1) {
      throw std::invalid_argument("layered conductivity: need one more value than breakpoints");
    }
    double prev = 0.0;
    for (double r : radii_) {
      if (!(r > prev && r < 1.0)) throw std::invalid_argument("layered conductivity: radii must increase inside (0,1)");
      prev = r;
    }
    for (double c : values_) {
      if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("layered conductivity: values must be positive");
    }
  }

  [[nodiscard]] const std::vector<double>& radii() const { return radii_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] int layers() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] double outer_value() const { return values_.back(); }

  [[nodiscard]] double operator()(double r) const {
    for (std::size_t k = 0; k < radii_.size(); ++k) {
      if (r <= radii_[k]) return values_[k];
    }
    return values_.back();
  }

 private:
  std::vector<double> radii_;
  std::vector<double> values_;
};

/// Eigenvalue of Lambda_gamma on e_m for a layered radial gamma.
inline double radial_dtn_eigen(const LayeredRadialConductivity& layers, int m) {
  const int n = std::abs(m);
  if (n == 0) return 0.0;
  const auto& radii = layers.radii();
  const auto& values = layers.values();
  double w = 0.0;  // regular at the origin
  double r_prev = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double rho = radii[k];
    if (r_prev > 0.0) w *= std::pow(r_prev / rho, 2 * n);
    // continuity of u and of gamma u_r, with the inner amplitude normalized to 1
    const double s = 1.0 + w;
    const double d = values[k] * (1.0 - w) / values[k + 1];
    w = (s - d) / (s + d);
    r_prev = rho;
  }
  if (r_prev > 0.0) w *= std::pow(r_prev, 2 * n);
  return layers.outer_value() * n * (1.0 - w) / (1.0 + w);
}

/// c(z) = (a z + b) / (c z + d), required to map the unit circle onto itself.
class MobiusMap {
 public:
  MobiusMap(cplx a, cplx b, cplx c, cplx d) : a_(a), b_(b), c_(c), d_(d) {
    if (std::abs(a * d - b * c) == 0.0) throw std::invalid_argument("Mobius map: degenerate coefficients");
    for (int k = 0; k < 16; ++k) {
      const cplx z = std::polar(1.0, 2.0 * kPi * k / 16 + 0.1);
      if (std::abs(std::abs((*this)(z)) - 1.0) > 1e-12) {
        throw std::invalid_argument("Mobius map does not preserve the unit circle");
      }
    }
    if (std::abs((*this)(cplx(0.0))) >= 1.0) throw std::invalid_argument("Mobius map does not preserve the disk");
  }

  static MobiusMap identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static MobiusMap rotation(double alpha) { return {std::polar(1.0, alpha), 0.0, 0.0, 1.0}; }
  /// z -> e^{i alpha} (z - p) / (1 - conj(p) z), |p| < 1.
  static MobiusMap automorphism(cplx p, double alpha = 0.0) {
    if (std::abs(p) >= 1.0) throw std::invalid_argument("automorphism: |p| must be < 1");
    const cplx u = std::polar(1.0, alpha);
    return {u, -u * p, -std::conj(p), 1.0};
  }

  [[nodiscard]] cplx operator()(cplx z) const { return (a_ * z + b_) / (c_ * z + d_); }
  [[nodiscard]] MobiusMap inverse() const { return {d_, -b_, -c_, a_}; }
  [[nodiscard]] std::array<cplx, 4> coefficients() const { return {a_, b_, c_, d_}; }

 private:
  cplx a_, b_, c_, d_;
};

/// Fourier coefficients b_mk = <e_k, e_m o c> on the circle, for |k| < n_fft / 2.
struct CompositionCoeffs {
  int n_fft = 0;
  std::vector<cplx> values;  // index k + n_fft / 2
  /// max |b_mk| over n_fft/4 < |k| < n_fft/2.
  double tail = 0.0;

  [[nodiscard]] cplx at(int k) const {
    const int half = n_fft / 2;
    if (k <= -half || k >= half) return 0.0;
    return values[k + half];
  }
};

inline CompositionCoeffs boundary_composition_coeffs(const MobiusMap& map, int m, int n_fft) {
  if (n_fft < 4 * std::abs(m) + 64 || (n_fft & (n_fft - 1)) != 0) {
    throw std::invalid_argument("boundary_composition_coeffs: n_fft must be a power of two >= 4|m| + 64");
  }
  std::vector<cplx> samples(n_fft);
  for (int t = 0; t < n_fft; ++t) {
    const cplx w = map(std::polar(1.0, 2.0 * kPi * t / n_fft));
    // e_m(w) on |w| = 1; renormalize to stay exactly unimodular
    const cplx unit = w / std::abs(w);
    samples[t] = std::pow(m >= 0 ? unit : std::conj(unit), std::abs(m)) * kInvSqrt2Pi;
  }
  std::vector<cplx> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, samples);
  CompositionCoeffs out;
  out.n_fft = n_fft;
  out.values.assign(n_fft, 0.0);
  const double scale = std::sqrt(2.0 * kPi) / n_fft;
  const int half = n_fft / 2;
  for (int k = -half + 1; k < half; ++k) {
    out.values[k + half] = spectrum[(k + n_fft) % n_fft] * scale;
    if (std::abs(k) > n_fft / 4) out.tail = std::max(out.tail, std::abs(out.values[k + half]));
  }
  return out;
}

struct ConformalDtN {
  DtNMatrix matrix;
  /// Largest per-entry sum of omitted terms, estimated from the computed band beyond k_max.
  double tail_bound = 0.0;
  int k_max = 0;
};

/// DtN matrix of f o c for layered radial f.
inline ConformalDtN conformal_dtn_matrix(const LayeredRadialConductivity& layers, const MobiusMap& map, int l_max,
                                         DtNBlock block = DtNBlock::Positive, double tail_budget = 1e-8) {
  const MobiusMap inv = map.inverse();
  int n_fft = 128;
  while (n_fft < 4 * l_max + 64) n_fft *= 2;
  constexpr int kMaxFft = 2048;
  constexpr int kKCap = 512;
  for (;; n_fft *= 2) {
    DtNMatrix out(l_max, block, "analytic");
    const int lo = out.first_index();
    const int k_max = std::min(kKCap, n_fft / 4);
    const int half = n_fft / 2;
    std::vector<CompositionCoeffs> coeffs;
    for (int m = lo; m <= l_max; ++m) coeffs.push_back(boundary_composition_coeffs(inv, m, n_fft));
    std::vector<double> lambda(half);
    for (int k = 0; k < half; ++k) lambda[k] = radial_dtn_eigen(layers, k);
    double tail = 0.0;
    for (int l = lo; l <= l_max; ++l) {
      const auto& bl = coeffs[l - lo];
      for (int m = l; m <= l_max; ++m) {
        const auto& bm = coeffs[m - lo];
        cplx acc = 0.0;
        double omitted = 0.0;
        for (int k = -half + 1; k < half; ++k) {
          const cplx term = std::conj(bl.at(k)) * bm.at(k) * lambda[std::abs(k)];
          if (std::abs(k) <= k_max) {
            acc += term;
          } else {
            omitted += std::abs(term);
          }
        }
        out(l, m) = acc;
        out(m, l) = std::conj(acc);
        if (l == m) out(l, l) = acc.real();
        tail = std::max(tail, omitted);
      }
    }
    if (tail <= tail_budget) return {out, tail, k_max};
    if (n_fft >= kMaxFft) {
      std::ostringstream msg;
      msg << "conformal_dtn_matrix: truncation tail " << tail << " exceeds budget " << tail_budget;
      throw NumericalError(msg.str());
    }
  }
}

/// gamma = f o c as an evaluable (discontinuous) field.
inline ConductivityField composed_conductivity(const LayeredRadialConductivity& layers, const MobiusMap& map) {
  ConductivityField out;
  out.value = [layers, map](double r, double th) { return layers(std::abs(map(std::polar(r, th)))); };
  out.lower_bound = *std::min_element(layers.values().begin(), layers.values().end());
  out.smoothness = Smoothness::Discontinuous;
  return out;
}

}  // namespace calderon
