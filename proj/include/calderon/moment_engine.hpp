#pragma once

// Piecewise-radial Fourier basis f_{i,j}, the moment functionals mu^kappa and
// frak-m^kappa, and the least-squares system A x = b of the Born inversion.
//
// For any radial background the angular factor of every moment is a
// Kronecker delta, so A decouples into real blocks indexed by j = l - m.
// Those blocks are what MomentSystem stores; the dense matrix is available
// for export and tests.

#include "calderon/disk_grid.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/quadrature.hpp"
#include "calderon/specfun.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace calderon {

/// f_{i,j}(r, theta) = I / sqrt(i - 1/2) * chi_{((i-1)/I, i/I]}(r) * e_j(theta).
struct BasisSpec {
  int i_count = 1;
  int l_max = 1;

  BasisSpec() = default;
  BasisSpec(int i, int l) : i_count(i), l_max(l) {
    if (i < 1 || l < 1) throw std::invalid_argument("BasisSpec: I and L must be >= 1");
  }

  [[nodiscard]] int columns() const { return i_count * (2 * l_max + 1); }
  /// Dense column of (i, j), i in 1..I, j in -L..L.
  [[nodiscard]] int column(int i, int j) const { return (i - 1) * (2 * l_max + 1) + (j + l_max); }
  [[nodiscard]] double cell_lo(int i) const { return static_cast<double>(i - 1) / i_count; }
  [[nodiscard]] double cell_hi(int i) const { return static_cast<double>(i) / i_count; }
  [[nodiscard]] double norm_factor(int i) const { return i_count / std::sqrt(i - 0.5); }
  /// Radial cell containing r (r = 0 belongs to cell 1).
  [[nodiscard]] int cell_of(double r) const {
    const int i = static_cast<int>(std::ceil(r * i_count - 1e-12));
    return std::clamp(i, 1, i_count);
  }
  [[nodiscard]] cplx value(int i, int j, double r, double theta) const {
    if (cell_of(r) != i) return 0.0;
    return norm_factor(i) * std::polar(kInvSqrt2Pi, j * theta);
  }
};

struct BasisIndex {
  int i = 1;
  int j = 0;
};

inline constexpr int kCellGaussNodes = 32;

namespace detail {

/// Radial weight of frak-m^kappa_{l,m}: the bracketed integrand without f and the angular factor.
///   J0(sqrt k)^2 / sigma_k * [l m + (|l| + psi_l)(|m| + psi_m)] * r^{|l|+|m|-2} * phi~_l phi~_m
inline double frechet_radial_weight(Kappa kappa, int ell, int m, double r) {
  if (ell == 0 || m == 0) return 0.0;
  const int a = std::abs(ell), b = std::abs(m);
  const double bracket = static_cast<double>(ell) * m + (a + psi_kappa(kappa, ell, r)) * (b + psi_kappa(kappa, m, r));
  const double j0 = bessel_reduced(0, kappa.value());
  return j0 * j0 / sigma_kappa(kappa, r) * bracket * std::pow(r, a + b - 2) * phi_kappa_reduced(kappa, ell, r) *
         phi_kappa_reduced(kappa, m, r);
}

inline void require_nonnegative(int ell, int m) {
  if (ell < 0 || m < 0) throw std::invalid_argument("mu_moment_0: indices must be >= 0");
}

}  // namespace detail

// ---- mu^0 -----------------------------------------------------------------

/// mu^0_{l,m}[f_{i,j}] = delta_{j,l-m} / sqrt(2 pi) * c_i * [r^{l+m+2} / (l+m+2)] over cell i.
inline cplx mu_moment_0(int ell, int m, const BasisSpec& spec, BasisIndex f) {
  detail::require_nonnegative(ell, m);
  if (f.j != ell - m) return 0.0;
  const int p = ell + m + 2;
  const double span = std::pow(spec.cell_hi(f.i), p) - std::pow(spec.cell_lo(f.i), p);
  return kInvSqrt2Pi * spec.norm_factor(f.i) * span / p;
}

/// (1 / 2 pi) int_D f conj(z)^l z^m dm(z) by quadrature.
inline cplx mu_moment_0(int ell, int m, const ComplexPolarFunction& f, const PolarQuadrature& quad = {}) {
  detail::require_nonnegative(ell, m);
  return quad.integrate([&](double r, double th) {
           return f(r, th) * std::pow(r, ell + m) * std::polar(1.0, (m - ell) * th);
         }) /
         (2.0 * kPi);
}

// ---- mu^kappa --------------------------------------------------------------

/// int_D f_{i,j} phi_l phi_m conj(e_l) e_m dx, Gauss-Legendre on the cell.
inline cplx mu_moment_kappa(Kappa kappa, int ell, int m, const BasisSpec& spec, BasisIndex f) {
  if (f.j != ell - m) return 0.0;
  const int a = std::abs(ell), b = std::abs(m);
  const double radial = integrate_interval(
      [&](double r) {
        return std::pow(r, a + b + 1) * phi_kappa_reduced(kappa, ell, r) * phi_kappa_reduced(kappa, m, r);
      },
      spec.cell_lo(f.i), spec.cell_hi(f.i), kCellGaussNodes);
  return kInvSqrt2Pi * spec.norm_factor(f.i) * radial;
}

inline cplx mu_moment_kappa(Kappa kappa, int ell, int m, const ComplexPolarFunction& f,
                            const PolarQuadrature& quad = {}) {
  return quad.integrate([&](double r, double th) {
           return f(r, th) * phi_kappa(kappa, ell, r) * phi_kappa(kappa, m, r) * std::polar(1.0, (m - ell) * th);
         }) /
         (2.0 * kPi);
}

// ---- frak-m^kappa -------------------------------------------------------------

/// frak-m^kappa_{l,m}[f_{i,j}] = <conj e_l, dPhi_{sigma_kappa}(f_{i,j}) e_m>.
/// kappa = 0 uses the closed form 2|lm| mu^0_{|l|-1,|m|-1} for lm > 0 and 0 otherwise.
inline cplx m_moment_kappa(Kappa kappa, int ell, int m, const BasisSpec& spec, BasisIndex f) {
  if (f.j != ell - m || ell == 0 || m == 0) return 0.0;
  if (kappa.is_zero()) {
    if (static_cast<long>(ell) * m < 0) return 0.0;
    const int a = std::abs(ell), b = std::abs(m);
    return 2.0 * a * b * mu_moment_0(a - 1, b - 1, spec, {f.i, a - b});
  }
  const double radial = integrate_interval([&](double r) { return detail::frechet_radial_weight(kappa, ell, m, r) * r; },
                                           spec.cell_lo(f.i), spec.cell_hi(f.i), kCellGaussNodes);
  return kInvSqrt2Pi * spec.norm_factor(f.i) * radial;
}

inline cplx m_moment_kappa(Kappa kappa, int ell, int m, const ComplexPolarFunction& f,
                           const PolarQuadrature& quad = {}) {
  if (ell == 0 || m == 0) return 0.0;
  if (kappa.is_zero() && static_cast<long>(ell) * m < 0) return 0.0;
  return quad.integrate([&](double r, double th) {
           return f(r, th) * detail::frechet_radial_weight(kappa, ell, m, r) * std::polar(1.0, (m - ell) * th);
         }) /
         (2.0 * kPi);
}

// ---- moment tables of general fields ------------------------------------------------

namespace detail {

/// Angular averages (1 / 2 pi) int f(r, theta) e^{i j theta} dtheta for |j| <= j_max at every radial node.
inline std::vector<Eigen::VectorXcd> angular_profiles(const ComplexPolarFunction& f, const PolarQuadrature& quad,
                                                      int j_max) {
  const auto rule = quad.radial_rule();
  const int nt = quad.angular_nodes;
  if (nt <= 2 * j_max) throw std::invalid_argument("moment table: angular quadrature too coarse");
  std::vector<Eigen::VectorXcd> out;
  for (const auto& [r, w] : rule) {
    Eigen::VectorXcd samples(nt);
    for (int t = 0; t < nt; ++t) samples(t) = f(r, 2.0 * kPi * t / nt);
    Eigen::VectorXcd prof(2 * j_max + 1);
    for (int j = -j_max; j <= j_max; ++j) {
      cplx acc = 0.0;
      for (int t = 0; t < nt; ++t) acc += samples(t) * std::polar(1.0, 2.0 * kPi * j * t / nt);
      prof(j + j_max) = acc / static_cast<double>(nt);
    }
    out.push_back(std::move(prof));
  }
  return out;
}

}  // namespace detail

/// mu^0_{l,m}[f] for 0 <= l, m <= n: entry (l, m).
inline Eigen::MatrixXcd mu0_table(const ComplexPolarFunction& f, int n, const PolarQuadrature& quad = {}) {
  const auto rule = quad.radial_rule();
  const auto prof = detail::angular_profiles(f, quad, n);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto [r, w] = rule[k];
    for (int l = 0; l <= n; ++l)
      for (int m = 0; m <= n; ++m) out(l, m) += w * std::pow(r, l + m) * prof[k](m - l + n);
  }
  return out;
}

/// mu^kappa_{l,m}[f] for |l|, |m| <= n: entry (l + n, m + n).
inline Eigen::MatrixXcd mu_kappa_table(Kappa kappa, const ComplexPolarFunction& f, int n,
                                       const PolarQuadrature& quad = {}) {
  const auto rule = quad.radial_rule();
  const auto prof = detail::angular_profiles(f, quad, 2 * n);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * n + 1, 2 * n + 1);
  std::vector<double> phi(n + 1);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto [r, w] = rule[k];
    for (int l = 0; l <= n; ++l) phi[l] = phi_kappa(kappa, l, r);
    for (int l = -n; l <= n; ++l)
      for (int m = -n; m <= n; ++m) out(l + n, m + n) += w * phi[std::abs(l)] * phi[std::abs(m)] * prof[k](m - l + 2 * n);
  }
  return out;
}

// ---- system -------------------------------------------------------------------

/// Rows (l, m) with l - m = j and 1 <= l, m <= L; columns i = 1..I.
struct MomentBlock {
  int j = 0;
  std::vector<std::pair<int, int>> rows;
  Eigen::MatrixXd a;
  Eigen::VectorXcd b;
};

struct MomentSystem {
  BasisSpec spec;
  Kappa kappa;
  /// j = -(L-1) .. L-1. The columns j = +-L are identically zero and not stored.
  std::vector<MomentBlock> blocks;

  [[nodiscard]] const MomentBlock& block(int j) const { return blocks.at(j + spec.l_max - 1); }

  /// Dense A with rows (l-1) L + (m-1) and columns spec.column(i, j).
  [[nodiscard]] Eigen::MatrixXcd dense_matrix() const {
    const int L = spec.l_max;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(L * L, spec.columns());
    for (const auto& blk : blocks) {
      for (std::size_t k = 0; k < blk.rows.size(); ++k) {
        const int row = (blk.rows[k].first - 1) * L + (blk.rows[k].second - 1);
        for (int i = 1; i <= spec.i_count; ++i) a(row, spec.column(i, blk.j)) = blk.a(k, i - 1);
      }
    }
    return a;
  }

  [[nodiscard]] Eigen::VectorXcd dense_rhs() const {
    const int L = spec.l_max;
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(L * L);
    for (const auto& blk : blocks) {
      for (std::size_t k = 0; k < blk.rows.size(); ++k) {
        b((blk.rows[k].first - 1) * L + (blk.rows[k].second - 1)) = blk.b(k);
      }
    }
    return b;
  }
};

namespace detail {

/// Radial cell integrals of frak-m^kappa for all 1 <= l, m <= L: result[(l-1) L + (m-1)](i-1).
inline std::vector<Eigen::VectorXd> frechet_cell_table(Kappa kappa, const BasisSpec& spec) {
  const int L = spec.l_max, I = spec.i_count;
  std::vector<Eigen::VectorXd> table(L * L, Eigen::VectorXd::Zero(I));
  if (kappa.is_zero()) {
    for (int l = 1; l <= L; ++l)
      for (int m = 1; m <= L; ++m)
        for (int i = 1; i <= I; ++i) table[(l - 1) * L + (m - 1)](i - 1) = m_moment_kappa(kappa, l, m, spec, {i, l - m}).real();
    return table;
  }
  const GaussRule& rule = gauss_legendre(kCellGaussNodes);
  const int q = kCellGaussNodes;
  const double j0 = bessel_reduced(0, kappa.value());
  // per node: weight * r * J0(sqrt k)^2 / sigma, phi~_n and psi_n
  Eigen::MatrixXd phi(I * q, L + 1), psi(I * q, L + 1), pw(I * q, 2 * L - 1);
  Eigen::VectorXd base(I * q);
  for (int i = 1; i <= I; ++i) {
    const double lo = spec.cell_lo(i), hi = spec.cell_hi(i), half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int k = 0; k < q; ++k) {
      const int row = (i - 1) * q + k;
      const double r = mid + half * rule.nodes[k];
      base(row) = rule.weights[k] * half * r * j0 * j0 / sigma_kappa(kappa, r) * kInvSqrt2Pi * spec.norm_factor(i);
      for (int n = 0; n <= L; ++n) {
        phi(row, n) = phi_kappa_reduced(kappa, n, r);
        psi(row, n) = psi_kappa(kappa, n, r);
      }
      for (int p = 0; p <= 2 * L - 2; ++p) pw(row, p) = std::pow(r, p);
    }
  }
  for (int l = 1; l <= L; ++l) {
    for (int m = l; m <= L; ++m) {
      Eigen::VectorXd& out = table[(l - 1) * L + (m - 1)];
      for (int i = 0; i < I; ++i) {
        double acc = 0.0;
        for (int k = 0; k < q; ++k) {
          const int row = i * q + k;
          const double bracket = static_cast<double>(l) * m + (l + psi(row, l)) * (m + psi(row, m));
          acc += base(row) * bracket * pw(row, l + m - 2) * phi(row, l) * phi(row, m);
        }
        out(i) = acc;
      }
      table[(m - 1) * L + (l - 1)] = out;
    }
  }
  return table;
}

}  // namespace detail

/// Builds the blocks of A x = b from the positive-index DtN block.
inline MomentSystem assemble_system(const DtNMatrix& dtn, const BasisSpec& spec, Kappa kappa) {
  if (dtn.l_max() < spec.l_max) throw std::invalid_argument("assemble_system: DtN truncation below basis l_max");
  const int L = spec.l_max;
  const auto table = detail::frechet_cell_table(kappa, spec);
  MomentSystem sys{spec, kappa, {}};
  for (int j = -(L - 1); j <= L - 1; ++j) {
    MomentBlock blk;
    blk.j = j;
    for (int l = 1; l <= L; ++l) {
      const int m = l - j;
      if (m >= 1 && m <= L) blk.rows.emplace_back(l, m);
    }
    const int n = static_cast<int>(blk.rows.size());
    blk.a.resize(n, spec.i_count);
    blk.b.resize(n);
    for (int k = 0; k < n; ++k) {
      const auto [l, m] = blk.rows[k];
      blk.a.row(k) = table[(l - 1) * L + (m - 1)].transpose();
      blk.b(k) = dtn(l, m);
    }
    sys.blocks.push_back(std::move(blk));
  }
  return sys;
}

inline nlohmann::json to_json(const MomentSystem& sys) {
  const Eigen::MatrixXcd a = sys.dense_matrix();
  const Eigen::VectorXcd b = sys.dense_rhs();
  nlohmann::json j;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  j["i_count"] = sys.spec.i_count;
  j["l_max"] = sys.spec.l_max;
  j["kappa"] = sys.kappa.value();
  auto entries = nlohmann::json::array();
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) entries.push_back({a(r, c).real(), a(r, c).imag()});
  j["matrix"] = std::move(entries);
  auto rhs = nlohmann::json::array();
  for (int r = 0; r < b.size(); ++r) rhs.push_back({b(r).real(), b(r).imag()});
  j["rhs"] = std::move(rhs);
  return j;
}

}  // namespace calderon
