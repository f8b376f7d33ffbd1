#pragma once

// Pseudospectral solution of the conductivity equation div(gamma grad u) = 0
// on the unit disk with Dirichlet data e_m, and assembly of DtN matrices.
//
// The equation is collocated in expanded form
//   gamma (u_rr + u_r / r + u_tt / r^2) + gamma_r u_r + gamma_t u_t / r^2 = 0
// at the interior nodes of a spiderweb grid. The operator is real, so one LU
// factorization serves every boundary datum.

#include "calderon/conductivity.hpp"
#include "calderon/disk_grid.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/parallel.hpp"

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>

namespace calderon {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Samples of gamma, gamma_r and gamma_theta on a grid.
struct ConductivitySamples {
  Eigen::MatrixXd value, d_r, d_theta;
};

/// Where the coefficient derivatives come from. Differentiating the samples
/// spectrally keeps the operator consistent with the interpolant of gamma and
/// converges markedly faster for steep bumps than exact derivatives do.
enum class GradientSource { Spectral, Analytic };

inline ConductivitySamples sample_conductivity(const ConductivityField& gamma, const SpiderwebGrid& g,
                                               GradientSource source = GradientSource::Spectral) {
  ConductivitySamples s;
  s.value.resize(g.n_r(), g.n_theta());
  for (int p = 0; p < g.n_r(); ++p)
    for (int t = 0; t < g.n_theta(); ++t) s.value(p, t) = gamma.value(g.r(p), g.theta(t));
  if (source == GradientSource::Analytic && gamma.has_gradient()) {
    s.d_r.resize(g.n_r(), g.n_theta());
    s.d_theta.resize(g.n_r(), g.n_theta());
    for (int p = 0; p < g.n_r(); ++p) {
      for (int t = 0; t < g.n_theta(); ++t) {
        const auto grad = gamma.gradient(g.r(p), g.theta(t));
        s.d_r(p, t) = grad[0];
        s.d_theta(p, t) = grad[1];
      }
    }
  } else {
    s.d_r = g.radial_derivative(s.value);
    s.d_theta = g.angular_derivative(s.value);
  }
  return s;
}

class ConductivitySolver {
 public:
  ConductivitySolver(const ConductivityField& gamma, GridPtr grid,
                     GradientSource source = GradientSource::Spectral)
      : grid_(std::move(grid)), samples_(sample_conductivity(gamma, *grid_, source)) {
    if (gamma.smoothness == Smoothness::Discontinuous) {
      throw std::invalid_argument("forward solver requires a smooth conductivity; use the analytic DtN");
    }
    if (samples_.value.minCoeff() <= 0.0) throw std::invalid_argument("conductivity must be positive on the grid");
    assemble();
  }

  /// Build from samples directly (used for grid-resampled reconstructions).
  ConductivitySolver(ConductivitySamples samples, GridPtr grid) : grid_(std::move(grid)), samples_(std::move(samples)) {
    if (samples_.value.minCoeff() <= 0.0) throw std::invalid_argument("conductivity must be positive on the grid");
    assemble();
  }

  [[nodiscard]] const GridPtr& grid() const { return grid_; }
  [[nodiscard]] const ConductivitySamples& samples() const { return samples_; }

  /// Solution with boundary data e_m.
  [[nodiscard]] GridField solve(int m) const {
    const SpiderwebGrid& g = *grid_;
    if (std::abs(m) >= g.n_theta() / 2) throw std::invalid_argument("solve: |m| must be < n_theta/2");
    Eigen::MatrixXd boundary(g.n_theta(), 2);
    for (int t = 0; t < g.n_theta(); ++t) {
      const cplx e = std::polar(kInvSqrt2Pi, m * g.theta(t));
      boundary(t, 0) = e.real();
      boundary(t, 1) = e.imag();
    }
    const Eigen::MatrixXd rhs = -boundary_block_ * boundary;
    const Eigen::MatrixXd interior = lu_.solve(rhs);
    GridField u(grid_);
    const int n_int = g.n_r() - 1;
    for (int p = 0; p < n_int; ++p)
      for (int t = 0; t < g.n_theta(); ++t) {
        const int i = g.index(p, t);
        u(p, t) = cplx(interior(i, 0), interior(i, 1));
      }
    for (int t = 0; t < g.n_theta(); ++t) u(n_int, t) = cplx(boundary(t, 0), boundary(t, 1));
    return u;
  }

  /// Max interior collocation residual |L u| relative to max |gamma| * max |u|.
  [[nodiscard]] double relative_residual(const GridField& u) const {
    const SpiderwebGrid& g = *grid_;
    Eigen::VectorXcd flat(g.size());
    for (int p = 0; p < g.n_r(); ++p)
      for (int t = 0; t < g.n_theta(); ++t) flat(g.index(p, t)) = u(p, t);
    const int n_int = (g.n_r() - 1) * g.n_theta();
    const Eigen::VectorXcd res = interior_block_.cast<cplx>() * flat.head(n_int) +
                                 boundary_block_.cast<cplx>() * flat.tail(g.n_theta());
    return res.cwiseAbs().maxCoeff() / (samples_.value.cwiseAbs().maxCoeff() * flat.cwiseAbs().maxCoeff());
  }

  /// gamma(1, theta) d_r u(1, theta) at the boundary nodes.
  [[nodiscard]] Eigen::VectorXcd boundary_flux(const GridField& u) const {
    const SpiderwebGrid& g = *grid_;
    const int pb = g.n_r() - 1;
    // Only the last row of the folded radial derivative is needed.
    Eigen::VectorXcd flux(g.n_theta());
    const auto& same = g.radial_diff_same();
    const auto& mirror = g.radial_diff_mirror();
    for (int t = 0; t < g.n_theta(); ++t) {
      cplx acc = 0.0;
      const int ta = g.antipode(t);
      for (int q = 0; q < g.n_r(); ++q) acc += same(pb, q) * u(q, t) + mirror(pb, q) * u(q, ta);
      flux(t) = samples_.value(pb, t) * acc;
    }
    return flux;
  }

  /// Trapezoidal projection of the flux for datum e_m onto e_l for every l in rows.
  [[nodiscard]] DtNMatrix dtn_matrix(int l_max, DtNBlock block = DtNBlock::Positive) const {
    const SpiderwebGrid& g = *grid_;
    if (l_max >= g.n_theta() / 2) throw std::invalid_argument("dtn_matrix: l_max must be < n_theta/2");
    std::ostringstream prov;
    prov << "spectral(" << g.n_r() << "," << g.n_theta() << ")";
    DtNMatrix out(l_max, block, prov.str());
    const int lo = out.first_index();
    const int count = l_max - lo + 1;
    std::vector<Eigen::VectorXcd> columns(count);
    parallel_for(count, [&](int k) {
      const int m = lo + k;
      columns[k] = boundary_flux(solve(m));
    });
    const double h = 2.0 * kPi / g.n_theta();
    for (int k = 0; k < count; ++k) {
      const int m = lo + k;
      for (int l = lo; l <= l_max; ++l) {
        cplx acc = 0.0;
        for (int t = 0; t < g.n_theta(); ++t) acc += std::polar(1.0, -l * g.theta(t)) * columns[k](t);
        out(l, m) = acc * h * kInvSqrt2Pi;
      }
    }
    return out;
  }

 private:
  void assemble() {
    const SpiderwebGrid& g = *grid_;
    const int nr = g.n_r(), nt = g.n_theta();
    const int n_int = (nr - 1) * nt;
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n_int, g.size());
    const auto& d1s = g.radial_diff_same();
    const auto& d1m = g.radial_diff_mirror();
    const auto& d2s = g.radial_diff2_same();
    const auto& d2m = g.radial_diff2_mirror();
    const auto& a1 = g.angular_diff();
    const auto& a2 = g.angular_diff2();
    for (int p = 0; p < nr - 1; ++p) {
      const double r = g.r(p);
      for (int t = 0; t < nt; ++t) {
        const int row = g.index(p, t);
        const double gam = samples_.value(p, t);
        const double coef_r = gam / r + samples_.d_r(p, t);
        const double coef_tt = gam / (r * r);
        const double coef_t = samples_.d_theta(p, t) / (r * r);
        const int ta = g.antipode(t);
        for (int q = 0; q < nr; ++q) {
          op(row, g.index(q, t)) += gam * d2s(p, q) + coef_r * d1s(p, q);
          op(row, g.index(q, ta)) += gam * d2m(p, q) + coef_r * d1m(p, q);
        }
        for (int s = 0; s < nt; ++s) op(row, g.index(p, s)) += coef_tt * a2(t, s) + coef_t * a1(t, s);
      }
    }
    interior_block_ = op.leftCols(n_int);
    boundary_block_ = op.rightCols(nt);
    lu_.compute(interior_block_);
    const double rcond = lu_.rcond();
    if (!(rcond > 1e-15)) {
      std::ostringstream msg;
      msg << "forward solver: collocation matrix is numerically singular (rcond=" << rcond << ")";
      throw NumericalError(msg.str());
    }
  }

  GridPtr grid_;
  ConductivitySamples samples_;
  Eigen::MatrixXd interior_block_;
  Eigen::MatrixXd boundary_block_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline GridField solve_dirichlet(const ConductivityField& gamma, const GridPtr& grid, int m,
                                 GradientSource source = GradientSource::Spectral) {
  return ConductivitySolver(gamma, grid, source).solve(m);
}

inline DtNMatrix dtn_matrix(const ConductivityField& gamma, const GridPtr& grid, int l_max,
                            DtNBlock block = DtNBlock::Positive, GradientSource source = GradientSource::Spectral) {
  return ConductivitySolver(gamma, grid, source).dtn_matrix(l_max, block);
}

/// Exact DtN eigenvalue of sigma_kappa on e_ell: sigma_kappa(1) (|ell| + psi_ell(1)).
inline double dtn_sigma_kappa_eigen(Kappa kappa, int ell) {
  if (ell == 0) return 0.0;
  return sigma_kappa(kappa, 1.0) * (phi_kappa_boundary_slope(kappa, ell) - phi_kappa_boundary_slope(kappa, 0));
}

/// Diagonal DtN matrix of scale * sigma_kappa.
inline DtNMatrix sigma_kappa_dtn(Kappa kappa, int l_max, double scale = 1.0, DtNBlock block = DtNBlock::Positive) {
  DtNMatrix out(l_max, block, "analytic", kappa.value());
  for (int l = out.first_index(); l <= l_max; ++l) {
    if (l != 0) out(l, l) = scale * dtn_sigma_kappa_eigen(kappa, l);
  }
  return out;
}

}  // namespace calderon
