#pragma once

// Spiderweb (polar tensor) pseudospectral grid on the closed unit disk.
//
// Radially the grid uses the Chebyshev points x_j = cos(j pi / N) on [-1, 1]
// with N = 2 n_r - 1 odd, so no node sits at the origin and exactly n_r nodes
// are positive. A function on the disk is extended to the doubled domain by
// u(-r, theta) = u(r, theta + pi); the full Chebyshev differentiation matrix
// is then folded onto the positive nodes. Angularly the grid is the
// equispaced Fourier grid with an even number of points.

#include "calderon/specfun.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace calderon {

/// Full (N+1)x(N+1) Chebyshev differentiation matrix on x_j = cos(j pi / N).
inline Eigen::MatrixXd chebyshev_diff_matrix(int n) {
  Eigen::VectorXd x(n + 1), c(n + 1);
  for (int j = 0; j <= n; ++j) {
    x(j) = std::cos(kPi * j / n);
    c(j) = ((j == 0 || j == n) ? 2.0 : 1.0) * ((j % 2 == 0) ? 1.0 : -1.0);
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      if (i != j) d(i, j) = (c(i) / c(j)) / (x(i) - x(j));
    }
  }
  // Diagonal by negative row sums.
  for (int i = 0; i <= n; ++i) d(i, i) = -d.row(i).sum();
  return d;
}

/// Periodic first-derivative matrix on n equispaced points (n even).
inline Eigen::MatrixXd fourier_diff_matrix(int n) {
  const double h = 2.0 * kPi / n;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      d(i, j) = 0.5 * ((k % 2 == 0) ? 1.0 : -1.0) / std::tan(0.5 * k * h);
    }
  }
  return d;
}

/// Periodic second-derivative matrix on n equispaced points (n even).
inline Eigen::MatrixXd fourier_diff2_matrix(int n) {
  const double h = 2.0 * kPi / n;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        d(i, j) = -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0;
      } else {
        const int k = i - j;
        const double s = std::sin(0.5 * k * h);
        d(i, j) = -0.5 * ((k % 2 == 0) ? 1.0 : -1.0) / (s * s);
      }
    }
  }
  return d;
}

class SpiderwebGrid {
 public:
  SpiderwebGrid(int n_r, int n_theta) : n_r_(n_r), n_theta_(n_theta) {
    if (n_r < 2) throw std::invalid_argument("SpiderwebGrid: n_r must be >= 2");
    if (n_theta < 4 || n_theta % 2 != 0) {
      throw std::invalid_argument("SpiderwebGrid: n_theta must be even and >= 4");
    }
    const int n = 2 * n_r - 1;
    const Eigen::MatrixXd d = chebyshev_diff_matrix(n);
    const Eigen::MatrixXd d2 = d * d;

    // Increasing radial order: grid index p <-> Chebyshev index n_r - 1 - p;
    // the mirror node -r_p has Chebyshev index n - (n_r - 1 - p) = n_r + p.
    radial_nodes_.resize(n_r);
    for (int p = 0; p < n_r; ++p) radial_nodes_[p] = std::cos(kPi * (n_r - 1 - p) / n);
    radial_nodes_[n_r - 1] = 1.0;

    dr_same_.resize(n_r, n_r);
    dr_mirror_.resize(n_r, n_r);
    drr_same_.resize(n_r, n_r);
    drr_mirror_.resize(n_r, n_r);
    for (int p = 0; p < n_r; ++p) {
      const int row = n_r - 1 - p;
      for (int q = 0; q < n_r; ++q) {
        dr_same_(p, q) = d(row, n_r - 1 - q);
        dr_mirror_(p, q) = d(row, n_r + q);
        drr_same_(p, q) = d2(row, n_r - 1 - q);
        drr_mirror_(p, q) = d2(row, n_r + q);
      }
    }

    angular_nodes_.resize(n_theta);
    for (int t = 0; t < n_theta; ++t) angular_nodes_[t] = 2.0 * kPi * t / n_theta;
    dtheta_ = fourier_diff_matrix(n_theta);
    dtheta2_ = fourier_diff2_matrix(n_theta);

    radial_weights_ = build_radial_weights();
  }

  [[nodiscard]] int n_r() const { return n_r_; }
  [[nodiscard]] int n_theta() const { return n_theta_; }
  [[nodiscard]] int size() const { return n_r_ * n_theta_; }
  [[nodiscard]] const std::vector<double>& radial_nodes() const { return radial_nodes_; }
  [[nodiscard]] const std::vector<double>& angular_nodes() const { return angular_nodes_; }
  [[nodiscard]] double r(int p) const { return radial_nodes_[p]; }
  [[nodiscard]] double theta(int t) const { return angular_nodes_[t]; }
  /// Flat index of node (p, t), row-major over (radial, angular).
  [[nodiscard]] int index(int p, int t) const { return p * n_theta_ + t; }
  /// Angular index of theta + pi.
  [[nodiscard]] int antipode(int t) const { return (t + n_theta_ / 2) % n_theta_; }

  /// Folded radial differentiation: (d_r u)(p, t) = sum_q same(p,q) u(q,t) + mirror(p,q) u(q, t+pi).
  [[nodiscard]] const Eigen::MatrixXd& radial_diff_same() const { return dr_same_; }
  [[nodiscard]] const Eigen::MatrixXd& radial_diff_mirror() const { return dr_mirror_; }
  [[nodiscard]] const Eigen::MatrixXd& radial_diff2_same() const { return drr_same_; }
  [[nodiscard]] const Eigen::MatrixXd& radial_diff2_mirror() const { return drr_mirror_; }
  [[nodiscard]] const Eigen::MatrixXd& angular_diff() const { return dtheta_; }
  [[nodiscard]] const Eigen::MatrixXd& angular_diff2() const { return dtheta2_; }

  /// Weights w_p with sum_p w_p g(r_p) ~ int_0^1 g(r) r dr.
  [[nodiscard]] const std::vector<double>& radial_weights() const { return radial_weights_; }
  /// Area weight of node (p, t) for int over the disk with r dr dtheta.
  [[nodiscard]] double area_weight(int p) const { return radial_weights_[p] * 2.0 * kPi / n_theta_; }

  /// Folded radial derivative of samples stored as an (n_r x n_theta) matrix.
  template <typename Derived>
  [[nodiscard]] auto radial_derivative(const Eigen::MatrixBase<Derived>& u) const {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> shifted(n_r_, n_theta_);
    for (int t = 0; t < n_theta_; ++t) shifted.col(t) = u.col(antipode(t));
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
        dr_same_.cast<Scalar>() * u + dr_mirror_.cast<Scalar>() * shifted;
    return out;
  }

  template <typename Derived>
  [[nodiscard]] auto angular_derivative(const Eigen::MatrixBase<Derived>& u) const {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = u * dtheta_.transpose().cast<Scalar>();
    return out;
  }

 private:
  // Interpolatory rule in s = r^2 on the nodes s_p = (1 + cos(2 pi j / N)) / 2:
  // the samples are fitted by a cosine series in the angle 2 pi j / N and the
  // series is integrated exactly. Exact for even polynomials in r of degree
  // up to 2 n_r - 2, which is the natural class for functions on the disk.
  [[nodiscard]] std::vector<double> build_radial_weights() const {
    const int n = 2 * n_r_ - 1;
    Eigen::MatrixXd c(n_r_, n_r_);
    Eigen::VectorXd moments(n_r_);
    for (int p = 0; p < n_r_; ++p) {
      const double angle = 2.0 * kPi * (n_r_ - 1 - p) / n;
      for (int k = 0; k < n_r_; ++k) c(p, k) = std::cos(k * angle);
    }
    // int_0^1 g r dr = 1/4 int_0^pi G(cos a) sin a da for s = (1 + cos a)/2.
    for (int k = 0; k < n_r_; ++k) {
      if (k == 1) {
        moments(k) = 0.0;
      } else {
        moments(k) = 0.25 * (1.0 + ((k % 2 == 0) ? 1.0 : -1.0)) / (1.0 - static_cast<double>(k) * k);
      }
    }
    const Eigen::VectorXd w = c.transpose().partialPivLu().solve(moments);
    return {w.data(), w.data() + w.size()};
  }

  int n_r_;
  int n_theta_;
  std::vector<double> radial_nodes_;
  std::vector<double> angular_nodes_;
  Eigen::MatrixXd dr_same_, dr_mirror_, drr_same_, drr_mirror_;
  Eigen::MatrixXd dtheta_, dtheta2_;
  std::vector<double> radial_weights_;
};

using GridPtr = std::shared_ptr<const SpiderwebGrid>;

inline GridPtr build_grid(int n_r, int n_theta) { return std::make_shared<const SpiderwebGrid>(n_r, n_theta); }

/// Complex samples on a spiderweb grid, rows radial (increasing r), columns angular.
struct GridField {
  GridPtr grid;
  Eigen::MatrixXcd values;

  GridField() = default;
  explicit GridField(GridPtr g) : grid(std::move(g)), values(Eigen::MatrixXcd::Zero(grid->n_r(), grid->n_theta())) {}
  GridField(GridPtr g, Eigen::MatrixXcd v) : grid(std::move(g)), values(std::move(v)) {
    if (values.rows() != grid->n_r() || values.cols() != grid->n_theta()) {
      throw std::invalid_argument("GridField: value array does not match grid dimensions");
    }
  }

  cplx& operator()(int p, int t) { return values(p, t); }
  const cplx& operator()(int p, int t) const { return values(p, t); }

  GridField& operator-=(const GridField& other) {
    values -= other.values;
    return *this;
  }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
};

using ComplexPolarFunction = std::function<cplx(double r, double theta)>;

/// Pointwise samples of f at every grid node.
template <typename F>
GridField sample(const F& f, const GridPtr& grid) {
  GridField out(grid);
  for (int p = 0; p < grid->n_r(); ++p) {
    for (int t = 0; t < grid->n_theta(); ++t) out(p, t) = cplx(f(grid->r(p), grid->theta(t)));
  }
  return out;
}

/// Trapezoidal approximation of <e_ell, u(1, .)>_{L^2(S^1)}, e_ell = e^{i ell theta}/sqrt(2 pi).
inline cplx boundary_project(const GridField& field, int ell) {
  const SpiderwebGrid& g = *field.grid;
  if (std::abs(ell) >= g.n_theta() / 2) {
    throw std::invalid_argument("boundary_project: |ell| must be < n_theta/2 (aliasing)");
  }
  const int pb = g.n_r() - 1;
  cplx acc = 0.0;
  for (int t = 0; t < g.n_theta(); ++t) acc += std::polar(1.0, -ell * g.theta(t)) * field(pb, t);
  return acc * (2.0 * kPi / g.n_theta()) * kInvSqrt2Pi;
}

enum class Norm { L1, L2, Linf };

inline Norm parse_norm(const std::string& s) {
  if (s == "1" || s == "L1") return Norm::L1;
  if (s == "2" || s == "L2") return Norm::L2;
  if (s == "inf" || s == "Linf") return Norm::Linf;
  throw std::invalid_argument("unknown norm '" + s + "'");
}

/// Quadrature L^p(D) norm of the samples.
inline double lp_norm(const GridField& field, Norm p) {
  const SpiderwebGrid& g = *field.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n_r(); ++i) {
    const double w = g.area_weight(i);
    for (int t = 0; t < g.n_theta(); ++t) {
      const double a = std::abs(field(i, t));
      switch (p) {
        case Norm::L1: acc += w * a; break;
        case Norm::L2: acc += w * a * a; break;
        case Norm::Linf: acc = std::max(acc, a); break;
      }
    }
  }
  return p == Norm::L2 ? std::sqrt(acc) : acc;
}

/// CSV with header r,theta,re,im, row-major over (radial, angular).
inline void write_csv(std::ostream& os, const GridField& field) {
  os << "r,theta,re,im\n";
  os.precision(17);
  for (int p = 0; p < field.grid->n_r(); ++p) {
    for (int t = 0; t < field.grid->n_theta(); ++t) {
      os << field.grid->r(p) << ',' << field.grid->theta(t) << ',' << field(p, t).real() << ','
         << field(p, t).imag() << '\n';
    }
  }
}

inline void write_csv(const std::string& path, const GridField& field) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_csv(os, field);
}

}  // namespace calderon
