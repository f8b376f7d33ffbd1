#pragma once

// Tikhonov-regularized least squares for the moment system, L-curve selection
// of the regularization parameter, the Born reconstruction and the iterative
// refinement gamma_n = gamma_{n-1} + gamma^B - (gamma_{n-1})^B.
//
// Every block A_j of the moment system is real, so one SVD per block gives
// x_lambda, ||A x_lambda - b|| and ||x_lambda|| in closed form for all lambda.

#include "calderon/disk_grid.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/forward_solver.hpp"
#include "calderon/moment_engine.hpp"
#include "calderon/parallel.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace calderon {

/// Dense generic solve of (A* A + lambda I) x = A* b by Cholesky.
inline Eigen::VectorXcd tikhonov_solve(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("tikhonov_solve: lambda must be positive");
  Eigen::MatrixXcd normal = a.adjoint() * a;
  normal.diagonal().array() += lambda;
  return normal.llt().solve(a.adjoint() * b);
}

class TikhonovSolver {
 public:
  explicit TikhonovSolver(const MomentSystem& sys) : spec_(sys.spec) {
    factors_.resize(sys.blocks.size());
    parallel_for(static_cast<int>(sys.blocks.size()), [&](int k) {
      const MomentBlock& blk = sys.blocks[k];
      Factor& f = factors_[k];
      f.j = blk.j;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(blk.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
      f.s = svd.singularValues();
      f.v = svd.matrixV();
      f.utb = svd.matrixU().transpose().cast<cplx>() * blk.b;
      f.perp_sq = std::max(0.0, blk.b.squaredNorm() - f.utb.squaredNorm());
    });
    for (const auto& f : factors_) {
      if (f.s.size() > 0) scale_ = std::max(scale_, f.s(0) * f.s(0));
    }
  }

  [[nodiscard]] const BasisSpec& spec() const { return spec_; }
  /// ||A||^2, the largest squared singular value.
  [[nodiscard]] double scale() const { return scale_; }

  /// x_lambda in dense column order spec.column(i, j).
  [[nodiscard]] Eigen::VectorXcd solve(double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("tikhonov_solve: lambda must be positive");
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(spec_.columns());
    for (const auto& f : factors_) {
      Eigen::VectorXcd coeff(f.s.size());
      for (int k = 0; k < f.s.size(); ++k) coeff(k) = f.utb(k) * (f.s(k) / (f.s(k) * f.s(k) + lambda));
      const Eigen::VectorXcd xj = f.v.cast<cplx>() * coeff;
      for (int i = 1; i <= spec_.i_count; ++i) x(spec_.column(i, f.j)) = xj(i - 1);
    }
    return x;
  }

  [[nodiscard]] double residual_sq(double lambda) const {
    double acc = 0.0;
    for (const auto& f : factors_) {
      for (int k = 0; k < f.s.size(); ++k) {
        const double filt = lambda / (f.s(k) * f.s(k) + lambda);
        acc += filt * filt * std::norm(f.utb(k));
      }
      acc += f.perp_sq;
    }
    return acc;
  }

  [[nodiscard]] double solution_sq(double lambda) const {
    double acc = 0.0;
    for (const auto& f : factors_) {
      for (int k = 0; k < f.s.size(); ++k) {
        const double filt = f.s(k) / (f.s(k) * f.s(k) + lambda);
        acc += filt * filt * std::norm(f.utb(k));
      }
    }
    return acc;
  }

 private:
  struct Factor {
    int j = 0;
    Eigen::VectorXd s;
    Eigen::MatrixXd v;
    Eigen::VectorXcd utb;
    double perp_sq = 0.0;
  };
  BasisSpec spec_;
  std::vector<Factor> factors_;
  double scale_ = 0.0;
};

inline Eigen::VectorXcd tikhonov_solve(const MomentSystem& sys, double lambda) {
  return TikhonovSolver(sys).solve(lambda);
}

// ---- L-curve -------------------------------------------------------------------

struct LCurvePoint {
  double lambda = 0.0;
  double log_res2 = 0.0;
  double log_sol2 = 0.0;
  /// Signed discrete curvature; positive at a corner, zero at the endpoints.
  double curvature = 0.0;
};

struct LCurveSelection {
  double lambda = 0.0;
  int index = -1;
  /// True when a sharp interior curvature maximum was found.
  bool sharp_corner = false;
  /// Index of that maximum, -1 without a sharp corner.
  int corner_index = -1;
  std::vector<LCurvePoint> trace;
};

/// n log-spaced values spanning [1e-12, 1e2] * scale.
inline std::vector<double> default_lambda_grid(double scale, int n = 60) {
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k) grid[k] = scale * std::pow(10.0, -12.0 + 14.0 * k / (n - 1));
  return grid;
}

/// Signed curvature of the circle through three points (Menger curvature).
inline double menger_curvature(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double ax = x1 - x0, ay = y1 - y0, bx = x2 - x1, by = y2 - y1, cx = x2 - x0, cy = y2 - y0;
  const double denom = std::sqrt((ax * ax + ay * ay) * (bx * bx + by * by) * (cx * cx + cy * cy));
  if (denom == 0.0) return 0.0;
  return 2.0 * (ax * by - ay * bx) / denom;
}

inline constexpr double kMinCornerCurvature = 1.0;
/// |curvature| below which the L-curve counts as straight.
inline constexpr double kStraightCurvature = 1e-3;

inline LCurveSelection l_curve_select(const TikhonovSolver& solver, const std::vector<double>& grid,
                                     double min_corner_curvature = kMinCornerCurvature) {
  const int n = static_cast<int>(grid.size());
  if (n < 20) throw std::invalid_argument("l_curve_select: need at least 20 lambda values");
  LCurveSelection sel;
  sel.trace.resize(n);
  for (int k = 0; k < n; ++k) {
    if (!(grid[k] > 0.0) || (k > 0 && !(grid[k] > grid[k - 1]))) {
      throw std::invalid_argument("l_curve_select: lambda grid must be positive and increasing");
    }
    sel.trace[k].lambda = grid[k];
    sel.trace[k].log_res2 = std::log(std::max(solver.residual_sq(grid[k]), 1e-300));
    sel.trace[k].log_sol2 = std::log(std::max(solver.solution_sq(grid[k]), 1e-300));
  }
  const double spread = sel.trace.back().log_res2 - sel.trace.front().log_res2;
  if (!std::isfinite(spread) || std::abs(spread) < 1e-12) {
    throw NumericalError("l_curve_select: degenerate L-curve (residual does not vary with lambda)");
  }
  for (int k = 1; k + 1 < n; ++k) {
    const auto &p = sel.trace[k - 1], &q = sel.trace[k], &s = sel.trace[k + 1];
    sel.trace[k].curvature = menger_curvature(p.log_res2, p.log_sol2, q.log_res2, q.log_sol2, s.log_res2, s.log_sol2);
  }
  // A sharp corner is a global curvature maximum of at least min_corner_curvature
  // (bend radius below one log unit) with two interior neighbors below it.
  int peak = 1;
  for (int k = 1; k + 1 < n; ++k) {
    if (sel.trace[k].curvature > sel.trace[peak].curvature) peak = k;
  }
  const double c = sel.trace[peak].curvature;
  sel.sharp_corner = peak >= 2 && peak + 2 < n && c >= min_corner_curvature &&
                     c > sel.trace[peak - 1].curvature && c > sel.trace[peak + 1].curvature;
  int k = 1;
  if (sel.sharp_corner) {
    // leave the corner towards larger lambda until the curvature vanishes
    sel.corner_index = peak;
    k = peak;
    while (k + 2 < n && sel.trace[k].curvature > kStraightCurvature) ++k;
  } else {
    for (int j = 2; j + 1 < n; ++j) {
      if (std::abs(sel.trace[j].curvature) < std::abs(sel.trace[k].curvature)) k = j;
    }
  }
  // most regularized point of the straight stretch
  while (k + 2 < n && std::abs(sel.trace[k + 1].curvature) <= kStraightCurvature) ++k;
  sel.index = k;
  sel.lambda = grid[sel.index];
  return sel;
}

inline LCurveSelection l_curve_select(const MomentSystem& sys, const std::vector<double>& grid,
                                     double min_corner_curvature = kMinCornerCurvature) {
  return l_curve_select(TikhonovSolver(sys), grid, min_corner_curvature);
}

inline void write_lcurve_csv(std::ostream& os, const std::vector<LCurvePoint>& trace) {
  os << "lambda,log_res2,log_sol2,curvature\n";
  os.precision(17);
  for (const auto& p : trace) os << p.lambda << ',' << p.log_res2 << ',' << p.log_sol2 << ',' << p.curvature << '\n';
}

// ---- reconstruction -----------------------------------------------------------------

struct BornReconstruction {
  BasisSpec spec;
  Kappa kappa;
  Eigen::VectorXcd coefficients;  // dense column order spec.column(i, j)
  double lambda = 0.0;
  double residual_norm = 0.0;
  double solution_norm = 0.0;
  std::vector<LCurvePoint> trace;

  [[nodiscard]] cplx coefficient(int i, int j) const { return coefficients(spec.column(i, j)); }

  /// sum_{i,j} x_{i,j} f_{i,j}(r, theta).
  [[nodiscard]] cplx value(double r, double theta) const {
    const int i = spec.cell_of(r);
    cplx acc = 0.0;
    for (int j = -spec.l_max; j <= spec.l_max; ++j) acc += coefficient(i, j) * std::polar(1.0, j * theta);
    return acc * kInvSqrt2Pi * spec.norm_factor(i);
  }

  [[nodiscard]] GridField sample(const GridPtr& grid) const {
    return calderon::sample([this](double r, double th) { return value(r, th); }, grid);
  }
};

inline BornReconstruction make_reconstruction(const TikhonovSolver& solver, Kappa kappa, double lambda) {
  BornReconstruction rec;
  rec.spec = solver.spec();
  rec.kappa = kappa;
  rec.lambda = lambda;
  rec.coefficients = solver.solve(lambda);
  rec.residual_norm = std::sqrt(solver.residual_sq(lambda));
  rec.solution_norm = std::sqrt(solver.solution_sq(lambda));
  return rec;
}

/// Born approximation at background sigma_kappa from the positive-index DtN block.
inline BornReconstruction born_reconstruct(const DtNMatrix& dtn, Kappa kappa, const BasisSpec& spec,
                                           std::optional<double> lambda = std::nullopt) {
  const MomentSystem sys = assemble_system(dtn, spec, kappa);
  const TikhonovSolver solver(sys);
  if (lambda) return make_reconstruction(solver, kappa, *lambda);
  auto sel = l_curve_select(solver, default_lambda_grid(solver.scale()));
  BornReconstruction rec = make_reconstruction(solver, kappa, sel.lambda);
  rec.trace = std::move(sel.trace);
  return rec;
}

inline nlohmann::json to_json(const BornReconstruction& rec) {
  nlohmann::json j;
  j["i_count"] = rec.spec.i_count;
  j["l_max"] = rec.spec.l_max;
  j["kappa"] = rec.kappa.value();
  j["lambda"] = rec.lambda;
  j["residual_norm"] = rec.residual_norm;
  j["solution_norm"] = rec.solution_norm;
  auto coeffs = nlohmann::json::array();
  for (int i = 1; i <= rec.spec.i_count; ++i) {
    for (int jj = -rec.spec.l_max; jj <= rec.spec.l_max; ++jj) {
      const cplx x = rec.coefficient(i, jj);
      coeffs.push_back({i, jj, x.real(), x.imag()});
    }
  }
  j["coefficients"] = std::move(coeffs);
  return j;
}

inline BornReconstruction reconstruction_from_json(const nlohmann::json& j) {
  BornReconstruction rec;
  rec.spec = BasisSpec(j.at("i_count").get<int>(), j.at("l_max").get<int>());
  rec.kappa = Kappa(j.value("kappa", 0.0));
  rec.lambda = j.value("lambda", 0.0);
  rec.residual_norm = j.value("residual_norm", 0.0);
  rec.solution_norm = j.value("solution_norm", 0.0);
  rec.coefficients = Eigen::VectorXcd::Zero(rec.spec.columns());
  for (const auto& e : j.at("coefficients")) {
    const int i = e.at(0).get<int>(), jj = e.at(1).get<int>();
    if (i < 1 || i > rec.spec.i_count || std::abs(jj) > rec.spec.l_max) {
      throw std::invalid_argument("reconstruction JSON: coefficient index out of range");
    }
    rec.coefficients(rec.spec.column(i, jj)) = cplx(e.at(2).get<double>(), e.at(3).get<double>());
  }
  return rec;
}

inline void save_reconstruction(const std::string& path, const BornReconstruction& rec) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << to_json(rec).dump(1) << '\n';
}

inline BornReconstruction load_reconstruction(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return reconstruction_from_json(nlohmann::json::parse(is));
}

/// CSV r,theta,re,im of the reconstruction at n equispaced angles on the circle of radius r.
inline void write_cross_section_csv(std::ostream& os, const BornReconstruction& rec, double r, int n = 360) {
  os << "r,theta,re,im\n";
  os.precision(17);
  for (int t = 0; t < n; ++t) {
    const double th = 2.0 * kPi * t / n;
    const cplx v = rec.value(r, th);
    os << r << ',' << th << ',' << v.real() << ',' << v.imag() << '\n';
  }
}

// ---- iterative scheme ------------------------------------------------------------------

struct ErrorRow {
  int step = 0;
  double l1 = 0.0, l2 = 0.0, linf = 0.0;
};

/// |gamma - field| in L^1, L^2, L^inf on the grid.
inline ErrorRow error_row(const ComplexPolarFunction& truth, const ComplexPolarFunction& approx, const GridPtr& grid,
                          int step = 0) {
  const GridField diff = sample([&](double r, double th) { return truth(r, th) - approx(r, th); }, grid);
  return {step, lp_norm(diff, Norm::L1), lp_norm(diff, Norm::L2), lp_norm(diff, Norm::Linf)};
}

inline void write_error_table_csv(std::ostream& os, const std::vector<ErrorRow>& rows, const std::string& key = "n") {
  os << key << ",L1,L2,Linf\n";
  os.precision(10);
  for (const auto& e : rows) os << e.step << ',' << e.l1 << ',' << e.l2 << ',' << e.linf << '\n';
}

inline void write_error_table_text(std::ostream& os, const std::vector<ErrorRow>& rows, const std::string& key = "n") {
  char line[128];
  std::snprintf(line, sizeof line, "%6s %12s %12s %12s\n", key.c_str(), "L1", "L2", "Linf");
  os << line;
  for (const auto& e : rows) {
    std::snprintf(line, sizeof line, "%6d %12.5f %12.5f %12.5f\n", e.step, e.l1, e.l2, e.linf);
    os << line;
  }
}

struct IterationConfig {
  int steps = 1;
  /// Grid for the forward solves of the iterates.
  GridPtr forward_grid;
  /// Grid on which L^p errors are measured (defaults to the forward grid).
  GridPtr error_grid;
  /// Reuse the lambda of gamma^B for every (gamma_{n-1})^B; otherwise rerun the L-curve.
  bool reuse_lambda = true;
  /// Stop when a step multiplies the L^2 error by more than this.
  double divergence_factor = 2.0;
};

struct IterationResult {
  /// gamma_0 = gamma^B, gamma_1, ... (coefficients in the basis of gamma^B).
  std::vector<BornReconstruction> iterates;
  std::vector<ErrorRow> errors;  // empty without a reference conductivity
  bool diverged = false;
  std::string stop_reason;
};

/// Runs the fixed-point scheme at kappa = 0. Each iterate is sampled directly
/// on the forward grid (no mollification) and its DtN matrix recomputed.
inline IterationResult iterate_scheme(const BornReconstruction& born0, const IterationConfig& cfg,
                                      const ComplexPolarFunction& truth = {}) {
  if (!born0.kappa.is_zero()) throw std::invalid_argument("iterate_scheme: only defined at kappa = 0");
  if (!cfg.forward_grid) throw std::invalid_argument("iterate_scheme: forward grid required");
  if (cfg.forward_grid->n_theta() / 2 <= born0.spec.l_max) {
    throw std::invalid_argument("iterate_scheme: forward grid too coarse for l_max");
  }
  const GridPtr error_grid = cfg.error_grid ? cfg.error_grid : cfg.forward_grid;
  IterationResult out;
  out.iterates.push_back(born0);
  auto record = [&](const BornReconstruction& rec, int step) {
    if (!truth) return;
    out.errors.push_back(error_row(truth, [&](double r, double th) { return rec.value(r, th); }, error_grid, step));
  };
  record(born0, 0);
  for (int n = 1; n <= cfg.steps; ++n) {
    const BornReconstruction& prev = out.iterates.back();
    ConductivitySamples samples;
    const SpiderwebGrid& g = *cfg.forward_grid;
    samples.value.resize(g.n_r(), g.n_theta());
    for (int p = 0; p < g.n_r(); ++p)
      for (int t = 0; t < g.n_theta(); ++t) samples.value(p, t) = prev.value(g.r(p), g.theta(t)).real();
    if (samples.value.minCoeff() <= 0.0) {
      out.diverged = true;
      out.stop_reason = "iterate " + std::to_string(n - 1) + " is not positive on the forward grid";
      break;
    }
    samples.d_r = g.radial_derivative(samples.value);
    samples.d_theta = g.angular_derivative(samples.value);
    const DtNMatrix dtn = ConductivitySolver(std::move(samples), cfg.forward_grid).dtn_matrix(born0.spec.l_max);
    const BornReconstruction prev_born =
        born_reconstruct(dtn, born0.kappa, born0.spec,
                         cfg.reuse_lambda ? std::optional<double>(born0.lambda) : std::nullopt);
    BornReconstruction next = prev;
    next.coefficients = prev.coefficients + born0.coefficients - prev_born.coefficients;
    next.trace.clear();
    out.iterates.push_back(std::move(next));
    record(out.iterates.back(), n);
    if (truth && out.errors.size() >= 2) {
      const double before = out.errors[out.errors.size() - 2].l2, after = out.errors.back().l2;
      if (after > cfg.divergence_factor * before) {
        out.diverged = true;
        out.stop_reason = "L2 error grew from " + std::to_string(before) + " to " + std::to_string(after);
        break;
      }
    }
  }
  return out;
}

}  // namespace calderon
