// Acceptance run: one PASS/FAIL line per criterion.

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "calderon/calderon.hpp"

using namespace calderon;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Criteria whose failure is documented in the README; they still print FAIL.
const std::set<int> kKnownFailures{10};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> golub_welsch(int n) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) t(k, k - 1) = t(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  return {es.eigenvalues(), 2.0 * es.eigenvectors().row(0).array().square().transpose()};
}

// int_a^b int_0^2pi f r dtheta dr
cplx tensor_quadrature(const std::function<cplx(double, double)>& f, double a, double b, int nr = 40, int nt = 64) {
  static std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> cache;
  if (!cache.count(nr)) cache[nr] = golub_welsch(nr);
  const auto& [x, w] = cache.at(nr);
  cplx acc = 0.0;
  for (int k = 0; k < nr; ++k) {
    const double r = 0.5 * (b - a) * x(k) + 0.5 * (b + a);
    cplx ring = 0.0;
    for (int t = 0; t < nt; ++t) ring += f(r, 2.0 * kPi * t / nt);
    acc += ring * (2.0 * kPi / nt) * w(k) * 0.5 * (b - a) * r;
  }
  return acc;
}

// int_D f(x) e^{-i x . xi} dx
cplx quadrature_fourier(const std::function<double(double, double)>& f, const Eigen::Vector2d& xi) {
  return tensor_quadrature(
      [&](double r, double th) {
        return f(r, th) * std::polar(1.0, -r * (std::cos(th) * xi(0) + std::sin(th) * xi(1)));
      },
      0.0, 1.0, 48, 256);
}

double disk_transform(double k) { return 2.0 * kPi * std::cyl_bessel_j(1.0, k) / k; }

// Interface system for a two-layer radial conductivity, u = A (r/b)^n + B (a/r)^n per layer.
double two_layer_oracle(double rho, double inner, double outer, int n) {
  Eigen::Matrix3d m;
  const double g0 = 1.0, g1 = std::pow(rho, n), d1 = 1.0;
  // unknowns A0, A1, B1; u continuous and gamma u_r continuous at rho, u(1) = 1
  m << g0, -g1, -d1, inner * g0, -outer * g1, outer * d1, 0.0, 1.0, std::pow(rho, n);
  const Eigen::Vector3d x = m.fullPivLu().solve(Eigen::Vector3d(0.0, 0.0, 1.0));
  return outer * n * (x(1) - x(2) * std::pow(rho, n));
}

ConductivityField exp1_gamma() { return parse_conductivity(catalog_scenario("1").conductivity).field; }

ConductivityField gaussian(double amplitude) {
  return field::from_function([amplitude](double r, double th) {
    const double dx = r * std::cos(th) - 0.7 * std::cos(1.0), dy = r * std::sin(th) - 0.7 * std::sin(1.0);
    return amplitude * std::exp(-20.0 * (dx * dx + dy * dy));
  });
}

Outcome criterion1() {
  const DtNMatrix one = dtn_matrix(field::constant(1.0), build_grid(50, 50), 24);
  double err1 = 0.0;
  for (int l = 1; l <= 24; ++l)
    for (int m = 1; m <= 24; ++m) err1 = std::max(err1, std::abs(one(l, m) - (l == m ? double(m) : 0.0)));
  const Kappa kappa(4.0);
  const DtNMatrix s4 = dtn_matrix(field::sigma_kappa(kappa), build_grid(50, 50), 24);
  double err2 = 0.0;
  for (int l = 1; l <= 24; ++l) err2 = std::max(err2, std::abs(s4(l, l) - dtn_sigma_kappa_eigen(kappa, l)));
  return {err1 <= 1e-8 && err2 <= 1e-7, "gamma=1 max dev " + fmt(err1) + " (<= 1e-8), sigma_4 diag dev " + fmt(err2) +
                                            " (<= 1e-7)"};
}

Outcome criterion2() {
  const DtNMatrix a = dtn_matrix(exp1_gamma(), build_grid(50, 50), 24);
  const DtNMatrix b = dtn_matrix(exp1_gamma(), build_grid(100, 100), 24);
  double d = 0.0;
  for (int l = 1; l <= 24; ++l)
    for (int m = 1; m <= 24; ++m) d = std::max(d, std::abs(a(l, m) - b(l, m)));
  return {d <= 5e-4, "max |M(50,50) - M(100,100)| = " + fmt(d) + " (<= 5e-4)"};
}

Outcome criterion3() {
  const RunReport r = run(catalog_scenario("1"));
  const auto& e = r.variants.at(0).errors;
  const bool ok = e.size() >= 2 && e[0].l1 >= 0.02 && e[0].l1 <= 0.06 && e[0].l2 >= 0.04 && e[0].l2 <= 0.10 &&
                  e[0].linf >= 0.20 && e[0].linf <= 0.50 && e[1].l2 < e[0].l2;
  return {ok, "n=0 L1 " + fmt(e[0].l1) + " L2 " + fmt(e[0].l2) + " Linf " + fmt(e[0].linf) + "; n=1 L2 " +
                  fmt(e.size() > 1 ? e[1].l2 : NAN)};
}

Outcome criterion4() {
  std::vector<double> l1;
  for (int L : {24, 34, 44, 49}) {
    Scenario s = catalog_scenario("2a");
    s.l_max = L;
    s.forward = GridSize{50, 2 * (L + 1)};
    s.work_grid = *s.forward;
    s.iterations = 0;
    l1.push_back(run(s).variants.at(0).errors.at(0).l1);
  }
  bool ok = l1.back() <= 0.12;
  for (std::size_t k = 1; k < l1.size(); ++k) ok = ok && l1[k] <= l1[k - 1];
  return {ok, "L1 over L=24,34,44,49: " + fmt(l1[0]) + ", " + fmt(l1[1]) + ", " + fmt(l1[2]) + ", " + fmt(l1[3]) +
                  " (nonincreasing, last <= 0.12)"};
}

Outcome criterion5() {
  auto ratio = [](const std::string& id) {
    const RunReport r = run(catalog_scenario(id));
    return std::make_pair(r.variants.at(0).errors.at(0).l1, r.variants.at(1).errors.at(0).l1);
  };
  const auto [a0, a4] = ratio("3a");
  const auto [b0, b9] = ratio("3b");
  return {a0 >= 5.0 * a4 && b0 >= 3.0 * b9, "3a L1 " + fmt(a0) + " vs " + fmt(a4) + " (ratio " + fmt(a0 / a4) +
                                               " >= 5); 3b L1 " + fmt(b0) + " vs " + fmt(b9) + " (ratio " +
                                               fmt(b0 / b9) + " >= 3)"};
}

Outcome criterion6() {
  const GridPtr g = build_grid(30, 40);
  const double eps = 1e-5;
  double worst = 0.0;
  for (double k : {0.0, 4.0, -9.0}) {
    const Kappa kappa(k);
    const DtNMatrix base = dtn_matrix(field::sigma_kappa(kappa), g, 8);
    const DtNMatrix pert = dtn_matrix(field::sum({field::sigma_kappa(kappa), gaussian(eps)}), g, 8);
    const ConductivityField f = gaussian(1.0);
    const ComplexPolarFunction fc = [&](double r, double th) { return cplx(f(r, th)); };
    Eigen::MatrixXcd mm(8, 8), fd(8, 8);
    for (int l = 1; l <= 8; ++l) {
      for (int m = 1; m <= 8; ++m) {
        mm(l - 1, m - 1) = m_moment_kappa(kappa, l, m, fc);
        fd(l - 1, m - 1) = (pert(l, m) - base(l, m)) / eps;
      }
    }
    worst = std::max(worst, ((fd - mm).array().abs() / mm.array().abs()).maxCoeff());
  }
  return {worst <= 1e-3, "max entrywise |FD - m| / |m| = " + fmt(worst) + " (<= 1e-3), kappa in {0, 4, -9}"};
}

Outcome criterion7() {
  const BasisSpec s(10, 8);
  double worst = 0.0;
  for (int i = 1; i <= 10; ++i) {
    for (int j = -8; j <= 8; ++j) {
      for (int l = 0; l <= 8; ++l) {
        for (int m = 0; m <= 8; ++m) {
          const cplx ref = tensor_quadrature(
                               [&](double r, double th) {
                                 return s.norm_factor(i) * std::polar(kInvSqrt2Pi, j * th) * std::pow(r, l + m) *
                                        std::polar(1.0, (m - l) * th);
                               },
                               s.cell_lo(i), s.cell_hi(i)) /
                           (2.0 * kPi);
          worst = std::max(worst, std::abs(mu_moment_0(l, m, s, {i, j}) - ref));
        }
      }
    }
  }
  const Eigen::MatrixXcd a = assemble_system(sigma_kappa_dtn(Kappa(0.0), 8), s, Kappa(0.0)).dense_matrix();
  int mismatches = 0;
  for (int l = 1; l <= 8; ++l)
    for (int m = 1; m <= 8; ++m)
      for (int i = 1; i <= 10; ++i)
        for (int j = -8; j <= 8; ++j)
          if (a((l - 1) * 8 + (m - 1), s.column(i, j)) != 2.0 * l * m * mu_moment_0(l - 1, m - 1, s, {i, j})) ++mismatches;
  return {worst <= 1e-10 && mismatches == 0,
          "mu0 max dev " + fmt(worst) + " (<= 1e-10), kappa=0 entries not bitwise equal: " + std::to_string(mismatches)};
}

Outcome criterion8() {
  const Eigen::MatrixXcd ones = mu0_table([](double, double) { return cplx(1.0); }, 30);
  double e1 = 0.0;
  for (double k : {0.5, 1.0, 2.0})
    e1 = std::max(e1, std::abs(series_fourier_k0(ones, {k * std::cos(0.4), k * std::sin(0.4)}).value - disk_transform(k)));
  const Kappa kappa(-1.0);
  const auto f = [](double r, double th) { return 1.0 + r * std::cos(th) + 0.5 * r * r * std::sin(2 * th); };
  const Eigen::MatrixXcd mk = mu_kappa_table(kappa, [&](double r, double th) { return cplx(f(r, th)); }, 24);
  double e2 = 0.0;
  for (const Eigen::Vector2d& xi : {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.4, -0.9)})
    e2 = std::max(e2, std::abs(series_fourier_kappa(kappa, mk, xi).value - quadrature_fourier(f, xi)));
  const Eigen::MatrixXcd mk1 = mu_kappa_table(kappa, [](double, double) { return cplx(1.0); }, 24);
  e2 = std::max(e2, std::abs(series_fourier_kappa(kappa, mk1, {1.0, 0.0}).value - disk_transform(1.0)));
  double e3 = 0.0;
  for (double c : {1.0, 2.5})
    e3 = std::max(e3, std::abs(pairing_fourier_born_k0(sigma_kappa_dtn(Kappa(0.0), 40, c), {0.6, 0.8}).value -
                               c * disk_transform(1.0)));
  return {e1 <= 1e-8 && e2 <= 1e-5 && e3 <= 1e-6, "series k0 " + fmt(e1) + " (<= 1e-8), series kappa=-1 " + fmt(e2) +
                                                       " (<= 1e-5), pairing k0 " + fmt(e3) + " (<= 1e-6)"};
}

Outcome criterion9() {
  const LayeredRadialConductivity two({0.5}, {3.0, 1.0});
  double e1 = 0.0;
  for (int n = 1; n <= 24; ++n) {
    const double ref = two_layer_oracle(0.5, 3.0, 1.0, n);
    e1 = std::max(e1, std::abs(radial_dtn_eigen(two, n) - ref) / std::max(1.0, std::abs(ref)));
  }
  const LayeredRadialConductivity three({0.25, 0.5}, {3.0, 2.0, 1.0});
  const ConformalDtN c = conformal_dtn_matrix(three, MobiusMap::identity(), 24);
  double e2 = 0.0;
  for (int l = 1; l <= 24; ++l)
    for (int m = 1; m <= 24; ++m)
      e2 = std::max(e2, std::abs(c.matrix(l, m) - (l == m ? radial_dtn_eigen(three, l) : 0.0)));
  const RunReport r = run(catalog_scenario("4a"));
  const auto& e = r.variants.at(0).errors;
  bool decreasing = e.size() == 5;
  for (std::size_t k = 1; k < e.size(); ++k) decreasing = decreasing && e[k].l1 < e[k - 1].l1;
  const bool ok = e1 <= 1e-12 && e2 <= 1e-10 && decreasing && e.back().l1 <= 0.37;
  return {ok, "two-layer " + fmt(e1) + " (<= 1e-12), identity map " + fmt(e2) + " (<= 1e-10), 4a L1 " + fmt(e.front().l1) +
                  " -> " + fmt(e.back().l1) + (decreasing ? " strictly decreasing" : " NOT strictly decreasing") +
                  " (final <= 0.37)"};
}

Outcome criterion10() {
  const RunReport r = run(catalog_scenario("5"));
  const double e0 = r.variants.at(0).errors.at(0).l1;
  const double e3 = r.variants.at(1).errors.at(0).l1;
  const double e2 = r.variants.at(2).errors.at(0).l1;
  return {e3 <= 2.0 * e0 && e2 > e3, "L1 at eps 0 / 1e-3 / 1e-2: " + fmt(e0) + " / " + fmt(e3) + " / " + fmt(e2) +
                                         " (need " + fmt(e3) + " <= " + fmt(2.0 * e0) + " and " + fmt(e2) + " > " +
                                         fmt(e3) + ")"};
}

Outcome criterion11() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& name) {
    if (!ok) failed.push_back(name);
  };
  // Bessel recurrence
  double rec = 0.0;
  for (int n = 1; n <= 30; ++n)
    for (double x : {0.5, 2.4, 7.0})
      rec = std::max(rec, std::abs(bessel_j(n - 1, x) + bessel_j(n + 1, x) - 2.0 * n / x * bessel_j(n, x)));
  check(rec < 1e-13, "bessel recurrence");
  // Hermitian blocks
  const ConductivityField bump = field::sum({field::constant(1.0), field::point_bump(0.6, kPi / 4, 0.25, 1.0)});
  const DtNMatrix spectral = dtn_matrix(bump, build_grid(50, 50), 24);
  check(spectral.max_hermitian_asymmetry() < 5e-4, "spectral hermitian");
  const LayeredRadialConductivity layers({0.25, 0.5}, {3.0, 0.5, 1.0});
  const DtNMatrix conformal = conformal_dtn_matrix(layers, MobiusMap(4.0, -1.0, 1.0, -4.0), 24).matrix;
  check(conformal.max_hermitian_asymmetry() == 0.0, "conformal hermitian");
  // radial -> diagonal
  const DtNMatrix radial =
      dtn_matrix(field::from_function([](double r, double) { return 1.0 + 0.5 * r * r; }), build_grid(24, 32), 12);
  double off = 0.0;
  for (int l = 1; l <= 12; ++l)
    for (int m = 1; m <= 12; ++m)
      if (l != m) off = std::max(off, std::abs(radial(l, m)));
  check(off < 1e-9, "radial diagonal");
  // rotation equivariance
  const GridPtr g = build_grid(24, 40);
  const double alpha = 2.0 * kPi * 5 / 40;
  const DtNMatrix m0 = dtn_matrix(bump, g, 12);
  const DtNMatrix m1 = dtn_matrix(field::rotated(bump, alpha), g, 12);
  double rot = 0.0;
  for (int l = 1; l <= 12; ++l)
    for (int m = 1; m <= 12; ++m) rot = std::max(rot, std::abs(m1(l, m) - std::polar(1.0, (m - l) * alpha) * m0(l, m)));
  check(rot < 1e-8, "rotation equivariance");
  // reality of reconstructions from exactly Hermitian data
  const BornReconstruction born = born_reconstruct(conformal, Kappa(0.0), BasisSpec(50, 24));
  check(born.sample(build_grid(30, 50)).values.imag().cwiseAbs().maxCoeff() < 1e-10, "reconstruction reality");
  // determinism across thread caps
  set_thread_cap(1);
  const DtNMatrix serial = dtn_matrix(bump, build_grid(20, 30), 14);
  set_thread_cap(0);
  const DtNMatrix parallel = dtn_matrix(bump, build_grid(20, 30), 14);
  check((serial.raw() - parallel.raw()).cwiseAbs().maxCoeff() == 0.0, "thread determinism");
  // noise determinism
  const DtNMatrix n1 = add_noise(spectral, {1e-3, 7}), n2 = add_noise(spectral, {1e-3, 7});
  check((n1.raw() - n2.raw()).cwiseAbs().maxCoeff() == 0.0, "noise determinism");
  std::string detail = "bessel, hermitian, radial-diagonal, rotation, reality, determinism";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"background exactness", criterion1},   {"spectral convergence", criterion2},
      {"experiment 1 table", criterion3},     {"truncation trend", criterion4},
      {"kappa-background advantage", criterion5}, {"Frechet consistency", criterion6},
      {"moment closed forms", criterion7},    {"Fourier oracles", criterion8},
      {"analytic DtN", criterion9},           {"noise robustness", criterion10},
      {"property suites", criterion11}};
  int unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = !o.pass && kKnownFailures.count(id);
    if (!o.pass && !known) ++unexpected;
    std::printf("%s [%d] %s: %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str(),
                sec, known ? " [known failure, see README]" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
