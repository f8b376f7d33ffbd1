#pragma once

// Gauss-Legendre rules and a polar tensor rule for smooth integrands on the disk.

#include "calderon/specfun.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace calderon {

struct GaussRule {
  std::vector<double> nodes;    // in (-1, 1), increasing
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule (Golub-Welsch). Cached per n.
inline const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::map<int, GaussRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussRule rule;
  for (int k = 0; k < n; ++k) {
    rule.nodes.push_back(eig.eigenvalues()(k));
    const double v = eig.eigenvectors()(0, k);
    rule.weights.push_back(2.0 * v * v);
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

/// int_a^b g(r) dr with an n-point rule.
template <class F>
auto integrate_interval(F&& g, double a, double b, int n) {
  const GaussRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  decltype(g(mid)) acc = g(mid) * 0.0;
  for (int k = 0; k < n; ++k) acc += rule.weights[k] * g(mid + half * rule.nodes[k]);
  return acc * half;
}

/// Tensor rule on the disk: Gauss-Legendre on radial panels, trapezoid in angle.
struct PolarQuadrature {
  int radial_panels = 16;
  int nodes_per_panel = 24;
  int angular_nodes = 256;
  /// Extra radial breakpoints (e.g. discontinuities) in (0, 1).
  std::vector<double> breakpoints;

  /// Radial nodes and weights for int_0^1 g(r) r dr (the Jacobian is folded into the weights).
  [[nodiscard]] std::vector<std::pair<double, double>> radial_rule() const {
    std::vector<double> edges;
    for (int k = 0; k <= radial_panels; ++k) edges.push_back(static_cast<double>(k) / radial_panels);
    for (double b : breakpoints) edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const GaussRule& rule = gauss_legendre(nodes_per_panel);
    std::vector<std::pair<double, double>> out;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double half = 0.5 * (edges[e + 1] - edges[e]), mid = 0.5 * (edges[e + 1] + edges[e]);
      for (int k = 0; k < nodes_per_panel; ++k) {
        const double r = mid + half * rule.nodes[k];
        out.emplace_back(r, rule.weights[k] * half * r);
      }
    }
    return out;
  }

  /// int_D f r dr dtheta.
  [[nodiscard]] cplx integrate(const std::function<cplx(double, double)>& f) const {
    const double h = 2.0 * kPi / angular_nodes;
    cplx total = 0.0;
    for (const auto& [r, w] : radial_rule()) {
      cplx ring = 0.0;
      for (int t = 0; t < angular_nodes; ++t) ring += f(r, h * t);
      total += ring * h * w;
    }
    return total;
  }
};

}  // namespace calderon
