#pragma once

// Conductivity fields on the unit disk in polar coordinates, with optional
// analytic gradients, plus the smooth bump profiles used by the phantoms.

#include "calderon/specfun.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace calderon {

enum class Smoothness { Smooth, Discontinuous };

/// (d/dr, d/dtheta) of a scalar field.
using PolarGradient = std::array<double, 2>;

struct ConductivityField {
  std::function<double(double, double)> value;
  /// Optional exact gradient.
  std::function<PolarGradient(double, double)> gradient;
  double lower_bound = 0.0;
  Smoothness smoothness = Smoothness::Smooth;

  double operator()(double r, double theta) const { return value(r, theta); }
  [[nodiscard]] bool has_gradient() const { return static_cast<bool>(gradient); }
};

/// g(z, z0, R) = exp(-|z-z0|^2 / (R^2 - |z-z0|^2)) inside the disk of radius R, 0 outside.
inline double bump(double dist_sq, double radius) {
  const double r2 = radius * radius;
  if (dist_sq >= r2) return 0.0;
  return std::exp(-dist_sq / (r2 - dist_sq));
}

/// d g / d(dist_sq).
inline double bump_slope(double dist_sq, double radius) {
  const double r2 = radius * radius;
  if (dist_sq >= r2) return 0.0;
  const double gap = r2 - dist_sq;
  return -bump(dist_sq, radius) * r2 / (gap * gap);
}

/// Scalar version g(x, x0, R) on the real line.
inline double bump_1d(double x, double x0, double radius) { return bump((x - x0) * (x - x0), radius); }

namespace field {

inline ConductivityField constant(double c) {
  if (!(c > 0)) throw std::invalid_argument("constant conductivity must be positive");
  return {[c](double, double) { return c; }, [](double, double) { return PolarGradient{0.0, 0.0}; }, c,
          Smoothness::Smooth};
}

/// scale * sigma_kappa(r).
inline ConductivityField sigma_kappa(Kappa kappa, double scale = 1.0) {
  const double lb = scale * std::min(calderon::sigma_kappa(kappa, 0.0), calderon::sigma_kappa(kappa, 1.0));
  return {[=](double r, double) { return scale * calderon::sigma_kappa(kappa, r); },
          [=](double r, double) { return PolarGradient{scale * sigma_kappa_dr(kappa, r), 0.0}; }, lb,
          Smoothness::Smooth};
}

/// amplitude * g(r e^{i theta}, center_r e^{i center_theta}, R).
inline ConductivityField point_bump(double center_r, double center_theta, double radius, double amplitude) {
  const double cx = center_r * std::cos(center_theta);
  const double cy = center_r * std::sin(center_theta);
  auto value = [=](double r, double th) {
    const double dx = r * std::cos(th) - cx, dy = r * std::sin(th) - cy;
    return amplitude * bump(dx * dx + dy * dy, radius);
  };
  auto grad = [=](double r, double th) {
    const double c = std::cos(th), s = std::sin(th);
    const double dx = r * c - cx, dy = r * s - cy;
    const double slope = amplitude * bump_slope(dx * dx + dy * dy, radius);
    // d|z-z0|^2/dr = 2 (dx c + dy s), d/dtheta = 2 r (-dx s + dy c)
    return PolarGradient{slope * 2.0 * (dx * c + dy * s), slope * 2.0 * r * (-dx * s + dy * c)};
  };
  return {value, grad, std::min(0.0, amplitude), Smoothness::Smooth};
}

/// amplitude * g(r, r0, Rr) * g(theta, theta0, Rtheta), theta taken in [0, 2 pi).
inline ConductivityField polar_bump(double r0, double radial_width, double theta0, double angular_width,
                                    double amplitude) {
  auto wrap = [](double th) {
    double t = std::fmod(th, 2.0 * kPi);
    return t < 0 ? t + 2.0 * kPi : t;
  };
  auto value = [=](double r, double th) {
    return amplitude * bump_1d(r, r0, radial_width) * bump_1d(wrap(th), theta0, angular_width);
  };
  auto grad = [=](double r, double th) {
    const double t = wrap(th);
    const double dr = r - r0, dt = t - theta0;
    const double gr = bump(dr * dr, radial_width), gt = bump(dt * dt, angular_width);
    return PolarGradient{amplitude * bump_slope(dr * dr, radial_width) * 2.0 * dr * gt,
                         amplitude * gr * bump_slope(dt * dt, angular_width) * 2.0 * dt};
  };
  return {value, grad, std::min(0.0, amplitude), Smoothness::Smooth};
}

/// Pointwise sum; the gradient is kept only if every term has one.
inline ConductivityField sum(std::vector<ConductivityField> terms) {
  bool all_grad = true;
  double lb = 0.0;
  Smoothness sm = Smoothness::Smooth;
  for (const auto& t : terms) {
    all_grad = all_grad && t.has_gradient();
    lb += t.lower_bound;
    if (t.smoothness == Smoothness::Discontinuous) sm = Smoothness::Discontinuous;
  }
  auto shared = std::make_shared<std::vector<ConductivityField>>(std::move(terms));
  ConductivityField out;
  out.value = [shared](double r, double th) {
    double v = 0.0;
    for (const auto& t : *shared) v += t.value(r, th);
    return v;
  };
  if (all_grad) {
    out.gradient = [shared](double r, double th) {
      PolarGradient g{0.0, 0.0};
      for (const auto& t : *shared) {
        const auto gt = t.gradient(r, th);
        g[0] += gt[0];
        g[1] += gt[1];
      }
      return g;
    };
  }
  out.lower_bound = lb;
  out.smoothness = sm;
  return out;
}

/// Wraps an arbitrary evaluator (no gradient) with a lower bound found on a probe lattice.
inline ConductivityField from_function(std::function<double(double, double)> f,
                                       Smoothness smoothness = Smoothness::Smooth) {
  double lb = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j < 64; ++j) lb = std::min(lb, f(i / 40.0, 2.0 * kPi * j / 64));
  }
  return {std::move(f), {}, lb, smoothness};
}

/// Rotation by alpha: gamma_alpha(r, theta) = gamma(r, theta - alpha).
inline ConductivityField rotated(const ConductivityField& g, double alpha) {
  ConductivityField out = g;
  out.value = [g, alpha](double r, double th) { return g.value(r, th - alpha); };
  if (g.has_gradient()) out.gradient = [g, alpha](double r, double th) { return g.gradient(r, th - alpha); };
  return out;
}

}  // namespace field
}  // namespace calderon
