#include <gtest/gtest.h>

#include <cmath>

#include "calderon/specfun.hpp"

using namespace calderon;

namespace {

// Plain power series in long double, term by term from the definition.
long double series_j(int n, long double x) {
  long double term = 1.0L;
  for (int k = 1; k <= n; ++k) term *= x / (2.0L * k);
  long double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= -(x * x / 4.0L) / (static_cast<long double>(k) * (n + k));
    sum += term;
  }
  return sum;
}

long double series_i(int n, long double x) {
  long double term = 1.0L;
  for (int k = 1; k <= n; ++k) term *= x / (2.0L * k);
  long double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= (x * x / 4.0L) / (static_cast<long double>(k) * (n + k));
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(Kappa, RejectsFirstZeroAndAbove) {
  EXPECT_NO_THROW(Kappa(5.78));
  EXPECT_NO_THROW(Kappa(-100.0));
  EXPECT_THROW(Kappa(5.7832), std::invalid_argument);
  EXPECT_THROW(Kappa(6.0), std::invalid_argument);
  EXPECT_THROW(Kappa(std::nan("")), std::invalid_argument);
}

TEST(BesselJ, KnownValues) {
  EXPECT_EQ(bessel_j(0, 0.0), 1.0);
  EXPECT_NEAR(bessel_j(0, 1.0), 0.7651976865579666, 1e-15);
  EXPECT_NEAR(bessel_j(1, 1.0), 0.4400505857449335, 1e-15);
  EXPECT_NEAR(bessel_j(0, 2.0), 0.2238907791412357, 1e-15);
  EXPECT_NEAR(bessel_j(5, 10.0), -0.2340615281867936, 1e-13);
}

TEST(BesselJ, NegativeOrderParity) {
  for (double x : {0.3, 1.7, 4.2}) {
    EXPECT_DOUBLE_EQ(bessel_j(-3, x), -bessel_j(3, x));
    EXPECT_DOUBLE_EQ(bessel_j(-4, x), bessel_j(4, x));
  }
}

TEST(BesselJ, MatchesLongDoubleSeries) {
  for (int n = 0; n <= 64; n += 3) {
    for (double x : {0.01, 0.5, 1.0, 2.4, 5.0, 9.0}) {
      const double ref = static_cast<double>(series_j(n, x));
      EXPECT_NEAR(bessel_j(n, x), ref, 1e-13 * std::max(1.0, std::abs(ref))) << n << ' ' << x;
    }
  }
}

TEST(BesselJ, MatchesLibraryRoutine) {
  for (int n = 0; n <= 64; ++n) {
    for (double x = 0.25; x <= 10.0; x += 0.75) {
      EXPECT_NEAR(bessel_j(n, x), std::cyl_bessel_j(static_cast<double>(n), x), 1e-12) << n << ' ' << x;
    }
  }
}

TEST(BesselJ, ThreeTermRecurrence) {
  for (int n = 1; n <= 40; ++n) {
    for (double x : {0.4, 1.3, 2.4, 6.1}) {
      const double lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
      const double rhs = 2.0 * n / x * bessel_j(n, x);
      EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(BesselI, KnownValuesAndSeries) {
  EXPECT_NEAR(bessel_i(0, 1.0), 1.2660658777520082, 1e-15);
  EXPECT_NEAR(bessel_i(1, 1.0), 0.5651591039924851, 1e-15);
  for (int n = 0; n <= 20; ++n) {
    for (double x : {0.2, 1.0, 3.0, 8.0}) {
      const double ref = static_cast<double>(series_i(n, x));
      EXPECT_NEAR(bessel_i(n, x), ref, 1e-13 * ref);
    }
  }
}

TEST(BesselI, RecurrenceAndJRelation) {
  for (int n = 1; n <= 20; ++n) {
    for (double x : {0.7, 2.0, 3.0}) {
      EXPECT_NEAR(bessel_i(n - 1, x) - bessel_i(n + 1, x), 2.0 * n / x * bessel_i(n, x),
                  1e-13 * bessel_i(n - 1, x));
      // I_n(x) = i^{-n} J_n(i x); through the reduced series at s = (ix)^2 = -x^2
      const cplx reduced = bessel_reduced(n, cplx(-x * x, 0.0));
      EXPECT_NEAR(std::pow(0.5 * x, n) * reduced.real(), bessel_i(n, x), 1e-13 * bessel_i(n, x));
    }
  }
}

TEST(BesselReduced, ComplexAgreesWithReal) {
  for (int n = 0; n <= 10; ++n) {
    for (double s : {-9.0, -1.0, 0.0, 0.5, 4.0}) {
      const cplx z = bessel_reduced(n, cplx(s, 0.0));
      EXPECT_NEAR(z.real(), bessel_reduced(n, s), 1e-15 * std::max(1.0, std::abs(z.real())) + 1e-300);
      EXPECT_EQ(z.imag(), 0.0);
    }
  }
  EXPECT_THROW(bessel_reduced(-1, 1.0), std::invalid_argument);
}

TEST(SigmaKappa, Examples) {
  EXPECT_EQ(sigma_kappa(Kappa(0.0), 0.7), 1.0);
  const double j02 = 0.2238907791412357;
  EXPECT_NEAR(sigma_kappa(Kappa(4.0), 1.0), j02 * j02, 1e-15);
  const double i03 = 4.880792585865024;
  EXPECT_NEAR(sigma_kappa(Kappa(-9.0), 1.0), i03 * i03, 1e-12);
  EXPECT_EQ(sigma_kappa(Kappa(4.0), 0.0), 1.0);
}

TEST(SigmaKappa, PositiveOnClosedDisk) {
  for (double k : {-50.0, -9.0, 0.0, 1.0, 4.0, 5.7}) {
    for (int p = 0; p <= 200; ++p) EXPECT_GT(sigma_kappa(Kappa(k), p / 200.0), 0.0);
  }
}

TEST(SigmaKappa, ContinuousInKappaAtZero) {
  for (double r : {0.3, 0.9, 1.0}) {
    EXPECT_NEAR(sigma_kappa(Kappa(1e-8), r), 1.0, 1e-8);
    EXPECT_NEAR(sigma_kappa(Kappa(-1e-8), r), 1.0, 1e-8);
  }
}

TEST(SigmaKappa, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (double k : {-9.0, 4.0}) {
    for (double r : {0.2, 0.5, 0.95}) {
      const double fd = (sigma_kappa(Kappa(k), r + h) - sigma_kappa(Kappa(k), r - h)) / (2 * h);
      EXPECT_NEAR(sigma_kappa_dr(Kappa(k), r), fd, 1e-7);
    }
  }
}

TEST(PhiKappa, Examples) {
  EXPECT_NEAR(phi_kappa(Kappa(0.0), 3, 0.5), 0.125, 1e-15);
  EXPECT_NEAR(phi_kappa(Kappa(4.0), 2, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(phi_kappa(Kappa(-9.0), 5, 1.0), 1.0, 1e-15);
  const double ref = std::cyl_bessel_j(1.0, 1.0) / std::cyl_bessel_j(1.0, 2.0);
  EXPECT_NEAR(phi_kappa(Kappa(4.0), 1, 0.5), ref, 1e-14);
  const double ref_i = std::cyl_bessel_i(2.0, 1.5) / std::cyl_bessel_i(2.0, 3.0);
  EXPECT_NEAR(phi_kappa(Kappa(-9.0), -2, 0.5), ref_i, 1e-14);
}

TEST(PhiKappa, BoundarySlopeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (double k : {-9.0, 0.0, 4.0}) {
    for (int l : {0, 1, 4, 12}) {
      const double fd = (phi_kappa(Kappa(k), l, 1.0 + h) - phi_kappa(Kappa(k), l, 1.0 - h)) / (2 * h);
      EXPECT_NEAR(phi_kappa_boundary_slope(Kappa(k), l), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(PsiKappa, ZeroAtOriginAndAtKappaZero) {
  EXPECT_EQ(psi_kappa(Kappa(4.0), 3, 0.0), 0.0);
  EXPECT_EQ(psi_kappa(Kappa(0.0), 3, 0.7), 0.0);
}

TEST(PsiKappa, MatchesBesselRatios) {
  for (double k : {4.0, 1.0}) {
    const double sk = std::sqrt(k);
    for (int l : {1, 2, 5}) {
      for (double r : {0.3, 0.8, 1.0}) {
        const double x = sk * r;
        const double ref = x * (std::cyl_bessel_j(1.0, x) / std::cyl_bessel_j(0.0, x) -
                                std::cyl_bessel_j(l + 1.0, x) / std::cyl_bessel_j(static_cast<double>(l), x));
        EXPECT_NEAR(psi_kappa(Kappa(k), l, r), ref, 1e-13);
      }
    }
  }
  // kappa < 0: I-branch, x J1/J0 -> -x I1/I0
  const double x = 3.0 * 0.6;
  const double ref = -x * (std::cyl_bessel_i(1.0, x) / std::cyl_bessel_i(0.0, x) -
                           std::cyl_bessel_i(3.0, x) / std::cyl_bessel_i(2.0, x));
  EXPECT_NEAR(psi_kappa(Kappa(-9.0), 2, 0.6), ref, 1e-13);
}

TEST(PsiKappa, OrderZeroVanishes) {
  for (double r : {0.1, 0.5, 1.0}) EXPECT_NEAR(psi_kappa(Kappa(4.0), 0, r), 0.0, 1e-15);
}
