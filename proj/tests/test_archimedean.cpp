#include <gtest/gtest.h>

#include <circle_forms/archimedean.hpp>

#include "gen.hpp"

using namespace circle_forms;

namespace {

double unit_ball_volume(std::size_t n) { return std::pow(pi, n / 2.0) / std::tgamma(n / 2.0 + 1); }

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  return errc::overflow;
}

}  // namespace

TEST(Bump, Examples) {
  auto psi = standard_bump(4, 2, 0.5);
  EXPECT_EQ(psi(dvec{0, 0, 0, 0}), 1.0);
  EXPECT_EQ(psi(dvec{0.9, 0.3, 0, 0}), 1.0);
  EXPECT_EQ(psi(dvec{2.1, 0, 0, 0}), 0.0);
  EXPECT_EQ(standard_bump(3, 1.5, 0)(dvec{0, 0, 0}), 1.0);
  EXPECT_EQ(psi.support_radius(), 2.0);
  EXPECT_EQ(psi.sup_abs(), 1.0);
}

TEST(Bump, BadPlateau) {
  EXPECT_EQ(code_of([] { standard_bump(2, 1, 1.0); }), errc::bad_plateau);
  EXPECT_EQ(code_of([] { standard_bump(2, 1, -0.1); }), errc::bad_plateau);
  EXPECT_EQ(code_of([] { standard_bump(2, 0, 0.2); }), errc::bad_plateau);
}

TEST(BumpProperty, SupportMonotoneAndScaling) {
  for (double plateau : {0.0, 0.3, 0.8}) {
    auto psi = standard_bump(3, 1.7, plateau);
    double prev = 2;
    for (int k = 0; k <= 400; ++k) {
      double r = 2.0 * k / 400;
      double v = psi.radial(r);
      EXPECT_LE(v, prev);
      EXPECT_GE(v, 0);
      if (r >= 1.7) {
        EXPECT_EQ(v, 0.0);
      }
      if (r <= plateau * 1.7) {
        EXPECT_EQ(v, 1.0);
      }
      prev = v;
    }
    for (int trial = 0; trial < 200; ++trial) {
      auto m = gen::dvec(3, -4, 4);
      double C = gen::real(0.5, 3);
      dvec s = m;
      for (auto& x : s) x /= C;
      EXPECT_NEAR(psi.scaled(m, C), psi(s), 1e-14);
      double r = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
      if (r > 1.7) {
        EXPECT_EQ(psi(s), 0.0);
      }
    }
  }
}

TEST(Bump, IntegralAgainstShellQuadrature) {
  for (std::size_t n : {1u, 2u, 3u, 4u}) {
    auto psi = standard_bump(n, 1.3, 0.4);
    double shells = integrate_adaptive([&](double r) { return psi.radial(r) * sphere_area(n) * std::pow(r, n - 1.0); },
                                       0, 1.3, 1e-12)
                        .value.real();
    EXPECT_NEAR(psi.integral(), shells, 1e-9);
    EXPECT_GE(psi.l1_fourier(), 1.0 - 1e-9);  // Psi(0) is the integral of its transform
  }
}

TEST(GaussianFourier, Examples) {
  EXPECT_NEAR(gaussian_fourier_1d(pi, 0), 1, 1e-15);
  EXPECT_NEAR(gaussian_fourier_1d(pi, 1), std::exp(-pi), 1e-15);
  EXPECT_NEAR(gaussian_fourier_1d(2 * pi, 1), std::sqrt(0.5) * std::exp(-pi / 2), 1e-15);
  EXPECT_THROW(gaussian_fourier_1d(0, 1), error);
}

TEST(GaussianFourierProperty, MatchesQuadrature) {
  for (double a : {pi, 2 * pi, 0.7}) {
    for (int k = -12; k <= 12; ++k) {
      double y = 0.25 * k;
      cplx num = integrate_adaptive([&](double x) { return std::exp(-a * x * x) * e(-x * y); }, -12, 12, 1e-13).value;
      EXPECT_NEAR(num.real(), gaussian_fourier_1d(a, y), 1e-8);
      EXPECT_NEAR(num.imag(), 0, 1e-8);
    }
  }
}

TEST(TentProperty, SincSquaredDuality) {
  for (double eta : {0.5, 1.0, 3.0})
    for (int k = -20; k <= 20; ++k) {
      double y = 0.37 * k;
      cplx num = integrate_adaptive([&](double x) { return tent(eta, x) * e(-x * y); }, -eta, 0, 1e-13).value +
                 integrate_adaptive([&](double x) { return tent(eta, x) * e(-x * y); }, 0, eta, 1e-13).value;
      EXPECT_NEAR(num.real(), tent_fourier(eta, y), 1e-8) << eta << " " << y;
      EXPECT_NEAR(num.imag(), 0, 1e-8);
    }
}

TEST(OscIntegral, VolumeAtZeroPhase) {
  for (std::size_t n : {1u, 2u, 3u, 4u}) {
    auto f = battery::two_i(n);
    auto psi = standard_bump(n, 1.2, 0.3);
    double C = 1.7;
    cplx v = osc_integral(f, psi, {0, C, ivec(n, 0), 1}, 1e-8);
    EXPECT_NEAR(v.real(), std::pow(C, double(n)) * psi.integral(), 1e-6 * std::pow(C, double(n)));
    EXPECT_NEAR(v.imag(), 0, 1e-8);
  }
}

TEST(OscIntegral, Errors) {
  auto psi5 = standard_bump(5, 1, 0);
  EXPECT_EQ(code_of([&] { osc_integral(battery::two_i(5), psi5, {0, 1, ivec(5, 0), 1}, 1e-6); }),
            errc::dimension_too_high);
  auto psi2 = standard_bump(2, 1, 0);
  EXPECT_EQ(code_of([&] { osc_integral(battery::two_i(2), psi2, {0, 1, ivec(3, 0), 1}, 1e-6); }),
            errc::dimension_mismatch);
}

TEST(OscIntegralProperty, TrivialBound) {
  auto psi = standard_bump(2, 1, 0.2);
  for (auto f : {battery::two_i(2), battery::a2(), battery::hyperbolic()})
    for (int trial = 0; trial < 12; ++trial) {
      OscIntegralParams p{gen::real(-3, 3), gen::real(0.5, 2), gen::ivec(2, -4, 4), gen::integer(1, 5)};
      double tol = 1e-7;
      cplx v = osc_integral(f, psi, p, tol);
      EXPECT_LE(std::abs(v), p.C * p.C * psi.integral() + tol);
    }
}

TEST(OscIntegralProperty, StationaryPhaseDecay) {
  auto f = battery::two_i(2);
  auto psi = standard_bump(2, 1, 0);
  // |I(x)| <= (integral of |Psi hat|) |det(x A)|^{-1/2}
  for (double x : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    cplx v = osc_integral(f, psi, {x, 1, {0, 0}, 1}, 1e-9);
    EXPECT_LE(std::abs(v), psi.l1_fourier() / (x * 2) + 1e-9) << x;
  }
}

TEST(OscIntegralProperty, NonstationaryDecay) {
  auto f = battery::two_i(2);
  auto psi = standard_bump(2, 1, 0);
  const double x = 0.25, C = 1;
  // threshold q C |x| sigma_1 (U + 1) sqrt(n) = 1.41
  std::vector<double> mags;
  for (i64 r : {2, 4, 8}) mags.push_back(std::abs(osc_integral(f, psi, {x, C, {r, 0}, 1}, 1e-13)));
  for (std::size_t i = 1; i < mags.size(); ++i) EXPECT_LE(mags[i], mags[i - 1] / 8) << i;
}

TEST(QuadraticPhaseProperty, BoundByL1Fourier) {
  auto psi = standard_bump(2, 1, 0.25);
  const double l1 = psi.l1_fourier();
  for (int trial = 0; trial < 30; ++trial) {
    dmatrix M(2);
    M(0, 0) = gen::real(-6, 6), M(1, 1) = gen::real(-6, 6);
    M(0, 1) = M(1, 0) = gen::real(-3, 3);
    double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    if (std::abs(det) < 0.05) continue;
    dvec b = gen::dvec(2, -3, 3);
    auto res = quadratic_phase_integral(M, b, gen::real(0, 1), psi, 1e-9);
    EXPECT_LE(std::abs(res.value), l1 / std::sqrt(std::abs(det)) + 1e-8);
  }
}

TEST(PoissonCheck, ClassicalOnBump) {
  auto psi = standard_bump(2, 1, 0.3);
  auto [lat, dual] = poisson_check(battery::two_i(2), psi, {0, 0}, 1, 0, 2.5, 1e-9);
  EXPECT_NEAR(std::abs(lat - dual), 0, 1e-7);
}

TEST(PoissonCheck, OneVariableModTwo) {
  auto f = battery::two_i(1);
  auto psi = standard_bump(1, 1, 0.2);
  for (double x : {0.0, 0.3, -0.7})
    for (i64 h : {0, 1}) {
      auto [lat, dual] = poisson_check(f, psi, {h}, 2, x, 1.5, 1e-9);
      EXPECT_NEAR(std::abs(lat - dual), 0, 1e-6) << x << " " << h;
    }
}

TEST(PoissonCheck, TinySupport) {
  auto f = battery::two_i(2);
  auto psi = standard_bump(2, 0.8, 0);
  // a narrow bump has a wide transform: summed to 1e-6 to keep the run short
  auto [lat, dual] = poisson_check(f, psi, {0, 0}, 1, 0.2, 1, 1e-6);
  EXPECT_NEAR(std::abs(lat - psi(dvec{0, 0})), 0, 1e-15);
  EXPECT_NEAR(std::abs(lat - dual), 0, 1e-5);
}

TEST(PoissonCheckProperty, RandomResidues) {
  auto psi = standard_bump(2, 1, 0.3);
  for (auto f : {battery::a2(), battery::hyperbolic()})
    for (int trial = 0; trial < 2; ++trial) {
      i64 q = gen::integer(1, 3);
      ivec h = gen::ivec(2, 0, q - 1);
      auto [lat, dual] = poisson_check(f, psi, h, q, gen::real(-0.5, 0.5), 1.6, 1e-9);
      EXPECT_NEAR(std::abs(lat - dual), 0, 1e-8);
    }
}

TEST(ShellVolumeDensity, Examples) {
  EXPECT_NEAR(shell_volume_density(battery::two_i(2), 1, 1), pi, 1e-12);
  EXPECT_NEAR(shell_volume_density(battery::two_i(4), 1, 1), pi * pi, 1e-12);
  EXPECT_EQ(shell_volume_density(battery::two_i(4), 3, 0), 0.0);
  EXPECT_EQ(code_of([] { shell_volume_density(battery::hyperbolic(), 1, 1); }), errc::not_positive_definite);
}

TEST(ShellVolumeDensity, BallVolumeDifferences) {
  // F = |m|^2 for 2I_n, so {F < t} is a ball of radius sqrt(t)
  for (std::size_t n : {2u, 3u, 4u, 6u})
    for (double t : {0.5, 1.0, 7.0}) {
      double eps = 1e-5;
      double V = unit_ball_volume(n);
      double num = V * (std::pow(t + eps, n / 2.0) - std::pow(t - eps, n / 2.0)) / (2 * eps);
      EXPECT_NEAR(shell_volume_density(battery::two_i(n), t, 1), num, 1e-6 * num);
    }
}

TEST(RealFactor, FourSquaresPlateau) {
  auto psi = standard_bump(4, 2, 0.75);
  EXPECT_NEAR(real_factor(battery::two_i(4), psi, 9, 3), pi * pi, 1e-4);
}

TEST(RealFactor, NegativeDefiniteVanishes) {
  auto psi = standard_bump(4, 2, 0.3);
  EXPECT_EQ(real_factor(battery::diag({-2, -2, -2, -2}), psi, 5, 2), 0.0);
}

TEST(RealFactor, NegativeDefiniteMirrorsPositive) {
  auto psi = standard_bump(3, 2, 0.3);
  double a = real_factor(battery::a3(), psi, 6, 2);
  auto neg = battery::make({{-2, 1, 0}, {1, -2, 1}, {0, 1, -2}});
  EXPECT_NEAR(real_factor(neg, psi, -6, 2), a, 1e-9 * a);
}

TEST(RealFactorProperty, UpperBound) {
  for (auto f : {battery::two_i(4), battery::a4(), battery::a3(), battery::diag({2, 4, 6}), battery::diag({2, 2, -2}),
                 battery::make({{2, 1, 0}, {1, -2, 0}, {0, 0, 4}})})
    for (double plateau : {0.0, 0.5})
      for (double n : {1.0, 3.0}) {
        auto psi = standard_bump(f.n_vars(), 1.5, plateau);
        double C = 1.5;
        double v = real_factor(f, psi, n, C);
        EXPECT_GE(v, -1e-12);
        EXPECT_LE(v, real_factor_bound(f, psi, n, C) * (1 + 1e-6));
        if (f.positive_definite()) {
          EXPECT_LE(v * std::pow(C, double(f.n_vars()) - 2), shell_volume_density(f, n, 1) * (1 + 1e-6));
        }
      }
}

TEST(SingularIntegral, Errors) {
  auto psi = standard_bump(2, 1, 0);
  EXPECT_EQ(code_of([&] { singular_integral(battery::two_i(2), psi, 1, 1, INFINITY); }), errc::non_integrable);
  EXPECT_NO_THROW(singular_integral(battery::two_i(2), psi, 1, 1, 4));
}

TEST(SingularIntegral, PlateauClosedForm) {
  auto psi = standard_bump(4, 2, 0.75);
  auto J = singular_integral(battery::two_i(4), psi, 9, 3, INFINITY);
  double closed = shell_volume_density(battery::two_i(4), 9, 1);
  EXPECT_NEAR(J.value, closed, 0.01 * closed);
}

TEST(SingularIntegralProperty, NormalizedStableAcrossScales) {
  auto f = battery::a4();
  auto psi = standard_bump(4, 1.5, 0.2);
  std::vector<double> v;
  for (double C : {2.0, 4.0, 8.0}) v.push_back(singular_integral(f, psi, 0.8 * C * C, C, INFINITY).value / (C * C));
  for (double x : v) EXPECT_NEAR(x, v[0], 0.02 * v[0]);
}

TEST(SingularIntegralProperty, CutoffErrorShrinks) {
  auto f = battery::two_i(4);
  auto psi = standard_bump(4, 1.5, 0.2);
  double full = singular_integral(f, psi, 1, 1, INFINITY).value;
  auto worst = [&](double lo) {
    double w = 0;
    for (int k = 0; k < 8; ++k) w = std::max(w, std::abs(singular_integral(f, psi, 1, 1, lo * (1 + k / 8.0)).value - full));
    return w;
  };
  // B^{1 - n/2} = 1/B: an eightfold larger cutoff should cut the error well below half
  EXPECT_LT(worst(32), worst(4) / 2);
}

TEST(SingularIntegralProperty, MatchesRealFactor) {
  for (auto f : {battery::two_i(4), battery::a3()}) {
    auto psi = standard_bump(f.n_vars(), 1.5, 0.2);
    double C = 2;
    double rf = real_factor(f, psi, 3, C);
    double J = singular_integral(f, psi, 3, C, INFINITY).value / std::pow(C, double(f.n_vars()) - 2);
    EXPECT_NEAR(J, rf, 0.02 * rf);
  }
}
