#include <gtest/gtest.h>

#include <circle_forms/harness.hpp>

#include <algorithm>
#include <numeric>

#include "gen.hpp"
#include "oracles.hpp"

using namespace circle_forms;

namespace {

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  return errc::overflow;
}

// sum of divisors of n not divisible by 4
i64 sigma_not4(i64 n) {
  i64 s = 0;
  for (i64 d = 1; d <= n; ++d)
    if (n % d == 0 && d % 4 != 0) s += d;
  return s;
}

AsymptoticReport fake(i64 n, double residual) {
  AsymptoticReport r;
  r.n_target = n;
  r.residual = residual;
  r.exact = residual;
  return r;
}

}  // namespace

TEST(OptimalFareyOrder, IsSigmaTimesScale) {
  for (int t = 0; t < 20; ++t) {
    auto f = gen::form(gen::integer(1, 4));
    double C = gen::real(0.5, 10);
    EXPECT_DOUBLE_EQ(optimal_farey_order(f, C), f.sigma1() * C);
  }
}

TEST(MainTerm, FourSquaresPlateau) {
  auto f = battery::two_i(4);
  auto psi = standard_bump(4, 2, 0.6);  // plateau radius 1.2 covers the unit level set
  for (i64 n : {5, 25}) {
    double C = std::sqrt(double(n));
    auto m = main_term(f, psi, C, n, 50);
    double series = singular_series_truncated({f, n, 50}, 50).value;
    EXPECT_NEAR(m.real_factor, pi * pi, 1e-5 * pi * pi);
    EXPECT_NEAR(m.value, series * pi * pi * double(n), 1e-5 * m.value);
  }
}

TEST(MainTerm, NegativeDefiniteVanishes) {
  auto f = battery::diag({-2, -2, -2, -2});
  auto m = main_term(f, standard_bump(4, 2, 0.5), 3, 7);
  EXPECT_EQ(m.value, 0.0);
}

TEST(MainTerm, CutoffOneKeepsOnlyTheRealFactor) {
  auto f = battery::a4();
  auto psi = standard_bump(4, 2, 0.3);
  const double C = 2.5;
  auto m = main_term(f, psi, C, 6, 1);
  EXPECT_EQ(m.series, 1.0);
  EXPECT_DOUBLE_EQ(m.value, real_factor(f, psi, 6, C) * C * C);
}

TEST(MainTerm, NeedsFourVariables) {
  EXPECT_EQ(code_of([] { main_term(battery::a3(), standard_bump(3, 2, 0.5), 2, 3); }), errc::precondition_violated);
}

TEST(MainTermProperty, OddTargetsMatchFourSquares) {
  // r_4(n) = 8 sigma(n) for odd n; the series at Q = 200 is within a fraction of a percent
  auto f = battery::two_i(4);
  auto psi = standard_bump(4, 2, 0.6);
  for (int t = 0; t < 2; ++t) {
    i64 n = 2 * gen::integer(0, 20) + 1;
    auto m = main_term(f, psi, std::sqrt(double(n)), n);
    double r4 = 8.0 * double(sigma_not4(n));
    EXPECT_NEAR(m.value, r4, 5e-3 * r4) << n;
  }
}

TEST(AsymptoticReport, FourSquaresAtTwentyFive) {
  auto f = battery::two_i(4);
  auto r = asymptotic_report(f, 25, 100);
  EXPECT_EQ(r.exact, double(rep_count_exact(f, 25)));
  EXPECT_EQ(r.exact, 248.0);
  EXPECT_TRUE(std::isfinite(r.residual));
  EXPECT_EQ(r.residual, r.exact - r.main_term);
  EXPECT_NEAR(r.main_term, 248, 2.5);
  EXPECT_DOUBLE_EQ(r.normalized_error, r.residual / std::pow(25.0, 0.75 + 0.01));
  EXPECT_FALSE(r.near_zero_main);
  EXPECT_EQ(r.params.C, 5.0);
  EXPECT_DOUBLE_EQ(r.params.Q, f.sigma1() * 5);
  EXPECT_EQ(r.params.Q_cut, 100.0);
}

TEST(AsymptoticReport, LocallyObstructedTargetsAreFlagged) {
  // 4 I_4 gives F = 2|m|^2, which misses every odd n
  auto f = battery::diag({4, 4, 4, 4});
  auto reports = asymptotic_reports(f, {1, 3, 5, 7, 9, 2, 4});
  for (const auto& r : reports) {
    if (r.n_target % 2) {
      EXPECT_EQ(r.exact, 0.0);
      EXPECT_TRUE(r.near_zero_main) << r.n_target;
    } else {
      EXPECT_GT(r.exact, 0.0);
      EXPECT_FALSE(r.near_zero_main) << r.n_target;
    }
  }
}

TEST(AsymptoticReport, Errors) {
  EXPECT_EQ(code_of([] { asymptotic_report(battery::hyperbolic(), 5); }), errc::not_positive_definite);
  EXPECT_EQ(code_of([] { asymptotic_report(battery::a3(), 5); }), errc::precondition_violated);
  EXPECT_EQ(code_of([] { asymptotic_reports(battery::two_i(4), {3, 0}); }), errc::precondition_violated);
}

TEST(AsymptoticReportProperty, BatchMatchesSingleAndIdentityIsExact) {
  auto f = battery::a4();
  std::vector<i64> ns;
  for (int t = 0; t < 12; ++t) ns.push_back(gen::integer(1, 300));
  auto batch = asymptotic_reports(f, ns, 60);
  double mx = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    auto one = asymptotic_report(f, ns[i], 60);
    EXPECT_EQ(batch[i].exact, one.exact);
    EXPECT_EQ(batch[i].main_term, one.main_term);
    EXPECT_EQ(batch[i].residual, batch[i].exact - batch[i].main_term);
    mx = std::max(mx, std::abs(one.normalized_error));
  }
  EXPECT_EQ(max_normalized_error(batch), mx);
}

TEST(AsymptoticReportProperty, RelativeResidualFallsAcrossDecades) {
  // medians over n in [10, 100), [100, 1000), [1000, 10000)
  auto f = battery::two_i(4);
  std::vector<double> medians;
  for (i64 lo : {10, 100, 1000}) {
    std::vector<i64> ns;
    for (int t = 0; t < 25; ++t) ns.push_back(gen::integer(lo, 10 * lo - 1));
    std::vector<double> rel;
    for (const auto& r : asymptotic_reports(f, ns)) rel.push_back(std::abs(r.residual) / r.exact);
    std::nth_element(rel.begin(), rel.begin() + 12, rel.end());
    medians.push_back(rel[12]);
  }
  EXPECT_LT(medians[1], medians[0]);
  EXPECT_LT(medians[2], medians[1]);
}

TEST(ErrorExponentFit, FourSquaresPowersOfTwo) {
  std::vector<i64> ns;
  for (int k = 4; k <= 12; ++k) ns.push_back(i64(1) << k);
  double slope = error_exponent_fit(asymptotic_reports(battery::two_i(4), ns));
  EXPECT_LE(slope, 0.75 + 0.35);
}

TEST(ErrorExponentFit, ExactPowerLawAndShuffle) {
  std::vector<AsymptoticReport> rs;
  for (i64 n = 10; n <= 1000; n += 110) rs.push_back(fake(n, -3 * std::pow(double(n), 0.6)));
  double s = error_exponent_fit(rs);
  EXPECT_NEAR(s, 0.6, 1e-12);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(rs.begin(), rs.end(), gen::rng());
    EXPECT_EQ(error_exponent_fit(rs), s);
  }
}

TEST(ErrorExponentFit, AllZeroResidualsGiveMinusInfinity) {
  std::vector<AsymptoticReport> rs;
  for (i64 n = 10; n <= 170; n += 20) rs.push_back(fake(n, 0));
  EXPECT_EQ(error_exponent_fit(rs), -std::numeric_limits<double>::infinity());
}

TEST(ErrorExponentFit, InsufficientData) {
  std::vector<AsymptoticReport> seven;
  for (i64 n = 10; n < 17; ++n) seven.push_back(fake(n * n, 1));
  EXPECT_EQ(code_of([&] { error_exponent_fit(seven); }), errc::insufficient_data);
  std::vector<AsymptoticReport> narrow;
  for (i64 n = 10; n < 30; ++n) narrow.push_back(fake(n, 1));
  EXPECT_EQ(code_of([&] { error_exponent_fit(narrow); }), errc::insufficient_data);
  std::vector<AsymptoticReport> lone;
  for (i64 n = 10; n <= 170; n += 20) lone.push_back(fake(n, n == 10 ? 1 : 0));
  EXPECT_EQ(code_of([&] { error_exponent_fit(lone); }), errc::insufficient_data);
}

TEST(FullDecomposition, SmokeReconciles) {
  auto f = battery::two_i(2);
  auto d = full_decomposition(f, standard_bump(2, 1.5, 0), 2, 5, 1, 3, 1e-3);
  EXPECT_EQ(d.R, rep_weighted(f, standard_bump(2, 1.5, 0), 2, 5));
  EXPECT_EQ(d.total, d.M + d.E1 + d.E2 + d.E3);
  EXPECT_EQ(d.E2, 0.0);  // Q = 1 leaves no outer range
  EXPECT_LE(std::abs(d.total - d.R), 1e-3 + d.e3_tail_bound);
}

TEST(FullDecomposition, OuterRangeAppearsAboveOrderOne) {
  auto f = battery::two_i(2);
  auto psi = standard_bump(2, 1.5, 0);
  auto d = full_decomposition(f, psi, 2, 5, 2, 3, 1e-3);
  EXPECT_NE(d.E2, 0.0);
  EXPECT_LE(std::abs(d.total - d.R), 1e-3 + d.e3_tail_bound);
}

TEST(FullDecomposition, TinySupportSeesOnlyTheOrigin) {
  auto f = battery::two_i(2);
  auto psi = standard_bump(2, 0.4, 0);  // |m| < 0.8 at C = 2
  for (i64 n : {0, 3}) {
    auto d = full_decomposition(f, psi, 2, n, 1, 3, 1e-3);
    EXPECT_EQ(d.R, n == 0 ? 1.0 : 0.0);
    EXPECT_LE(std::abs(d.total - d.R), 1e-3 + d.e3_tail_bound) << n;
  }
}

TEST(FullDecomposition, DoublingCutoffStaysWithinTailBound) {
  auto f = battery::two_i(2);
  auto psi = standard_bump(2, 1.5, 0);
  auto a = full_decomposition(f, psi, 2, 5, 1, 3, 1e-4);
  auto b = full_decomposition(f, psi, 2, 5, 1, 6, 1e-4);
  EXPECT_LE(std::abs(b.total - a.total), a.e3_tail_bound + 2e-4);
  EXPECT_LT(b.e3_tail_bound, a.e3_tail_bound);
  EXPECT_LE(std::abs(b.total - b.R), 1e-4 + b.e3_tail_bound);
}

TEST(FullDecomposition, Errors) {
  auto f = battery::two_i(2);
  EXPECT_EQ(code_of([&] { full_decomposition(f, standard_bump(3, 1, 0), 2, 1, 1, 2, 1e-3); }),
            errc::dimension_mismatch);
  EXPECT_EQ(code_of([&] { full_decomposition(f, standard_bump(2, 1, 0), 2, 1, 1, 2, 0); }),
            errc::precondition_violated);
  EXPECT_EQ(code_of([&] { full_decomposition(battery::two_i(4), standard_bump(4, 3, 0), 40, 9, 3, 30, 1e-9); }),
            errc::too_slow);
}
