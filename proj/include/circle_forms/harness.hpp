#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "archimedean.hpp"
#include "arithmetic_part.hpp"
#include "exp_sums.hpp"
#include "farey.hpp"
#include "parallel.hpp"
#include "rep_numbers.hpp"

namespace circle_forms {

inline constexpr double default_series_cutoff = 200;

// Q = sigma_1 C balances the error terms
inline double optimal_farey_order(const QuadraticForm& f, double C) { return f.sigma1() * C; }

struct MainTerm {
  double value = 0;
  double series = 0;
  double real_factor = 0;
};

inline MainTerm main_term(const QuadraticForm& f, const BumpProfile& psi, double C, i64 n_target,
                          double Q_cut = default_series_cutoff) {
  require(f.n_vars() >= 4, errc::precondition_violated, "main term needs at least 4 variables");
  MainTerm m;
  m.real_factor = real_factor(f, psi, static_cast<double>(n_target), C);
  if (m.real_factor == 0) return m;
  m.series = singular_series_truncated({f, n_target, Q_cut}, Q_cut).value;
  m.value = m.series * m.real_factor * std::pow(C, static_cast<double>(f.n_vars()) - 2);
  return m;
}

struct ReportParams {
  double C = 0;
  double Q = 0;
  double eps = 0;
  double Q_cut = default_series_cutoff;
  std::string bump = "indicator on level set";
};

struct AsymptoticReport {
  i64 n_target = 0;
  double exact = 0;
  double main_term = 0;
  double residual = 0;
  double normalized_error = 0;
  bool near_zero_main = false;  // locally obstructed n, or nearly so
  ReportParams params;
};

// truncation noise in the series at the default cutoff is about 1e-3
inline constexpr double near_zero_series = 1e-2;

namespace detail {

inline AsymptoticReport make_report(const QuadraticForm& f, i64 n, double series, double Q_cut, double eps) {
  AsymptoticReport r;
  r.n_target = n;
  r.exact = static_cast<double>(rep_count_exact(f, n));
  r.main_term = series * shell_volume_density(f, static_cast<double>(n), 1.0);
  r.residual = r.exact - r.main_term;
  double nv = static_cast<double>(f.n_vars());
  r.normalized_error = r.residual / std::pow(static_cast<double>(n), (nv - 1) / 4 + eps);
  r.near_zero_main = std::abs(series) < near_zero_series;
  double C = std::sqrt(static_cast<double>(n));
  r.params = {C, optimal_farey_order(f, C), eps, Q_cut, "indicator on level set"};
  return r;
}

inline void require_report_form(const QuadraticForm& f) {
  require(f.positive_definite(), errc::not_positive_definite, "reports need a positive definite form");
  require(f.n_vars() >= 4, errc::precondition_violated, "reports need at least 4 variables");
}

}  // namespace detail

// exact count against series times the closed-form real factor, with Psi = 1 on the level set
inline AsymptoticReport asymptotic_report(const QuadraticForm& f, i64 n_target, double Q_cut = default_series_cutoff,
                                          double eps = 0.01) {
  detail::require_report_form(f);
  double series = singular_series_truncated({f, n_target, Q_cut}, Q_cut).value;
  return detail::make_report(f, n_target, series, Q_cut, eps);
}

inline std::vector<AsymptoticReport> asymptotic_reports(const QuadraticForm& f, const std::vector<i64>& ns,
                                                        double Q_cut = default_series_cutoff, double eps = 0.01) {
  detail::require_report_form(f);
  for (i64 n : ns) require(n > 0, errc::precondition_violated, "targets must be positive");
  auto series = singular_series_batch(f, ns, Q_cut);
  std::vector<AsymptoticReport> out(ns.size());
  parallel_for(ns.size(), [&](std::size_t i) { out[i] = detail::make_report(f, ns[i], series[i].value, Q_cut, eps); });
  return out;
}

inline double max_normalized_error(const std::vector<AsymptoticReport>& reports) {
  double m = 0;
  for (const auto& r : reports) m = std::max(m, std::abs(r.normalized_error));
  return m;
}

// least-squares slope of log|residual| against log n; -inf when every residual vanishes
inline double error_exponent_fit(std::vector<AsymptoticReport> reports) {
  require(reports.size() >= 8, errc::insufficient_data, "need at least 8 reports");
  std::sort(reports.begin(), reports.end(), [](auto& a, auto& b) { return a.n_target < b.n_target; });
  require(static_cast<double>(reports.back().n_target) >= 10.0 * static_cast<double>(reports.front().n_target),
          errc::insufficient_data, "reports must span a decade of n");
  std::vector<double> xs, ys;
  for (const auto& r : reports)
    if (r.residual != 0) {
      xs.push_back(std::log(static_cast<double>(r.n_target)));
      ys.push_back(std::log(std::abs(r.residual)));
    }
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  require(xs.size() >= 2, errc::insufficient_data, "fewer than two nonzero residuals");
  double k = static_cast<double>(xs.size());
  double mx = tree_sum(xs) / k, my = tree_sum(ys) / k, sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  require(sxx > 0, errc::insufficient_data, "all reports share one n");
  return sxy / sxx;
}

struct Decomposition {
  double M = 0, E1 = 0, E2 = 0, E3 = 0;
  double R = 0;              // weighted count from the lattice side
  double total = 0;          // M + E1 + E2 + E3
  double e3_tail_bound = 0;  // estimate of the r-sum beyond r_cut
};

inline constexpr double decomposition_budget = 4e9;  // integrand evaluations

// Circle-method split of the weighted count over the Farey dissection of order Q.
// Every (q, r, x-piece) term is integrated in x in closed form and in m numerically.
inline Decomposition full_decomposition(const QuadraticForm& f, const BumpProfile& psi, double C, i64 n_target,
                                        double Q, double r_cut, double tol) {
  const std::size_t nv = f.n_vars();
  require(psi.dims() == nv, errc::dimension_mismatch, "bump and form dimensions differ");
  require(C > 0 && r_cut >= 0 && tol > 0, errc::precondition_violated, "need C > 0, r_cut >= 0, tol > 0");
  const i64 N = farey_floor(Q);
  const double U = psi.support_radius();
  const double dn = static_cast<double>(nv);
  const double sigma = f.sigma1();
  const double amax = [&] {
    dmatrix a(nv);
    for (std::size_t k = 0; k < nv * nv; ++k) a.a[k] = static_cast<double>(f.hessian().a[k]);
    return detail::row_abs_max(a);
  }();

  // r with ||r|| <= r_cut
  std::vector<ivec> rs;
  {
    auto k = static_cast<i64>(std::floor(r_cut));
    ivec r(nv, -k);
    for (;;) {
      double s = 0;
      for (i64 c : r) s += static_cast<double>(c * c);
      if (std::sqrt(s) <= r_cut + 1e-12) rs.push_back(r);
      std::size_t i = 0;
      while (i < nv && ++r[i] > k) r[i] = -k, ++i;
      if (i == nv) break;
    }
  }

  struct piece {
    double lo, hi;
    int region;              // 0: inner arc range, 2: outer range
    std::vector<i64> ds;     // d values active on the piece
  };
  struct job {
    i64 q;
    std::size_t r_index;
    double lo, hi;
    int kind;  // 0 M, 1 E1, 2 E2, 3 E3
    cplx coeff;
  };
  struct modulus_plan {
    i64 q;
    std::vector<i64> ds;
    std::vector<piece> pieces;
  };
  std::vector<modulus_plan> plans;
  for (i64 q = 1; q <= N; ++q) {
    const double dq = static_cast<double>(q);
    auto d_hi = static_cast<i64>(std::floor(dq + Q));
    std::vector<i64> ds;
    for (i64 d = N + 1; d <= d_hi; ++d)
      if (std::gcd(d, q) == 1) ds.push_back(d);
    if (ds.empty()) continue;

    // breakpoints: 1/(q(q+Q)), then 1/(qd) for decreasing d, then 1/(qQ)
    std::vector<piece> pieces{{0, 1 / (dq * (dq + Q)), 0, ds}};
    std::vector<double> cuts{1 / (dq * (dq + Q))};
    for (auto it = ds.rbegin(); it != ds.rend(); ++it) cuts.push_back(1 / (dq * static_cast<double>(*it)));
    cuts.push_back(1 / (dq * Q));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double lo = cuts[i], hi = cuts[i + 1];
      std::vector<i64> act;
      for (i64 d : ds)
        if (1 / (dq * static_cast<double>(d)) >= hi * (1 - 1e-12)) act.push_back(d);
      if (!act.empty() && hi > lo) pieces.push_back({lo, hi, 2, act});
    }
    plans.push_back({q, std::move(ds), std::move(pieces)});
  }

  // budget check before any Gauss sum is formed
  double work = 0;
  for (const auto& pl : plans)
    for (const auto& r : rs) {
      double rn = 0;
      for (i64 c : r) rn += static_cast<double>(c * c);
      for (const auto& pc : pl.pieces) {
        double freq = C * std::sqrt(rn) / static_cast<double>(pl.q) + pc.hi * C * C * amax * U;
        work += 2.5 * std::pow(16 * (std::ceil(U * freq) + 8), dn);
      }
    }
  require(work <= decomposition_budget, errc::too_slow,
          "decomposition would need about " + std::to_string(work) + " integrand evaluations");

  std::vector<job> jobs;
  for (const auto& [q, ds, pieces] : plans) {
    const double dq = static_cast<double>(q);
    const double kq = dq * C * sigma * (U + 1) * std::sqrt(dn);
    const double scale = std::pow(dq, -dn);
    for (std::size_t ri = 0; ri < rs.size(); ++ri) {
      const ivec& r = rs[ri];
      double rn = 0;
      for (i64 c : r) rn += static_cast<double>(c * c);
      rn = std::sqrt(rn);
      const double xstar = rn / kq;
      // c_d(r) = e(n dbar / q) G(-dbar, q, r)
      std::vector<cplx> cd;
      for (i64 d : ds) {
        i64 db = inv_mod(d, q);
        cd.push_back(unit(mulmod(mod(n_target, q), db, q), q) * gauss_sum_multi(f, -db, q, r).value);
      }
      for (const auto& pc : pieces) {
        cplx T = 0;
        for (std::size_t k = 0; k < ds.size(); ++k)
          if (std::find(pc.ds.begin(), pc.ds.end(), ds[k]) != pc.ds.end()) T += cd[k];
        T *= scale;
        if (std::abs(T) == 0) continue;
        double split = std::clamp(xstar, pc.lo, pc.hi);
        if (split > pc.lo) jobs.push_back({q, ri, pc.lo, split, 3, T});
        if (pc.hi > split) {
          int kind = pc.region == 2 ? 2 : (rn == 0 ? 0 : 1);
          jobs.push_back({q, ri, split, pc.hi, kind, T});
        }
      }
    }
  }

  const double per = tol / (10.0 * static_cast<double>(std::max<std::size_t>(jobs.size(), 1)));
  const double Cn = std::pow(C, dn);
  std::vector<cplx> vals(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& jb = jobs[j];
    const ivec& r = rs[jb.r_index];
    const double dq = static_cast<double>(jb.q);
    double rn = 0;
    for (i64 c : r) rn += static_cast<double>(c * c);
    const double width = jb.hi - jb.lo, mid = (jb.hi + jb.lo) / 2;
    double freq = C * std::sqrt(rn) / dq + jb.hi * C * C * amax * U;
    auto res = detail::cube_integrate(psi, freq, per / (Cn * std::max(1e-300, std::abs(jb.coeff))), [&](const double* u) {
      dvec m(u, u + nv);
      double s = C * C * f.eval_real(m) - static_cast<double>(n_target);
      double z = pi * s * width;
      double sinc = std::abs(z) < 1e-8 ? 1.0 : std::sin(z) / z;
      double lin = 0;
      for (std::size_t i = 0; i < nv; ++i) lin += u[i] * static_cast<double>(r[i]);
      return width * sinc * e(s * mid - C * lin / dq);
    });
    vals[j] = Cn * jb.coeff * res.value;
  });

  Decomposition out;
  double* slot[4] = {&out.M, &out.E1, &out.E2, &out.E3};
  std::vector<std::vector<double>> by_kind(4);
  // outermost unit shell of r sets the observed decay constant
  double shell_max = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    by_kind[static_cast<std::size_t>(jobs[j].kind)].push_back(2 * vals[j].real());
    double rn = 0;
    for (i64 c : rs[jobs[j].r_index]) rn += static_cast<double>(c * c);
    rn = std::sqrt(rn);
    if (rn > r_cut - 1 && rn > 0) shell_max = std::max(shell_max, 2 * std::abs(vals[j]) * std::pow(rn, dn + 1));
  }
  for (int k = 0; k < 4; ++k) *slot[k] = tree_sum(by_kind[static_cast<std::size_t>(k)]);
  out.total = out.M + out.E1 + out.E2 + out.E3;
  out.R = rep_weighted(f, psi, C, n_target);
  out.e3_tail_bound = r_cut >= 1 ? shell_max * lattice_tail_sum(nv, r_cut, dn + 1) : 0;
  return out;
}

}  // namespace circle_forms
