#pragma once

#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "archimedean.hpp"
#include "core_forms.hpp"
#include "parallel.hpp"

namespace circle_forms {

inline constexpr double max_candidates = 1e8;

struct EnumerationBox {
  double radius = 0;
  std::vector<std::pair<i64, i64>> per_axis;
};

namespace detail {

// Q = U^T D U with U unit upper triangular, so that
// m^T Q m = sum_i d_i (m_i + sum_{j>i} u_ij m_j)^2
struct ldl {
  dvec d;
  dmatrix u;
};

inline ldl ldl_upper(const dmatrix& q) {
  const std::size_t n = q.n;
  ldl L{dvec(n), dmatrix::identity(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double s = q(i, i);
    for (std::size_t k = 0; k < i; ++k) s -= L.d[k] * L.u(k, i) * L.u(k, i);
    require(s > 0, errc::not_positive_definite, "matrix is not positive definite");
    L.d[i] = s;
    for (std::size_t j = i + 1; j < n; ++j) {
      double t = q(i, j);
      for (std::size_t k = 0; k < i; ++k) t -= L.d[k] * L.u(k, i) * L.u(k, j);
      L.u(i, j) = t / s;
    }
  }
  return L;
}

inline i64 isqrt(i128 v) {
  if (v < 0) return -1;
  auto r = static_cast<i128>(std::sqrt(static_cast<long double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return static_cast<i64>(r);
}

// Visits every m whose tail m_1..m_{n-1} satisfies the ldl bound; m_0 is
// left at 0 and `rem` is the budget left for the m_0 term. Sums visitor
// results per top coordinate, then in index order, so the result does not
// depend on the thread count.
template <class T, class Visit>
T scan(const ldl& L, double N, const dvec& axis_bound, Visit&& visit) {
  const std::size_t n = L.d.size();
  double cand = 1;
  for (std::size_t i = 1; i < n; ++i) cand *= 2 * std::floor(axis_bound[i]) + 1;
  require(cand <= max_candidates, errc::box_too_large,
          "enumeration box holds about " + std::to_string(cand) + " candidate points");
  const double slack = 1e-9 * std::max(1.0, N);
  if (n == 1) {
    ivec m(1, 0);
    return visit(m, N);
  }
  const i64 top = static_cast<i64>(std::floor(axis_bound[n - 1] + 1e-9));
  std::vector<T> parts(static_cast<std::size_t>(2 * top + 1), T{});
  parallel_for(parts.size(), [&](std::size_t k) {
    ivec m(n, 0);
    T acc{};
    auto rec = [&](auto&& self, std::size_t i, double S) -> void {
      if (i == 0) {
        acc += visit(m, N - S);
        return;
      }
      double c = 0;
      for (std::size_t j = i + 1; j < n; ++j) c -= L.u(i, j) * static_cast<double>(m[j]);
      double room = (N - S) / L.d[i];
      if (room < -slack) return;
      double r = std::sqrt(std::max(0.0, room) + slack);
      for (i64 v = static_cast<i64>(std::ceil(c - r)); v <= static_cast<i64>(std::floor(c + r)); ++v) {
        double t = static_cast<double>(v) - c;
        double S2 = S + L.d[i] * t * t;
        if (S2 > N + slack) continue;
        m[i] = v;
        self(self, i - 1, S2);
      }
      m[i] = 0;
    };
    m[n - 1] = static_cast<i64>(k) - top;
    double t = static_cast<double>(m[n - 1]);
    double S = L.d[n - 1] * t * t;
    if (S <= N + slack) rec(rec, n - 2, S);
    parts[k] = acc;
  });
  T total{};
  for (auto& p : parts) total += p;
  return total;
}

// the m_0 values solving F(m) = target, the rest of m given (m_0 ignored)
inline std::vector<i64> solve_first(const QuadraticForm& f, ivec m, i64 target) {
  const auto& A = f.hessian();
  m[0] = 0;
  i128 a = A(0, 0) / 2, b = 0;
  for (std::size_t j = 1; j < m.size(); ++j) b += static_cast<i128>(A(0, j)) * m[j];
  i128 c = static_cast<i128>(f.eval(m)) - target;
  std::vector<i64> out;
  if (a == 0) {
    if (b != 0 && c % b == 0) out.push_back(static_cast<i64>(-c / b));
    return out;  // b == 0 is handled by the caller
  }
  i128 disc = b * b - 4 * a * c;
  i64 s = isqrt(disc);
  if (s < 0 || static_cast<i128>(s) * s != disc) return out;
  for (i128 num : {-b - s, -b + s})
    if (num % (2 * a) == 0) out.push_back(static_cast<i64>(num / (2 * a)));
  if (s == 0 && out.size() == 2) out.pop_back();
  return out;
}

inline ldl euclid_ldl(std::size_t n) { return {dvec(n, 1.0), dmatrix::identity(n)}; }

struct cplx_sum {
  neumaier acc;
  cplx_sum& operator+=(cplx z) {
    acc += z;
    return *this;
  }
  cplx_sum& operator+=(const cplx_sum& o) {
    acc += o.acc.value();
    return *this;
  }
};

}  // namespace detail

inline std::pair<double, double> preimage_radius_bounds(const QuadraticForm& f, double n_target) {
  require(f.positive_definite(), errc::not_positive_definite, "radius bounds need a positive definite form");
  require(n_target > 0, errc::precondition_violated, "target must be positive");
  const auto& ev = f.eigenvalues();
  return {std::sqrt(2 * n_target / ev.front()), std::sqrt(2 * n_target / ev.back())};
}

// ||m|| >= sqrt(2|n| / sigma_1) for any nonsingular form
inline double preimage_lower_bound(const QuadraticForm& f, double n_target) {
  return std::sqrt(2 * std::abs(n_target) / f.sigma1());
}

inline EnumerationBox enumeration_box(const QuadraticForm& f, double n_target) {
  auto [lo, hi] = preimage_radius_bounds(f, n_target);
  (void)lo;
  EnumerationBox box{hi, {}};
  for (std::size_t i = 0; i < f.n_vars(); ++i) {
    // max of m_i on F <= n is sqrt(2 n (A^{-1})_ii)
    double b = std::sqrt(2 * n_target * static_cast<double>(f.adjugate()(i, i)) / static_cast<double>(f.det()));
    auto k = static_cast<i64>(std::floor(b + 1e-9));
    box.per_axis.push_back({-k, k});
  }
  return box;
}

inline i64 rep_count_exact(const QuadraticForm& f, i64 n_target) {
  require(f.positive_definite(), errc::not_positive_definite, "exact counts need a positive definite form");
  require(n_target > 0, errc::precondition_violated, "target must be positive");
  const std::size_t n = f.n_vars();
  dmatrix q(n);
  for (std::size_t k = 0; k < n * n; ++k) q.a[k] = static_cast<double>(f.hessian().a[k]) / 2;
  auto L = detail::ldl_upper(q);
  auto box = enumeration_box(f, static_cast<double>(n_target));
  dvec bound;
  for (auto [lo, hi] : box.per_axis) bound.push_back(static_cast<double>(hi));
  return detail::scan<i64>(L, static_cast<double>(n_target), bound, [&](const ivec& m, double) {
    return static_cast<i64>(detail::solve_first(f, m, n_target).size());
  });
}

// sum over ||m|| <= U C of 1{F(m) = n} Psi(m / C)
inline double rep_weighted(const QuadraticForm& f, const BumpProfile& psi, double C, i64 n_target) {
  const std::size_t n = f.n_vars();
  require(psi.dims() == n, errc::dimension_mismatch, "bump and form dimensions differ");
  require(C > 0, errc::precondition_violated, "scale must be positive");
  const double R = psi.support_radius() * C;
  auto L = detail::euclid_ldl(n);
  dvec bound(n, R);
  auto total = detail::scan<detail::cplx_sum>(L, R * R, bound, [&](const ivec& m0, double rem) {
    detail::cplx_sum s;
    ivec m = m0;
    auto add = [&](i64 v) {
      m[0] = v;
      dvec pt(m.begin(), m.end());
      s += cplx(psi.scaled(pt, C));
    };
    const auto& A = f.hessian();
    i64 b = 0;
    for (std::size_t j = 1; j < n; ++j) b += A(0, j) * m[j];
    if (A(0, 0) == 0 && b == 0) {
      // F does not depend on m_0 here
      m[0] = 0;
      if (f.eval(m) == n_target) {
        i64 k = rem < 0 ? -1 : detail::isqrt(static_cast<i128>(std::floor(rem + 1e-9)));
        for (i64 v = -k; v <= k; ++v) add(v);
      }
      return s;
    }
    for (i64 v : detail::solve_first(f, m, n_target))
      if (static_cast<double>(v) * static_cast<double>(v) <= rem + 1e-9) add(v);
    return s;
  });
  return total.acc.value().real();
}

// Theta(x) = sum_m e(x F(m)) Psi(m / C)
inline cplx theta_partial(const QuadraticForm& f, const BumpProfile& psi, double C, double x) {
  const std::size_t n = f.n_vars();
  require(psi.dims() == n, errc::dimension_mismatch, "bump and form dimensions differ");
  require(C > 0, errc::precondition_violated, "scale must be positive");
  const double R = psi.support_radius() * C;
  dvec bound(n, R);
  auto total = detail::scan<detail::cplx_sum>(detail::euclid_ldl(n), R * R, bound, [&](const ivec& m0, double rem) {
    detail::cplx_sum s;
    if (rem < 0) return s;
    ivec m = m0;
    i64 k = static_cast<i64>(std::floor(std::sqrt(rem) + 1e-9));
    for (i64 v = -k; v <= k; ++v) {
      m[0] = v;
      dvec pt(m.begin(), m.end());
      double w = psi.scaled(pt, C);
      if (w == 0) continue;
      s += w * e(x * static_cast<double>(f.eval(m)));
    }
    return s;
  });
  return total.acc.value();
}

inline i64 ball_lattice_count(std::size_t d, double R) {
  require(d >= 1, errc::dimension_mismatch, "dimension must be positive");
  require(R > 0, errc::precondition_violated, "radius must be positive");
  // points within rounding of the sphere count as inside, so R = sqrt(k) keeps its shell
  const double R2 = R * R * (1 + 1e-12);
  dvec bound(d, std::sqrt(R2));
  return detail::scan<i64>(detail::euclid_ldl(d), R2, bound, [&](const ivec& m, double) {
    i128 s = 0;
    for (std::size_t j = 1; j < d; ++j) s += static_cast<i128>(m[j]) * m[j];
    // largest k with s + k^2 <= R^2, decided without rounding the square
    i64 k = static_cast<i64>(std::floor(std::sqrt(std::max(0.0, R2 - static_cast<double>(s)))));
    while (k >= 0 && static_cast<double>(s + static_cast<i128>(k) * k) > R2) --k;
    while (static_cast<double>(s + static_cast<i128>(k + 1) * (k + 1)) <= R2) ++k;
    return k < 0 ? i64{0} : 2 * k + 1;
  });
}

// sum over r in Z^d with ||r|| > B of ||r||^{-M}
inline double lattice_tail_sum(std::size_t d, double B, double M) {
  require(d >= 1, errc::dimension_mismatch, "dimension must be positive");
  const double dd = static_cast<double>(d);
  require(M > dd, errc::divergent, "tail sum diverges for M <= dimension");
  require(M >= dd + 1 && B >= 0, errc::precondition_violated, "need M >= d + 1 and B >= 0");
  const double omega = sphere_area(d);
  const double vol = omega / dd;  // unit ball volume
  auto integral_tail = [&](double R) { return omega * std::pow(R, dd - M) / (M - dd); };

  // direct summation radius, limited by a point budget
  double Rs = d == 1 ? 1e6 : std::pow(4e6 / vol, 1 / dd);
  Rs = std::floor(Rs);
  if (B >= Rs) return integral_tail(B);  // all mass lies in the smooth regime

  dvec bound(d, Rs);
  struct acc_t {
    neumaier s;
    i64 count = 0;
    acc_t& operator+=(const acc_t& o) {
      s += o.s.value();
      count += o.count;
      return *this;
    }
  };
  acc_t direct = detail::scan<acc_t>(detail::euclid_ldl(d), Rs * Rs, bound, [&](const ivec& m0, double rem) {
    acc_t a;
    if (rem < 0) return a;
    double S = 0;
    for (std::size_t j = 1; j < d; ++j) S += static_cast<double>(m0[j]) * static_cast<double>(m0[j]);
    i64 k = static_cast<i64>(std::floor(std::sqrt(rem) + 1e-9));
    a.count += 2 * k + 1;
    // outer values first so each line sums small terms before large ones
    for (i64 v = k; v >= 0; --v) {
      double r2 = S + static_cast<double>(v) * static_cast<double>(v);
      if (std::sqrt(r2) <= B) continue;
      a.s += cplx((v == 0 ? 1.0 : 2.0) * std::pow(r2, -M / 2));
    }
    return a;
  });
  // Stieltjes tail beyond Rs with the lattice/volume discrepancy at Rs
  double discrepancy = vol * std::pow(Rs, dd) - static_cast<double>(direct.count);
  return direct.s.value().real() + integral_tail(Rs) + std::pow(Rs, -M) * discrepancy;
}

}  // namespace circle_forms
