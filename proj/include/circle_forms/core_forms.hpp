#pragma once

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "arith.hpp"

namespace circle_forms {

using rational = boost::rational<i64>;
using bigint = boost::multiprecision::cpp_int;

// dense square matrix, row major
template <class T>
struct square {
  std::size_t n = 0;
  std::vector<T> a;

  square() = default;
  explicit square(std::size_t n_, T fill = T{}) : n(n_), a(n_ * n_, fill) {}

  static square identity(std::size_t n) {
    square m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  T& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  bool operator==(const square&) const = default;
};

using imatrix = square<i64>;
using dmatrix = square<double>;
using ivec = std::vector<i64>;
using dvec = std::vector<double>;

inline imatrix to_imatrix(const std::vector<std::vector<i64>>& rows) {
  imatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.size(), errc::dimension_mismatch, "hessian must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

namespace detail {

// fraction-free elimination; exact for any integer input
inline bigint bareiss_det(std::vector<bigint> m, std::size_t n) {
  if (n == 0) return 1;
  int sign = 1;
  bigint prev = 1;
  auto at = [&](std::size_t i, std::size_t j) -> bigint& { return m[i * n + j]; };
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (at(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n && at(p, k) == 0) ++p;
      if (p == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
    prev = at(k, k);
  }
  return sign * at(n - 1, n - 1);
}

inline i64 narrow(const bigint& v) {
  require(v <= std::numeric_limits<i64>::max() && v >= std::numeric_limits<i64>::min(),
          errc::overflow, "value exceeds 64 bits");
  return static_cast<i64>(v);
}

// cyclic Jacobi rotations; returns eigenvalues, eigenvectors as columns of v
inline void jacobi_eigen(dmatrix a, dvec& w, dmatrix& v) {
  const std::size_t n = a.n;
  v = dmatrix::identity(n);
  double scale = 0;
  for (double x : a.a) scale = std::max(scale, std::abs(x));
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-12 * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0) continue;
        double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        double t = (theta >= 0 ? 1 : -1) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  w.resize(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = a(i, i);
}

}  // namespace detail

struct ModDiagonalization {
  i64 modulus = 1;
  imatrix d_matrix;
  imatrix p_matrix;
};

class QuadraticForm {
 public:
  explicit QuadraticForm(imatrix hessian) : a_(std::move(hessian)) {
    const std::size_t n = a_.n;
    require(n > 0, errc::dimension_mismatch, "empty hessian");
    for (std::size_t i = 0; i < n; ++i) {
      require(mod(a_(i, i), 2) == 0, errc::odd_diagonal, "diagonal entries of the hessian must be even");
      for (std::size_t j = 0; j < i; ++j)
        require(a_(i, j) == a_(j, i), errc::not_symmetric, "hessian is not symmetric");
    }
    det_ = detail::narrow(minor_det(n, n));
    require(det_ != 0, errc::singular, "hessian is singular");

    adj_ = imatrix(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        bigint c = minor_det(j, i);
        adj_(i, j) = detail::narrow((i + j) % 2 ? bigint(-c) : c);
      }

    // L = lcm of reduced denominators of adj/det
    level_ = 1;
    for (i64 x : adj_.a) {
      i64 den = std::abs(det_) / std::gcd(std::abs(det_), std::abs(x));
      level_ = std::lcm(level_, den);
    }
    level_inv_ = imatrix(n);
    for (std::size_t k = 0; k < n * n; ++k)
      level_inv_.a[k] = detail::narrow(bigint(adj_.a[k]) * level_ / det_);

    dmatrix ad(n);
    for (std::size_t k = 0; k < n * n; ++k) ad.a[k] = static_cast<double>(a_.a[k]);
    dvec w;
    dmatrix v;
    detail::jacobi_eigen(ad, w, v);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return w[x] > w[y]; });
    eig_.resize(n);
    vecs_ = dmatrix(n);
    for (std::size_t k = 0; k < n; ++k) {
      eig_[k] = w[order[k]];
      for (std::size_t i = 0; i < n; ++i) vecs_(i, k) = v(i, order[k]);
    }
    sing_.resize(n);
    std::transform(eig_.begin(), eig_.end(), sing_.begin(), [](double x) { return std::abs(x); });
    std::sort(sing_.rbegin(), sing_.rend());
    pos_ = static_cast<int>(std::count_if(eig_.begin(), eig_.end(), [](double x) { return x > 0; }));
  }

  explicit QuadraticForm(const std::vector<std::vector<i64>>& rows) : QuadraticForm(to_imatrix(rows)) {}

  std::size_t n_vars() const noexcept { return a_.n; }
  const imatrix& hessian() const noexcept { return a_; }
  i64 det() const noexcept { return det_; }
  i64 level() const noexcept { return level_; }
  const imatrix& adjugate() const noexcept { return adj_; }
  // L * A^{-1}, integral by construction
  const imatrix& level_inverse() const noexcept { return level_inv_; }
  const dvec& eigenvalues() const noexcept { return eig_; }
  // columns are orthonormal eigenvectors, same order as eigenvalues()
  const dmatrix& eigenvectors() const noexcept { return vecs_; }
  const dvec& singular_values() const noexcept { return sing_; }
  double sigma1() const noexcept { return sing_.front(); }
  int pos_eigen_count() const noexcept { return pos_; }
  int signature() const noexcept { return 2 * pos_ - static_cast<int>(a_.n); }
  bool positive_definite() const noexcept { return pos_ == static_cast<int>(a_.n); }

  // F(m) = m^T A m / 2, exact
  i64 eval(const ivec& m) const {
    check_dim(m.size());
    i128 s = 0;
    const std::size_t n = a_.n;
    for (std::size_t i = 0; i < n; ++i) {
      s += static_cast<i128>(a_(i, i) / 2) * m[i] * m[i];
      for (std::size_t j = i + 1; j < n; ++j) s += static_cast<i128>(a_(i, j)) * m[i] * m[j];
    }
    require(s <= std::numeric_limits<i64>::max() && s >= std::numeric_limits<i64>::min(), errc::overflow,
            "form value exceeds 64 bits");
    return static_cast<i64>(s);
  }

  double eval_real(const dvec& m) const {
    check_dim(m.size());
    double s = 0;
    for (std::size_t i = 0; i < a_.n; ++i)
      for (std::size_t j = 0; j < a_.n; ++j) s += m[i] * static_cast<double>(a_(i, j)) * m[j];
    return 0.5 * s;
  }

  // r^T (L A^{-1}) r, an integer equal to 2 L F*(r)
  i64 scaled_adjoint(const ivec& r) const {
    check_dim(r.size());
    i128 s = 0;
    for (std::size_t i = 0; i < a_.n; ++i)
      for (std::size_t j = 0; j < a_.n; ++j) s += static_cast<i128>(r[i]) * level_inv_(i, j) * r[j];
    require(s <= std::numeric_limits<i64>::max() && s >= std::numeric_limits<i64>::min(), errc::overflow,
            "adjoint value exceeds 64 bits");
    return static_cast<i64>(s);
  }

  // F*(r) = r^T A^{-1} r / 2
  rational eval_adjoint(const ivec& r) const { return rational(scaled_adjoint(r), 2 * level_); }

  ModDiagonalization diagonalize_mod_odd(i64 q) const;

 private:
  void check_dim(std::size_t k) const {
    require(k == a_.n, errc::dimension_mismatch,
            "vector has " + std::to_string(k) + " entries, form has " + std::to_string(a_.n));
  }

  // determinant with row skip_r and column skip_c removed (n, n removes nothing)
  bigint minor_det(std::size_t skip_r, std::size_t skip_c) const {
    const std::size_t n = a_.n;
    std::size_t m = skip_r < n ? n - 1 : n;
    std::vector<bigint> b;
    b.reserve(m * m);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == skip_r) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (j != skip_c) b.emplace_back(a_(i, j));
    }
    return detail::bareiss_det(std::move(b), m);
  }

  imatrix a_, adj_, level_inv_;
  i64 det_ = 0, level_ = 1;
  dvec eig_, sing_;
  dmatrix vecs_;
  int pos_ = 0;
};

namespace detail {

inline int valuation(i64 x, i64 p, int cap) {
  if (x == 0) return cap;
  int v = 0;
  while (v < cap && x % p == 0) x /= p, ++v;
  return v;
}

// symmetric elimination mod p^k with minimal-valuation pivots
inline void diagonalize_prime_power(const imatrix& a, i64 p, int k, imatrix& d, imatrix& pm) {
  const std::size_t n = a.n;
  i64 pk = prime_power{p, k}.value();
  d = a;
  for (auto& x : d.a) x = mod(x, pk);
  pm = imatrix::identity(n);

  // b_j += c * b_l, applied as a congruence to d and to the columns of pm
  auto add = [&](std::size_t j, std::size_t l, i64 c) {
    for (std::size_t i = 0; i < n; ++i) d(i, j) = mod(d(i, j) + mulmod(c, d(i, l), pk), pk);
    for (std::size_t i = 0; i < n; ++i) d(j, i) = mod(d(j, i) + mulmod(c, d(l, i), pk), pk);
    for (std::size_t i = 0; i < n; ++i) pm(i, j) = mod(pm(i, j) + mulmod(c, pm(i, l), pk), pk);
  };
  auto swap = [&](std::size_t j, std::size_t l) {
    if (j == l) return;
    for (std::size_t i = 0; i < n; ++i) std::swap(d(i, j), d(i, l));
    for (std::size_t i = 0; i < n; ++i) std::swap(d(j, i), d(l, i));
    for (std::size_t i = 0; i < n; ++i) std::swap(pm(i, j), pm(i, l));
  };

  for (std::size_t i = 0; i < n; ++i) {
    int best = k;
    for (std::size_t r = i; r < n; ++r)
      for (std::size_t c = r; c < n; ++c) best = std::min(best, valuation(d(r, c), p, k));
    if (best >= k) break;  // remaining block vanishes mod p^k
    // prefer a diagonal pivot, then the lexicographically first entry
    std::size_t br = n, bc = n;
    for (std::size_t r = i; r < n && br == n; ++r)
      if (valuation(d(r, r), p, k) == best) br = bc = r;
    for (std::size_t r = i; r < n && br == n; ++r)
      for (std::size_t c = r + 1; c < n && br == n; ++c)
        if (valuation(d(r, c), p, k) == best) br = r, bc = c;
    bool diag = br == bc;
    if (!diag) add(br, bc, 1);  // off-diagonal minimum: fold it onto the diagonal
    swap(i, br);

    i64 pv = prime_power{p, best}.value();
    i64 rest = pk / pv;
    i64 u = inv_mod(d(i, i) / pv, rest);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d(i, j) == 0) continue;
      i64 c = mulmod(d(i, j) / pv, u, rest);
      add(j, i, mod(-c, pk));
    }
  }
}

}  // namespace detail

inline ModDiagonalization QuadraticForm::diagonalize_mod_odd(i64 q) const {
  require(q >= 1 && (q & 1), errc::even_modulus, "diagonalization needs an odd modulus");
  const std::size_t n = a_.n;
  ModDiagonalization out{q, imatrix(n), imatrix::identity(n)};
  if (q == 1) return out;

  i64 m = 1;
  for (auto pp : factorize(q)) {
    imatrix d, pm;
    detail::diagonalize_prime_power(a_, pp.p, pp.k, d, pm);
    i64 pk = pp.value();
    for (std::size_t t = 0; t < n * n; ++t) {
      out.d_matrix.a[t] = m == 1 ? d.a[t] : crt(out.d_matrix.a[t], m, d.a[t], pk);
      out.p_matrix.a[t] = m == 1 ? pm.a[t] : crt(out.p_matrix.a[t], m, pm.a[t], pk);
    }
    m *= pk;
  }
  return out;
}

}  // namespace circle_forms
