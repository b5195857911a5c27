#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core_forms.hpp"

namespace circle_forms {

enum class sum_method { brute_force, closed_form };

struct ExpSumResult {
  cplx value;
  double bound = 0;
  sum_method method = sum_method::brute_force;
};

struct QSplit {
  i64 q = 1, q0 = 1, q1 = 1;
};

// enumeration budget for brute-force complete sums
inline constexpr i64 brute_guard = 10'000'000;

inline i64 geometric_char_sum(i64 a, i64 q) { return mod(a, q) == 0 ? q : 0; }

inline double gauss_bound(const QuadraticForm& f, i64 q) {
  double n = static_cast<double>(f.n_vars());
  return std::pow(static_cast<double>(std::gcd(f.level(), q)), n / 2) * std::pow(static_cast<double>(q), n / 2);
}

inline ExpSumResult quadratic_gauss_sum(i64 d, i64 q, sum_method how = sum_method::brute_force) {
  require(q >= 1, errc::precondition_violated, "modulus must be positive");
  i64 g = std::gcd(mod(d, q), q);
  // the one-variable form h^2 has level 2
  double bound = g == 1 ? std::sqrt(static_cast<double>(std::gcd<i64>(2, q) * q))
                        : std::sqrt(2.0 * static_cast<double>(g * q));
  if (how == sum_method::closed_form) {
    require((q & 1) && g == 1, errc::closed_form_inapplicable, "closed form needs odd q coprime to d");
    return {epsilon_q(q) * (jacobi(d, q) * std::sqrt(static_cast<double>(q))), bound, how};
  }
  require(q <= brute_guard, errc::too_large, "modulus above brute-force guard");
  std::vector<cplx> terms(static_cast<std::size_t>(q));
  for (i64 h = 0; h < q; ++h) terms[static_cast<std::size_t>(h)] = unit(mulmod(d, mulmod(h, h, q), q), q);
  return {tree_sum(terms), bound, how};
}

namespace detail {

// b^e, saturating just above any sane enumeration size
inline i64 ipow(i64 b, std::size_t e) {
  constexpr i64 cap = i64{1} << 50;
  i64 r = 1;
  for (std::size_t i = 0; i < e; ++i) r = r > cap / std::max<i64>(b, 1) ? cap + 1 : r * b;
  return r;
}

// sum_h e((d F(h) + h.r)/q); the last coordinate is summed through a table
// indexed by its linear coefficient, so the enumeration is q^(n-1) long
inline cplx gauss_brute(const QuadraticForm& f, i64 d, i64 q, const ivec& r) {
  const std::size_t n = f.n_vars();
  const auto& A = f.hessian();
  require(detail::ipow(q, n - 1) <= brute_guard, errc::too_large, "Gauss sum enumeration above guard");
  roots_of_unity w(q);
  const std::size_t t = n - 1;
  i64 half_tt = mulmod(d, A(t, t) / 2, q);
  std::vector<cplx> table(static_cast<std::size_t>(q));
  for (i64 c = 0; c < q; ++c) {
    cplx s = 0;
    for (i64 x = 0; x < q; ++x) s += w[mulmod(half_tt, mulmod(x, x, q), q) + mulmod(c, x, q)];
    table[static_cast<std::size_t>(c)] = s;
  }
  i64 count = detail::ipow(q, t);
  std::vector<cplx> terms(static_cast<std::size_t>(count));
  ivec h(t, 0);
  for (i64 idx = 0; idx < count; ++idx) {
    i64 quad = 0, lin = 0, c = 0;
    for (std::size_t i = 0; i < t; ++i) {
      quad += (A(i, i) / 2) % q * (h[i] * h[i] % q);
      for (std::size_t j = i + 1; j < t; ++j) quad += A(i, j) % q * (h[i] * h[j] % q);
      quad %= q;
      lin += h[i] * mod(r[i], q) % q;
      c += A(i, t) % q * h[i];
    }
    i64 phase = mulmod(d, mod(quad, q), q) + lin;
    i64 slope = mod(mulmod(d, mod(c, q), q) + mod(r[t], q), q);
    terms[static_cast<std::size_t>(idx)] = w[phase] * table[static_cast<std::size_t>(slope)];
    for (std::size_t k = 0; k < t; ++k) {
      if (++h[k] < q) break;
      h[k] = 0;
    }
  }
  return tree_sum(terms);
}

}  // namespace detail

// G(d, q, r) = sum over h mod q of e((d F(h) + h.r)/q)
inline ExpSumResult gauss_sum_multi(const QuadraticForm& f, i64 d, i64 q, const ivec& r,
                                    sum_method how = sum_method::brute_force) {
  require(q >= 1, errc::precondition_violated, "modulus must be positive");
  require(r.size() == f.n_vars(), errc::dimension_mismatch, "r has wrong length");
  const double n = static_cast<double>(f.n_vars());
  double bound = std::gcd(mod(d, q), q) == 1 ? gauss_bound(f, q) : std::pow(static_cast<double>(q), n);
  if (how == sum_method::brute_force) return {detail::gauss_brute(f, d, q, r), bound, how};

  require(q == 1 || ((q & 1) && std::gcd(q, mulmod(mod(2 * f.det(), q), d, q)) == 1),
          errc::closed_form_inapplicable, "closed form needs gcd(q, 2 det(A) d) = 1");
  if (q == 1) return {1.0, bound, how};
  // alpha = L: L A^{-1} is integral and L | det(A), so L is invertible mod q
  i64 s = mod(f.scaled_adjoint(r), q);
  i64 num = mod(-mulmod(mulmod(inv_mod(d, q), inv_mod(2, q), q), mulmod(inv_mod(f.level(), q), s, q), q), q);
  cplx one = epsilon_q(q) * (jacobi(2 * mod(d, q), q) * std::sqrt(static_cast<double>(q)));
  cplx v = static_cast<double>(jacobi(f.det(), q)) * std::pow(one, static_cast<int>(f.n_vars())) * unit(num, q);
  return {v, bound, how};
}

// units mod q with inverses, characters and roots of unity, for repeated sums
class unit_group {
 public:
  explicit unit_group(i64 q) : q_(q), w_(q) {
    require(q >= 1, errc::precondition_violated, "modulus must be positive");
    for (i64 d = 0; d < q; ++d) {
      if (std::gcd(d, q) != 1) continue;
      u_.push_back(d);
      inv_.push_back(inv_mod(d, q));
      chi_.push_back(q & 1 ? jacobi(d, q) : 0);
    }
  }
  i64 modulus() const noexcept { return q_; }
  const std::vector<i64>& units() const noexcept { return u_; }
  const std::vector<i64>& inverses() const noexcept { return inv_; }
  const std::vector<int>& chars() const noexcept { return chi_; }
  const roots_of_unity& roots() const noexcept { return w_; }

 private:
  i64 q_;
  roots_of_unity w_;
  std::vector<i64> u_, inv_;
  std::vector<int> chi_;
};

inline double weil_bound(i64 q, i64 a, i64 b) {
  return static_cast<double>(tau(q)) * std::sqrt(static_cast<double>(gcd3(mod(a, q), mod(b, q), q))) *
         std::sqrt(static_cast<double>(q));
}

inline cplx kappa_brute(const unit_group& g, int n, i64 a, i64 b) {
  const i64 q = g.modulus();
  require(n % 2 == 0 || (q & 1), errc::precondition_violated, "Salie sums need an odd modulus");
  a = mod(a, q), b = mod(b, q);
  thread_local std::vector<cplx> terms;
  terms.resize(g.units().size());
  const auto& u = g.units();
  const auto& inv = g.inverses();
  const auto& chi = g.chars();
  for (std::size_t i = 0; i < u.size(); ++i) {
    cplx z = g.roots()[(a * u[i] + b * inv[i]) % q];
    terms[i] = (n % 2 && chi[i] < 0) ? -z : z;
  }
  return tree_sum(terms);
}

// all v mod p^k with v^2 = a (mod p^k), by Hensel lifting
inline std::vector<i64> count_sqrt_lifts(i64 a, i64 p, int k) {
  require(p > 2 && is_prime(p), errc::not_odd_prime, std::to_string(p) + " is not an odd prime");
  require(k >= 1, errc::precondition_violated, "exponent must be positive");
  const i64 pk = prime_power{p, k}.value();
  a = mod(a, pk);
  std::vector<i64> out;
  if (a == 0) {
    i64 step = prime_power{p, (k + 1) / 2}.value();
    for (i64 v = 0; v < pk; v += step) out.push_back(v);
    return out;
  }
  int e = 0;
  i64 unit_part = a;
  while (unit_part % p == 0) unit_part /= p, ++e;
  if (e % 2) return out;
  const int f = e / 2, m = k - e;  // v = p^f w with w^2 = unit_part mod p^m

  // square root mod p (Tonelli-Shanks)
  i64 u = mod(unit_part, p);
  if (powmod(u, (p - 1) / 2, p) != 1) return out;
  i64 s = p - 1;
  int t = 0;
  while (s % 2 == 0) s /= 2, ++t;
  i64 z = 2;
  while (powmod(z, (p - 1) / 2, p) != p - 1) ++z;
  i64 c = powmod(z, s, p), x = powmod(u, (s + 1) / 2, p), y = powmod(u, s, p);
  for (int mm = t; y != 1;) {
    int i = 0;
    for (i64 yy = y; yy != 1; yy = mulmod(yy, yy, p)) ++i;
    i64 bb = c;
    for (int j = 0; j < mm - i - 1; ++j) bb = mulmod(bb, bb, p);
    x = mulmod(x, bb, p), c = mulmod(bb, bb, p), y = mulmod(y, c, p), mm = i;
  }
  // lift one exponent at a time
  i64 pm = p;
  for (int j = 1; j < m; ++j) {
    i64 next = pm * p;
    i64 fix = mulmod(mod(mulmod(x, x, next) - mod(unit_part, next), next), inv_mod(2 * x, next), next);
    x = mod(x - fix, next);
    pm = next;
  }
  const i64 pf = prime_power{p, f}.value();
  // w is fixed mod p^m; v = p^f w is taken mod p^k, so w ranges mod p^(k-f)
  for (i64 root : {x, mod(-x, pm)})
    for (i64 j = 0; j < pf; ++j) out.push_back(mod(pf * (root + j * pm), pk));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// square roots of a modulo odd q, combined across prime powers
inline std::vector<i64> sqrt_mod(i64 a, i64 q) {
  std::vector<i64> roots{0};
  i64 m = 1;
  for (auto pp : factorize(q)) {
    auto local = count_sqrt_lifts(a, pp.p, pp.k);
    i64 pk = pp.value();
    std::vector<i64> next;
    for (i64 r : roots)
      for (i64 l : local) next.push_back(crt(r, m, l, pk));
    roots = std::move(next);
    m *= pk;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

inline cplx salie_closed_form(i64 q, i64 a, i64 b) {
  require(q >= 1 && (q & 1) && std::gcd(mod(2 * a, q), q) == 1, errc::precondition_violated,
          "Salie evaluation needs odd q with gcd(q, 2a) = 1");
  std::vector<cplx> terms;
  for (i64 v : sqrt_mod(mulmod(a, b, q), q)) terms.push_back(unit(2 * v, q));
  return epsilon_q(q) * std::sqrt(static_cast<double>(q)) * static_cast<double>(jacobi(a, q)) * tree_sum(terms);
}

// kappa_{n,q}(a,b) = sum over units d of (d|q)^n e((a d + b dbar)/q)
inline ExpSumResult kappa_sum(int n, i64 q, i64 a, i64 b, sum_method how = sum_method::brute_force) {
  require(q >= 1, errc::precondition_violated, "modulus must be positive");
  double bound = weil_bound(q, a, b);
  if (how == sum_method::brute_force) {
    require(q <= brute_guard, errc::too_large, "modulus above brute-force guard");
    return {kappa_brute(unit_group(q), n, a, b), bound, how};
  }
  if (q == 1) return {1.0, bound, how};
  require(n % 2 != 0 && (q & 1), errc::closed_form_inapplicable, "no closed form for Kloosterman sums");
  // the sum is symmetric in a and b
  if (std::gcd(mod(a, q), q) == 1) return {salie_closed_form(q, a, b), bound, how};
  require(std::gcd(mod(b, q), q) == 1, errc::closed_form_inapplicable, "closed form needs a or b coprime to q");
  return {salie_closed_form(q, b, a), bound, how};
}

inline cplx salie_twisted_multiply(i64 q1, i64 q2, i64 a, i64 b, sum_method how = sum_method::brute_force) {
  require(q1 >= 1 && q2 >= 1 && (q1 & 1) && (q2 & 1) && std::gcd(q1, q2) == 1, errc::precondition_violated,
          "twisted multiplicativity needs coprime odd moduli");
  auto factor = [&](i64 q, i64 other) {
    i64 o = inv_mod(other, q);
    return kappa_sum(1, q, mulmod(a, o, q), mulmod(b, o, q), how).value;
  };
  return factor(q1, q2) * factor(q2, q1);
}

// q0 collects the primes of q that divide 2 det(A)
inline QSplit split_modulus(const QuadraticForm& f, i64 q) {
  require(q >= 1, errc::precondition_violated, "modulus must be positive");
  QSplit s{q, 1, q};
  i64 twice_det = 2 * std::abs(f.det());
  for (auto pp : factorize(q))
    if (twice_det % pp.p == 0) s.q0 *= pp.value();
  s.q1 = q / s.q0;
  return s;
}

}  // namespace circle_forms
