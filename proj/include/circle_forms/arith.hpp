#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace circle_forms {

using i64 = std::int64_t;
using i128 = __int128;
using cplx = std::complex<double>;

constexpr double two_pi = 2.0 * std::numbers::pi;

// least nonnegative residue
constexpr i64 mod(i64 a, i64 q) noexcept {
  i64 r = a % q;
  return r < 0 ? r + q : r;
}

constexpr i64 mulmod(i64 a, i64 b, i64 q) noexcept {
  return static_cast<i64>(mod(static_cast<i64>((static_cast<i128>(a) * b) % q), q));
}

constexpr i64 powmod(i64 b, i64 e, i64 q) noexcept {
  i64 r = 1 % q;
  b = mod(b, q);
  for (; e > 0; e >>= 1) {
    if (e & 1) r = mulmod(r, b, q);
    b = mulmod(b, b, q);
  }
  return r;
}

// inverse of a mod q; q = 1 gives 0
inline i64 inv_mod(i64 a, i64 q) {
  if (q == 1) return 0;
  i64 r0 = q, r1 = mod(a, q), s0 = 0, s1 = 1;
  while (r1 != 0) {
    i64 t = r0 / r1;
    std::tie(r0, r1) = std::pair{r1, r0 - t * r1};
    std::tie(s0, s1) = std::pair{s1, s0 - t * s1};
  }
  require(r0 == 1, errc::precondition_violated,
          "no inverse of " + std::to_string(a) + " mod " + std::to_string(q));
  return mod(s0, q);
}

// Jacobi symbol (a|q) for odd q > 0; 0 when gcd(a,q) > 1
inline int jacobi(i64 a, i64 q) {
  require(q > 0 && (q & 1), errc::precondition_violated, "jacobi needs odd positive modulus");
  a = mod(a, q);
  int t = 1;
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      i64 r = q & 7;
      if (r == 3 || r == 5) t = -t;
    }
    std::swap(a, q);
    if ((a & 3) == 3 && (q & 3) == 3) t = -t;
    a %= q;
  }
  return q == 1 ? t : 0;
}

struct prime_power {
  i64 p;
  int k;
  i64 value() const noexcept {
    i64 v = 1;
    for (int i = 0; i < k; ++i) v *= p;
    return v;
  }
};

inline std::vector<prime_power> factorize(i64 n) {
  std::vector<prime_power> out;
  if (n < 0) n = -n;
  for (i64 p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    int k = 0;
    while (n % p == 0) n /= p, ++k;
    out.push_back({p, k});
  }
  if (n > 1) out.push_back({n, 1});
  return out;
}

inline bool is_prime(i64 n) {
  if (n < 2) return false;
  for (i64 p = 2; p * p <= n; ++p)
    if (n % p == 0) return false;
  return true;
}

// number of divisors
inline i64 tau(i64 n) {
  i64 t = 1;
  for (auto [p, k] : factorize(n)) t *= k + 1;
  return t;
}

inline i64 gcd3(i64 a, i64 b, i64 c) { return std::gcd(std::gcd(a, b), c); }

// x with x = a mod m, x = b mod n for coprime m, n
inline i64 crt(i64 a, i64 m, i64 b, i64 n) {
  i64 t = mulmod(mod(b - a, n), inv_mod(m, n), n);
  return mod(a + m * t, m * n);
}

inline cplx epsilon_q(i64 q) { return (q & 3) == 1 ? cplx{1, 0} : cplx{0, 1}; }

// e(k/q) with k reduced first, so large numerators keep full precision
inline cplx unit(i64 k, i64 q) {
  double t = two_pi * static_cast<double>(mod(k, q)) / static_cast<double>(q);
  return {std::cos(t), std::sin(t)};
}

inline cplx e(double x) { return std::polar(1.0, two_pi * (x - std::floor(x))); }

// table of e(k/q), k = 0..q-1
class roots_of_unity {
 public:
  explicit roots_of_unity(i64 q) : q_(q), w_(static_cast<std::size_t>(q)) {
    for (i64 k = 0; k < q; ++k) w_[static_cast<std::size_t>(k)] = unit(k, q);
  }
  const cplx& operator[](i64 k) const noexcept { return w_[static_cast<std::size_t>(mod(k, q_))]; }
  i64 modulus() const noexcept { return q_; }

 private:
  i64 q_;
  std::vector<cplx> w_;
};

// pairwise summation keeps rounding growth logarithmic
template <class T>
T tree_sum(std::span<const T> v) {
  if (v.size() <= 16) {
    T s{};
    for (const auto& x : v) s += x;
    return s;
  }
  auto h = v.size() / 2;
  return tree_sum(v.subspan(0, h)) + tree_sum(v.subspan(h));
}

template <class T>
T tree_sum(const std::vector<T>& v) {
  return tree_sum(std::span<const T>(v));
}

inline std::vector<i64> units_mod(i64 q) {
  std::vector<i64> u;
  for (i64 d = 0; d < q; ++d)
    if (std::gcd(d, q) == 1) u.push_back(d);
  return u;
}

inline i64 euler_phi(i64 q) {
  i64 r = q;
  for (auto [p, k] : factorize(q)) r = r / p * (p - 1);
  return r;
}

}  // namespace circle_forms
