#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "core_forms.hpp"
#include "quadrature.hpp"

namespace circle_forms {

struct FareyFraction {
  i64 a = 0;
  i64 q = 1;
  rational value() const { return rational(a, q); }
  bool operator==(const FareyFraction&) const = default;
};

struct FareyArc {
  FareyFraction center;
  i64 q_left = 1;   // q'
  i64 q_right = 1;  // q''
  rational lo, hi;  // arc is [lo, hi)
};

inline i64 farey_floor(double Q) {
  require(Q >= 1, errc::order_too_small, "Farey order must be at least 1");
  return static_cast<i64>(std::floor(Q));
}

// reduced a/q in [0, 1) with q <= Q, increasing
inline std::vector<FareyFraction> farey_sequence(double Q) {
  const i64 N = farey_floor(Q);
  std::vector<FareyFraction> out{{0, 1}};
  i64 a = 0, b = 1, c = 1, d = N;
  while (c < d) {
    out.push_back({c, d});
    i64 k = (N + b) / d;
    i64 nc = k * c - a, nd = k * d - b;
    a = c, b = d, c = nc, d = nd;
  }
  return out;
}

// the unique q' in (Q - q, Q] with a q' = 1 (mod q); sign = -1 gives q''
inline i64 neighbor_denominator(i64 a, i64 q, i64 N, int sign) {
  if (q == 1) return N;
  i64 target = mod(sign * inv_mod(a, q), q);
  // q consecutive integers N-q+1..N cover every residue once
  i64 lo = N - q + 1;
  return lo + mod(target - lo, q);
}

inline std::vector<FareyArc> farey_dissection(double Q) {
  const i64 N = farey_floor(Q);
  std::vector<FareyArc> arcs;
  for (auto f : farey_sequence(Q)) {
    FareyArc arc{f, neighbor_denominator(f.a, f.q, N, 1), neighbor_denominator(f.a, f.q, N, -1), {}, {}};
    arc.lo = f.value() - rational(1, f.q * (f.q + arc.q_left));
    arc.hi = f.value() + rational(1, f.q * (f.q + arc.q_right));
    arcs.push_back(arc);
  }
  return arcs;
}

// 2 Re( sum_q sum_{Q<d<=q+Q, (d,q)=1} int_0^{1/(qd)} f(x - dbar/q) dx ),
// which reproduces the integral of f over a period
inline cplx kloosterman_decompose_integral(const std::function<cplx(double)>& f, double Q, double quad_tol) {
  const i64 N = farey_floor(Q);
  struct term {
    i64 q, d;
  };
  std::vector<term> terms;
  for (i64 q = 1; q <= N; ++q) {
    i64 d_hi = static_cast<i64>(std::floor(static_cast<double>(q) + Q));
    for (i64 d = N + 1; d <= d_hi; ++d)
      if (std::gcd(d, q) == 1) terms.push_back({q, d});
  }
  double each = quad_tol / (2.0 * static_cast<double>(terms.size()));
  neumaier acc;
  for (auto [q, d] : terms) {
    double shift = static_cast<double>(inv_mod(d, q)) / static_cast<double>(q);
    double len = 1.0 / static_cast<double>(q * d);
    acc += integrate_adaptive([&](double x) { return f(x - shift); }, 0.0, len, each).value;
  }
  return {2 * acc.value().real(), 0.0};
}

}  // namespace circle_forms
