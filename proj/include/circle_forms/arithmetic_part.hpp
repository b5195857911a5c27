#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "exp_sums.hpp"
#include "parallel.hpp"

namespace circle_forms {

struct ArithmeticContext {
  QuadraticForm form;
  i64 n_target = 0;
  double farey_order = 1;  // Q
};

namespace detail {

inline i64 d_upper(double Q, i64 q) { return static_cast<i64>(std::floor(static_cast<double>(q) + Q)); }

// largest integer d with q d x < 1, i.e. ceil(1/(qx)) - 1; huge for x <= 0
inline i64 x_cutoff(i64 q, double x) {
  if (x <= 0) return std::numeric_limits<i64>::max();
  double t = 1.0 / (static_cast<double>(q) * x);
  if (t > 9e18) return std::numeric_limits<i64>::max();
  return static_cast<i64>(std::ceil(t)) - 1;
}

inline ivec scale_mod(const ivec& r, i64 c, i64 q) {
  ivec out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = mulmod(mod(r[i], q), c, q);
  return out;
}

}  // namespace detail

// G(d, q, 0) for a batch of d, from one histogram of (F(h'), linear part)
// over the first n-1 coordinates; a reorganized brute force, no closed form
inline std::vector<cplx> gauss_sums_r0(const QuadraticForm& f, i64 q, const std::vector<i64>& ds) {
  const std::size_t n = f.n_vars(), t = n - 1;
  const auto& A = f.hessian();
  require(detail::ipow(q, t) <= brute_guard, errc::too_large, "Gauss sum enumeration above guard");
  roots_of_unity w(q);
  const std::size_t Q = static_cast<std::size_t>(q);
  std::vector<i64> hist(Q * Q, 0);
  ivec h(t, 0);
  i64 count = detail::ipow(q, t);
  for (i64 idx = 0; idx < count; ++idx) {
    i64 v = 0, c = 0;
    for (std::size_t i = 0; i < t; ++i) {
      v += mod(A(i, i) / 2, q) * (h[i] * h[i] % q);
      for (std::size_t j = i + 1; j < t; ++j) v += mod(A(i, j), q) * (h[i] * h[j] % q);
      v %= q;
      c += mod(A(i, t), q) * h[i];
    }
    ++hist[static_cast<std::size_t>(v) * Q + static_cast<std::size_t>(c % q)];
    for (std::size_t k = 0; k < t; ++k) {
      if (++h[k] < q) break;
      h[k] = 0;
    }
  }
  const i64 a = mod(A(t, t) / 2, q);
  std::vector<cplx> out;
  std::vector<cplx> col(Q), tab(Q);
  for (i64 d : ds) {
    d = mod(d, q);
    // col[c] = sum_v hist[v][c] e(dv/q); tab[c] = sum_x e(d(a x^2 + c x)/q)
    std::fill(col.begin(), col.end(), cplx{});
    for (std::size_t v = 0; v < Q; ++v) {
      cplx z = w[mulmod(d, static_cast<i64>(v), q)];
      const i64* row = &hist[v * Q];
      for (std::size_t c = 0; c < Q; ++c)
        if (row[c]) col[c] += static_cast<double>(row[c]) * z;
    }
    for (std::size_t c = 0; c < Q; ++c) {
      cplx s = 0;
      for (i64 x = 0; x < q; ++x) s += w[mulmod(d, (a * (x * x % q) + static_cast<i64>(c) * x) % q, q)];
      tab[c] = s;
    }
    std::vector<cplx> terms(Q);
    for (std::size_t c = 0; c < Q; ++c) terms[c] = col[c] * tab[c];
    out.push_back(tree_sum(terms));
  }
  return out;
}

// gamma(l) = (1/q) sum_{Q < b <= min(q+Q, ceil(1/(qx)) - 1)} e(-b l / q)
inline cplx gamma_coeff(i64 q, double Q, double x, i64 l) {
  i64 lo = static_cast<i64>(std::floor(Q)) + 1;
  i64 hi = std::min(detail::d_upper(Q, q), detail::x_cutoff(q, x));
  std::vector<cplx> terms;
  for (i64 b = lo; b <= hi; ++b) terms.push_back(unit(-mulmod(b, mod(l, q), q), q));
  return tree_sum(terms) / static_cast<double>(q);
}

// canonical representative of l in (-q/2, q/2]
inline i64 canonical_residue(i64 l, i64 q) {
  i64 r = mod(l, q);
  return 2 * r > q ? r - q : r;
}

// G(-dbar, q, r) for every unit d mod q, in the order of unit_group
inline std::vector<cplx> k_gauss_table(const QuadraticForm& f, const unit_group& g, const ivec& r) {
  const i64 q = g.modulus();
  std::vector<cplx> out;
  for (i64 dbar : g.inverses()) out.push_back(gauss_sum_multi(f, mod(-dbar, q), q, r).value);
  return out;
}

// T_r(q, n; x) = sum_{Q<d<=q+Q, qdx<1, (d,q)=1} e(n dbar/q) G(-dbar, q, r)
inline cplx t_sum(const ArithmeticContext& ctx, const ivec& r, i64 q, double x) {
  require(q >= 1, errc::precondition_violated, "modulus must be positive");
  const double Q = ctx.farey_order;
  i64 lo = static_cast<i64>(std::floor(Q)) + 1;
  i64 hi = std::min(detail::d_upper(Q, q), detail::x_cutoff(q, x));
  std::map<i64, cplx> gauss;  // by dbar
  std::vector<cplx> terms;
  for (i64 d = lo; d <= hi; ++d) {
    if (std::gcd(d, q) != 1) continue;
    i64 dbar = inv_mod(d, q);
    auto it = gauss.find(dbar);
    if (it == gauss.end()) it = gauss.emplace(dbar, gauss_sum_multi(ctx.form, mod(-dbar, q), q, r).value).first;
    terms.push_back(unit(mulmod(mod(ctx.n_target, q), dbar, q), q) * it->second);
  }
  return tree_sum(terms);
}

// K(l, n, r; q) from a precomputed table of G(-dbar, q, r)
inline cplx k_complete(const ArithmeticContext& ctx, const unit_group& g, const std::vector<cplx>& gauss, i64 l) {
  const i64 q = g.modulus();
  std::vector<cplx> terms;
  i64 lq = mod(l, q), nq = mod(ctx.n_target, q);
  for (std::size_t i = 0; i < g.units().size(); ++i)
    terms.push_back(g.roots()[mulmod(lq, g.units()[i], q) + mulmod(nq, g.inverses()[i], q)] * gauss[i]);
  return tree_sum(terms);
}

inline cplx k_complete(const ArithmeticContext& ctx, i64 l, const ivec& r, i64 q) {
  unit_group g(q);
  return k_complete(ctx, g, k_gauss_table(ctx.form, g, r), l);
}

// (t_sum, sum over l mod q of gamma(l) K(l)) for the completion identity
inline std::pair<cplx, cplx> completion_sides(const ArithmeticContext& ctx, const ivec& r, i64 q, double x) {
  unit_group g(q);
  auto gauss = k_gauss_table(ctx.form, g, r);
  std::vector<cplx> terms;
  for (i64 k = 0; k < q; ++k) {
    i64 l = canonical_residue(k, q);
    terms.push_back(gamma_coeff(q, ctx.farey_order, x, l) * k_complete(ctx, g, gauss, l));
  }
  return {t_sum(ctx, r, q, x), tree_sum(terms)};
}

// the twisted factor sum over units mod m, with `other` the cofactor
inline cplx k_twisted(const ArithmeticContext& ctx, i64 l, const ivec& r, i64 m, i64 other) {
  if (m == 1) return 1.0;
  i64 ob = inv_mod(other, m);
  ivec rr = detail::scale_mod(r, ob, m);
  unit_group g(m);
  std::vector<cplx> terms;
  for (std::size_t i = 0; i < g.units().size(); ++i) {
    i64 d = g.units()[i], dbar = g.inverses()[i];
    i64 phase = mulmod(ob, mulmod(mod(l, m), d, m) + mulmod(mod(ctx.n_target, m), dbar, m), m);
    terms.push_back(g.roots()[phase] * gauss_sum_multi(ctx.form, mod(-mulmod(ob, dbar, m), m), m, rr).value);
  }
  return tree_sum(terms);
}

// (K^{(q1)}(l, n, r; q0), K^{(q0)}(l, n, r; q1)) for the canonical split of q
inline std::pair<cplx, cplx> k_factor_pair(const ArithmeticContext& ctx, i64 l, const ivec& r, i64 q) {
  QSplit s = split_modulus(ctx.form, q);
  return {k_twisted(ctx, l, r, s.q0, s.q1), k_twisted(ctx, l, r, s.q1, s.q0)};
}

// K^{(q0)}(l, n, r; q1) through the Kloosterman or Salie sum
inline cplx k_q1_eval(const ArithmeticContext& ctx, i64 l, const ivec& r, i64 q1, i64 q0 = 1) {
  const auto& f = ctx.form;
  require(q1 >= 1 && std::gcd(q1, 2 * f.det()) == 1 && std::gcd(q0, q1) == 1, errc::precondition_violated,
          "q1 must be coprime to 2 det(A) and to q0");
  if (q1 == 1) return 1.0;
  const int n = static_cast<int>(f.n_vars());
  i64 q0b = inv_mod(q0, q1);
  // 2bar abar (alpha r^T A^{-1} r) with alpha = L
  i64 shift = mulmod(mulmod(inv_mod(2, q1), inv_mod(f.level(), q1), q1), mod(f.scaled_adjoint(r), q1), q1);
  i64 a = mulmod(q0b, mod(l + shift, q1), q1);
  i64 b = mulmod(q0b, mod(ctx.n_target, q1), q1);
  cplx one = epsilon_q(q1) * (jacobi(mod(-2 * q0b, q1), q1) * std::sqrt(static_cast<double>(q1)));
  cplx kappa = kappa_sum(n, q1, a, b).value;
  return static_cast<double>(jacobi(f.det(), q1)) * std::pow(one, n) * kappa;
}

// shape of the T_r bound with implied constant 1
inline double t_sum_bound(const ArithmeticContext& ctx, i64 q) {
  QSplit s = split_modulus(ctx.form, q);
  double n = static_cast<double>(ctx.form.n_vars());
  double g1 = static_cast<double>(std::gcd(mod(ctx.n_target, s.q1), s.q1));
  if (ctx.n_target == 0) g1 = static_cast<double>(s.q1);
  return std::pow(static_cast<double>(std::gcd(ctx.form.level(), s.q0)), n / 2) * std::sqrt(g1) *
         std::sqrt(static_cast<double>(s.q0)) * std::pow(static_cast<double>(q), (n + 1) / 2) *
         static_cast<double>(tau(q)) * std::log(2.0 * static_cast<double>(q));
}

struct SingularSeries {
  double value = 0;
  double cutoff = 1;
  std::vector<double> per_q_terms;  // q^{-n} sum_d e(-dn/q) G(d, q, 0)
  double max_imag = 0;
};

// truncated singular series for several n at once; the q-th term is
// multiplicative in q, so only prime powers are summed directly
inline std::vector<SingularSeries> singular_series_batch(const QuadraticForm& f, const std::vector<i64>& ns,
                                                         double Q_cut) {
  require(Q_cut >= 1, errc::precondition_violated, "cutoff must be at least 1");
  const i64 qmax = static_cast<i64>(std::floor(Q_cut));
  const double nv = static_cast<double>(f.n_vars());
  std::vector<i64> pps;
  for (i64 q = 2; q <= qmax; ++q)
    if (factorize(q).size() == 1) pps.push_back(q);
  std::vector<std::vector<cplx>> pp_terms(pps.size());
  parallel_for(pps.size(), [&](std::size_t i) {
    i64 q = pps[i];
    auto ds = units_mod(q);
    auto G = gauss_sums_r0(f, q, ds);
    double scale = std::pow(static_cast<double>(q), -nv);
    for (i64 n : ns) {
      std::vector<cplx> parts;
      for (std::size_t k = 0; k < ds.size(); ++k) parts.push_back(unit(-mulmod(ds[k], mod(n, q), q), q) * G[k]);
      pp_terms[i].push_back(tree_sum(parts) * scale);
    }
  });
  std::vector<std::size_t> slot(static_cast<std::size_t>(qmax) + 1);
  for (std::size_t i = 0; i < pps.size(); ++i) slot[static_cast<std::size_t>(pps[i])] = i;
  std::vector<SingularSeries> out(ns.size());
  for (std::size_t j = 0; j < ns.size(); ++j) {
    out[j].cutoff = Q_cut;
    for (i64 q = 1; q <= qmax; ++q) {
      cplx t = 1;
      for (auto pp : factorize(q)) t *= pp_terms[slot[static_cast<std::size_t>(pp.value())]][j];
      out[j].per_q_terms.push_back(t.real());
      out[j].max_imag = std::max(out[j].max_imag, std::abs(t.imag()));
    }
    out[j].value = tree_sum(out[j].per_q_terms);
    require(out[j].max_imag <= 1e-9, errc::precondition_violated, "singular series term is not real");
  }
  return out;
}

inline SingularSeries singular_series_truncated(const ArithmeticContext& ctx, double Q_cut) {
  return singular_series_batch(ctx.form, {ctx.n_target}, Q_cut).front();
}

// (sum_{q<=Q} gcd(n,q1)^{1/2} q1^{-1/2} tau(q) log 2q, Q^{1/2+eps} tau(n) prod (1-p^{-1/2})^{-1})
inline std::pair<double, double> gcd_sum(const ArithmeticContext& ctx, double Q_cut, double eps) {
  const i64 qmax = static_cast<i64>(std::floor(Q_cut));
  std::vector<double> terms;
  for (i64 q = 1; q <= qmax; ++q) {
    QSplit s = split_modulus(ctx.form, q);
    double g = ctx.n_target == 0 ? static_cast<double>(s.q1)
                                 : static_cast<double>(std::gcd(mod(ctx.n_target, s.q1), s.q1));
    terms.push_back(std::sqrt(g / static_cast<double>(s.q1)) * static_cast<double>(tau(q)) *
                    std::log(2.0 * static_cast<double>(q)));
  }
  double prod = 1;
  for (auto pp : factorize(2 * ctx.form.det())) prod /= 1 - 1 / std::sqrt(static_cast<double>(pp.p));
  double tn = ctx.n_target == 0 ? 1.0 : static_cast<double>(tau(ctx.n_target));
  return {tree_sum(terms), std::pow(Q_cut, 0.5 + eps) * tn * prod};
}

}  // namespace circle_forms
