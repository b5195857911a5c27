#pragma once

#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "arith.hpp"

namespace circle_forms {

struct gl_rule {
  std::vector<double> x, w;  // nodes and weights on [-1, 1]
};

// m-point Gauss-Legendre rule, cached per order
inline const gl_rule& gauss_legendre(unsigned m) {
  static std::mutex mu;
  static std::map<unsigned, gl_rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  gl_rule r;
  for (double z : boost::math::legendre_p_zeros<double>(static_cast<int>(m))) {
    double dp = boost::math::legendre_p_prime(static_cast<int>(m), z);
    double w = 2 / ((1 - z * z) * dp * dp);
    r.x.push_back(z), r.w.push_back(w);
    if (z != 0) r.x.push_back(-z), r.w.push_back(w);
  }
  return cache.emplace(m, std::move(r)).first->second;
}

// composite rule: `panels` equal panels of an m-point rule on [a, b]
inline gl_rule composite(double a, double b, std::size_t panels, unsigned m = 16) {
  const auto& base = gauss_legendre(m);
  gl_rule out;
  double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    double lo = a + h * static_cast<double>(p), mid = lo + h / 2;
    for (std::size_t i = 0; i < base.x.size(); ++i) {
      out.x.push_back(mid + h / 2 * base.x[i]);
      out.w.push_back(h / 2 * base.w[i]);
    }
  }
  return out;
}

struct quad_result {
  cplx value;
  double error;
};

// adaptive bisection, comparing one panel against its two halves;
// throws rather than returning an unconverged value
template <class F>
quad_result integrate_adaptive(F&& f, double a, double b, double tol, int max_depth = 30, unsigned m = 20) {
  const auto& r = gauss_legendre(m);
  auto panel = [&](double lo, double hi) {
    cplx s = 0;
    double c = (lo + hi) / 2, h = (hi - lo) / 2;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * cplx(f(c + h * r.x[i]));
    return s * h;
  };
  struct item {
    double lo, hi;
    cplx whole;
    int depth;
    double tol;
  };
  std::vector<item> stack{{a, b, panel(a, b), 0, tol}};
  cplx total = 0;
  double err = 0;
  while (!stack.empty()) {
    item it = stack.back();
    stack.pop_back();
    double mid = (it.lo + it.hi) / 2;
    cplx left = panel(it.lo, mid), right = panel(mid, it.hi);
    double diff = std::abs(left + right - it.whole);
    if (diff <= it.tol || diff <= 1e-15 * std::abs(left + right)) {
      total += left + right;
      err += diff;
      continue;
    }
    require(it.depth < max_depth, errc::quadrature_failure,
            "adaptive quadrature did not reach tolerance on [" + std::to_string(it.lo) + ", " +
                std::to_string(it.hi) + "]");
    stack.push_back({mid, it.hi, right, it.depth + 1, it.tol / 2});
    stack.push_back({it.lo, mid, left, it.depth + 1, it.tol / 2});
  }
  return {total, err};
}

// compensated running sum for long streams that cannot be buffered
struct neumaier {
  double re = 0, im = 0, cre = 0, cim = 0;
  static void add(double& s, double& c, double x) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  neumaier& operator+=(cplx z) {
    add(re, cre, z.real());
    add(im, cim, z.imag());
    return *this;
  }
  cplx value() const { return {re + cre, im + cim}; }
};

// tensor product over per-axis rules; f takes a pointer to n coordinates
template <class F>
cplx tensor_integrate(const std::vector<gl_rule>& axes, F&& f) {
  const std::size_t n = axes.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> pt(n);
  if (n == 0) return f(pt.data());
  neumaier acc;
  const auto& last = axes.back();
  for (;;) {
    double w = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      pt[k] = axes[k].x[idx[k]];
      w *= axes[k].w[idx[k]];
    }
    cplx s = 0;
    for (std::size_t i = 0; i < last.x.size(); ++i) {
      pt[n - 1] = last.x[i];
      s += last.w[i] * f(pt.data());
    }
    acc += w * s;
    std::size_t k = n - 1;
    while (k > 0) {
      --k;
      if (++idx[k] < axes[k].x.size()) break;
      idx[k] = 0;
      if (k == 0) return acc.value();
    }
    if (n == 1) return acc.value();
  }
}

}  // namespace circle_forms
