#pragma once

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "core_forms.hpp"
#include "quadrature.hpp"

namespace circle_forms {

inline constexpr double pi = std::numbers::pi;

// surface area of the unit sphere in R^n
inline double sphere_area(std::size_t n) {
  double h = static_cast<double>(n) / 2;
  return 2 * std::pow(pi, h) / std::tgamma(h);
}

// Radial bump: 1 on ||x|| <= plateau*U, 0 outside ||x|| >= U, C-infinity between.
class BumpProfile {
 public:
  BumpProfile(std::size_t n, double U, double plateau) : n_(n), U_(U), rho_(plateau) {
    require(n >= 1, errc::dimension_mismatch, "bump needs at least one dimension");
    require(U > 0 && std::isfinite(U), errc::bad_plateau, "support radius must be positive");
    require(plateau >= 0 && plateau < 1, errc::bad_plateau, "plateau must lie in [0, 1)");
    cache_ = std::make_shared<lazy>();
  }

  std::size_t dims() const noexcept { return n_; }
  double support_radius() const noexcept { return U_; }
  double plateau() const noexcept { return rho_; }
  double sup_abs() const noexcept { return 1.0; }

  // profile as a function of the Euclidean norm
  double radial(double r) const {
    double t = std::abs(r) / U_;
    if (t >= 1) return 0;
    if (rho_ == 0) return std::exp(1 - 1 / (1 - t * t));
    if (t <= rho_) return 1;
    double s = (t - rho_) / (1 - rho_);
    double a = g(1 - s), b = g(s);
    return a / (a + b);
  }

  double operator()(const double* x) const {
    double s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += x[i] * x[i];
    return radial(std::sqrt(s));
  }
  double operator()(const dvec& x) const {
    require(x.size() == n_, errc::dimension_mismatch, "point dimension differs from bump dimension");
    return (*this)(x.data());
  }

  // Psi_C(m) = Psi(m / C)
  double scaled(const dvec& m, double C) const {
    double s = 0;
    for (double v : m) s += v * v;
    return radial(std::sqrt(s) / C);
  }

  // integral of Psi over R^n (Psi >= 0, so also the L1 norm)
  double integral() const {
    const auto& r = radial_rule();
    double s = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * radial(r.x[i]) * std::pow(r.x[i], double(n_ - 1));
    return sphere_area(n_) * s;
  }

  // Fourier transform at frequency norm k, via the Hankel transform of the profile
  double fourier(double k) const {
    const auto& r = radial_rule(k);
    double s = 0;
    if (k == 0) {
      return integral();
    }
    double nu = static_cast<double>(n_) / 2 - 1;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      double x = r.x[i];
      double v = radial(x);
      if (v == 0) continue;
      double z = 2 * pi * k * x;
      double kernel = n_ == 1 ? 2 * std::cos(z) : 2 * pi * std::pow(x / k, nu) * x * boost::math::cyl_bessel_j(nu, z);
      s += r.w[i] * v * kernel;
    }
    return s;
  }

  // integral of |Psi^| over R^n; computed on first use, then cached
  double l1_fourier() const {
    std::call_once(cache_->once, [&] { cache_->l1 = compute_l1(); });
    return cache_->l1;
  }

 private:
  static double g(double u) { return u <= 0 ? 0 : std::exp(-1 / u); }

  // radial nodes on [0, U], fine enough for the transition layer and frequency k
  gl_rule radial_rule(double k = 0) const {
    auto base = static_cast<std::size_t>(std::ceil(8 / (1 - rho_)));
    return composite(0, U_, base + static_cast<std::size_t>(std::ceil(k * U_)), 16);
  }

  double compute_l1() const {
    // chunks of width 1/U in k; stop once the tail is negligible
    const double width = 1 / U_;
    const auto& gl = gauss_legendre(16);
    double total = 0;
    int quiet = 0;
    for (int j = 0; j < 4000 && quiet < 4; ++j) {
      double lo = j * width, c = lo + width / 2, h = width / 2;
      double part = 0;
      for (std::size_t i = 0; i < gl.x.size(); ++i) {
        double k = c + h * gl.x[i];
        part += gl.w[i] * h * std::abs(fourier(k)) * std::pow(k, double(n_ - 1));
      }
      part *= n_ == 1 ? 2.0 : sphere_area(n_);
      total += part;
      quiet = (j >= 4 && part < 1e-12 * total) ? quiet + 1 : 0;
    }
    return total;
  }

  struct lazy {
    std::once_flag once;
    double l1 = 0;
  };
  std::size_t n_;
  double U_, rho_;
  std::shared_ptr<lazy> cache_;
};

inline BumpProfile standard_bump(std::size_t n, double U, double plateau) { return BumpProfile(n, U, plateau); }

struct OscIntegralParams {
  double x = 0;
  double C = 1;
  ivec r;
  i64 q = 1;
};

inline double gaussian_fourier_1d(double a, double y) {
  require(a > 0, errc::precondition_violated, "gaussian width must be positive");
  return std::sqrt(pi / a) * std::exp(-pi * pi * y * y / a);
}

// tent t(x) = max(0, 1 - |x|/eta) and its transform eta * sinc^2(eta x)
inline double tent(double eta, double x) { return std::max(0.0, 1 - std::abs(x) / eta); }
inline double tent_fourier(double eta, double x) {
  double z = pi * eta * x;
  if (std::abs(z) < 1e-6) return eta * (1 - z * z / 3);
  double s = std::sin(z) / z;
  return eta * s * s;
}

namespace detail {

inline std::size_t max_dense_dims = 4;

// integrates Psi(u) g(u) over the support cube; grid refined until two
// successive panel counts agree. `freq` bounds the phase gradient per axis.
template <class G>
quad_result cube_integrate(const BumpProfile& psi, double freq, double tol, G&& g) {
  const std::size_t n = psi.dims();
  require(n <= max_dense_dims, errc::dimension_too_high, "dense quadrature is limited to 4 dimensions");
  const double U = psi.support_radius();
  auto panels = static_cast<std::size_t>(std::ceil(U * freq));
  panels += n <= 2 ? 6 : 3;
  panels = std::max<std::size_t>(panels, static_cast<std::size_t>(std::ceil(2 / (1 - psi.plateau()))));
  auto run = [&](std::size_t p) {
    gl_rule axis = composite(-U, U, p, 16);
    std::vector<gl_rule> axes(n, axis);
    return tensor_integrate(axes, [&](const double* u) -> cplx {
      double v = psi(u);
      return v == 0 ? cplx{} : v * g(u);
    });
  };
  cplx prev = run(panels);
  for (int round = 0; round < 3; ++round) {
    std::size_t next = panels + std::max<std::size_t>(1, panels / 2);
    cplx cur = run(next);
    double err = std::abs(cur - prev);
    if (err <= tol) return {cur, err};
    prev = cur, panels = next;
  }
  fail(errc::quadrature_failure, "oscillatory quadrature did not settle within tolerance");
}

// sum over a tensor grid of t(u) e(-c u.k) for every k in [-K, K]^n; the phase
// factorizes over axes, so the axes are contracted one at a time
inline std::vector<cplx> grid_fourier(std::vector<cplx> t, const dvec& nodes, std::size_t n, double c, i64 K) {
  const std::size_t N = nodes.size(), M = static_cast<std::size_t>(2 * K + 1);
  std::vector<cplx> E(N * M);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < M; ++k) E[i * M + k] = e(-c * nodes[i] * (static_cast<double>(k) - double(K)));
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 1; a < n; ++a) inner *= N;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<cplx> next(outer * M * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < N; ++i) {
        const cplx* src = &t[(o * N + i) * inner];
        for (std::size_t k = 0; k < M; ++k) {
          cplx w = E[i * M + k];
          cplx* dst = &next[(o * M + k) * inner];
          for (std::size_t in = 0; in < inner; ++in) dst[in] += w * src[in];
        }
      }
    t = std::move(next);
    outer *= M;
    if (a + 1 < n) inner /= N;
  }
  return t;
}

inline double row_abs_max(const dmatrix& m) {
  double best = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < m.n; ++j) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

// integral of e(m^T M m / 2 + b.m + c) Psi(m) over R^n
inline quad_result quadratic_phase_integral(const dmatrix& M, const dvec& b, double c, const BumpProfile& psi,
                                            double tol) {
  const std::size_t n = psi.dims();
  require(M.n == n && b.size() == n, errc::dimension_mismatch, "phase data does not match bump dimension");
  double bmax = 0;
  for (double v : b) bmax = std::max(bmax, std::abs(v));
  double freq = detail::row_abs_max(M) * psi.support_radius() + bmax;
  return detail::cube_integrate(psi, freq, tol, [&](const double* u) {
    double ph = c;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += M(i, j) * u[j];
      ph += 0.5 * u[i] * s + b[i] * u[i];
    }
    return e(ph);
  });
}

// C^n * integral of e(C^2 x F(m) - C m.r/q) Psi(m)
inline cplx osc_integral(const QuadraticForm& f, const BumpProfile& psi, const OscIntegralParams& p, double tol) {
  const std::size_t n = f.n_vars();
  require(psi.dims() == n && p.r.size() == n, errc::dimension_mismatch, "dimensions of form, bump and r differ");
  require(p.C > 0 && p.q >= 1, errc::precondition_violated, "need C > 0 and q >= 1");
  dmatrix M(n);
  for (std::size_t k = 0; k < n * n; ++k) M.a[k] = p.C * p.C * p.x * static_cast<double>(f.hessian().a[k]);
  dvec b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = -p.C * static_cast<double>(p.r[i]) / static_cast<double>(p.q);
  double scale = std::pow(p.C, static_cast<double>(n));
  return scale * quadratic_phase_integral(M, b, 0, psi, tol / scale).value;
}

// Poisson summation on the progression h + qZ^n: (lattice side, dual side)
inline std::pair<cplx, cplx> poisson_check(const QuadraticForm& f, const BumpProfile& psi, const ivec& h, i64 q,
                                           double x, double C, double tol) {
  const std::size_t n = f.n_vars();
  require(h.size() == n && psi.dims() == n, errc::dimension_mismatch, "dimensions of form, bump and h differ");
  require(q >= 1 && C > 0, errc::precondition_violated, "need q >= 1 and C > 0");
  const double R = psi.support_radius() * C;

  // lattice side: m with ||h + q m|| <= R
  neumaier lat;
  ivec m(n), v(n);
  std::vector<i64> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = static_cast<i64>(std::ceil((-R - h[i]) / double(q)));
    hi[i] = static_cast<i64>(std::floor((R - h[i]) / double(q)));
  }
  bool empty = false;
  for (std::size_t i = 0; i < n; ++i) empty |= lo[i] > hi[i];
  if (!empty) {
    m = lo;
    for (;;) {
      dvec pt(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = h[i] + q * m[i], pt[i] = double(v[i]);
      double w = psi.scaled(pt, C);
      if (w != 0) lat += w * e(x * double(f.eval(v)));
      std::size_t k = 0;
      while (k < n && ++m[k] > hi[k]) m[k] = lo[k], ++k;
      if (k == n) break;
    }
  }

  // dual side: every r in the cube [-K, K]^n from one tensor grid, K doubling
  // until the outer sup-norm shells fall below the tolerance
  const double U = psi.support_radius();
  dmatrix Ad(n);
  for (std::size_t k = 0; k < n * n; ++k) Ad.a[k] = static_cast<double>(f.hessian().a[k]);
  const double sweep = C * C * std::abs(x) * detail::row_abs_max(Ad) * U;
  const double threshold = double(q) * C * std::abs(x) * f.sigma1() * (U + 1) * std::sqrt(double(n));
  const double norm = std::pow(C / double(q), double(n));

  auto shells_at = [&](i64 K, std::size_t panels) {
    gl_rule axis = composite(-U, U, panels, 16);
    const std::size_t N = axis.x.size();
    require(std::pow(double(N), double(n)) <= 4e7, errc::quadrature_failure, "Poisson dual grid too large");
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= N;
    std::vector<cplx> t(total);
    std::vector<std::size_t> idx(n, 0);
    dvec u(n);
    for (std::size_t flat = 0; flat < total; ++flat) {
      double w = 1;
      for (std::size_t i = 0; i < n; ++i) u[i] = axis.x[idx[i]], w *= axis.w[idx[i]];
      double v = psi(u.data());
      if (v != 0) t[flat] = w * v * e(C * C * x * f.eval_real(u));
      for (std::size_t i = n; i-- > 0;) {
        if (++idx[i] < N) break;
        idx[i] = 0;
      }
    }
    auto I = detail::grid_fourier(std::move(t), axis.x, n, C / double(q), K);
    std::vector<neumaier> acc(static_cast<std::size_t>(K) + 1);
    const std::size_t M = static_cast<std::size_t>(2 * K + 1);
    std::vector<std::size_t> kk(n, 0);
    for (std::size_t flat = 0; flat < I.size(); ++flat) {
      i64 sup = 0, hr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        i64 r = static_cast<i64>(kk[i]) - K;
        sup = std::max(sup, std::abs(r));
        hr += h[i] * r;
      }
      acc[static_cast<std::size_t>(sup)] += unit(hr, q) * I[flat];
      for (std::size_t i = n; i-- > 0;) {
        if (++kk[i] < M) break;
        kk[i] = 0;
      }
    }
    std::vector<cplx> out;
    for (auto& a : acc) out.push_back(norm * a.value());
    return out;
  };

  for (i64 K = std::max<i64>(4, static_cast<i64>(std::ceil(threshold)) + 2); K <= 400; K *= 2) {
    auto panels = static_cast<std::size_t>(std::ceil(U * (sweep + C * double(K) / double(q)))) + (n <= 2 ? 6 : 3);
    auto coarse = shells_at(K, panels);
    std::vector<cplx> fine;
    bool settled = false;
    for (int round = 0; round < 3 && !settled; ++round) {
      panels += std::max<std::size_t>(1, panels / 2);
      fine = shells_at(K, panels);
      settled = std::abs(tree_sum(fine) - tree_sum(coarse)) <= tol / 2;
      coarse = fine;
    }
    require(settled, errc::quadrature_failure, "Poisson dual grid did not settle");
    const auto k = fine.size();
    if (std::abs(fine[k - 1]) < tol / 10 && std::abs(fine[k - 2]) < tol / 10)
      return {lat.value(), tree_sum(fine)};
  }
  fail(errc::quadrature_failure, "dual Poisson sum did not decay");
}

namespace detail {

// quadrature on the unit sphere S^{s-1}: (point, weight)
inline std::vector<std::pair<dvec, double>> sphere_rule(std::size_t s, unsigned m) {
  if (s == 1) return {{dvec{1.0}, 1.0}, {dvec{-1.0}, 1.0}};
  if (s == 2) {
    std::vector<std::pair<dvec, double>> out;
    unsigned N = 2 * m;
    for (unsigned k = 0; k < N; ++k) {
      double th = two_pi * k / N;
      out.push_back({{std::cos(th), std::sin(th)}, two_pi / N});
    }
    return out;
  }
  // first coordinate cos(chi), measure sin^{s-2}(chi) dchi dsigma_{s-2}
  auto sub = sphere_rule(s - 1, m);
  gl_rule chi = composite(0, pi, 1, m);
  std::vector<std::pair<dvec, double>> out;
  for (std::size_t i = 0; i < chi.x.size(); ++i) {
    double c = std::cos(chi.x[i]), sn = std::sin(chi.x[i]);
    double w = chi.w[i] * std::pow(sn, double(s - 2));
    for (auto& [p, wp] : sub) {
      dvec pt{c};
      for (double v : p) pt.push_back(sn * v);
      out.push_back({std::move(pt), w * wp});
    }
  }
  return out;
}


// Coordinates in which F = |y|^2/2 - |w|^2/2 with y = rho * omega.
// Psi depends only on ||m||^2 = rho^2 a(omega) + b(w).
struct polar_frame {
  std::size_t s = 0;                           // positive eigenvalue count
  std::vector<std::pair<double, double>> dirs;  // (a(omega), weight), merged by value
  struct wnode {
    double b, half_w2, weight;  // weight includes |det A|^{-1/2}
  };
  std::vector<wnode> ws;
};

// flip = true builds the frame of -F
inline polar_frame make_frame(const dvec& eig, double U, bool flip) {
  polar_frame fr;
  dvec pos, neg;
  for (double l : eig) {
    double v = flip ? -l : l;
    (v > 0 ? pos : neg).push_back(std::abs(v));
  }
  // canonical order, so F and -F get the same nodes
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  fr.s = pos.size();
  double det = 1;
  for (double l : eig) det *= std::abs(l);
  const double jac = 1 / std::sqrt(det);

  if (fr.s > 0) {
    unsigned m = fr.s <= 2 ? 48 : fr.s == 3 ? 20 : 12;
    std::vector<std::pair<double, double>> raw;
    for (auto& [p, w] : sphere_rule(fr.s, m)) {
      double a = 0;
      for (std::size_t j = 0; j < fr.s; ++j) a += p[j] * p[j] / pos[j];
      raw.push_back({a, w});
    }
    std::sort(raw.begin(), raw.end());
    for (auto& [a, w] : raw) {
      if (!fr.dirs.empty() && std::abs(fr.dirs.back().first - a) <= 1e-13 * a)
        fr.dirs.back().second += w;
      else
        fr.dirs.push_back({a, w});
    }
  }

  // tensor rule over the negative block, |w_j| <= U sqrt(|lambda_j|)
  const std::size_t k = neg.size();
  std::vector<gl_rule> axes;
  for (double l : neg) axes.push_back(composite(-U * std::sqrt(l), U * std::sqrt(l), 4, 16));
  std::vector<std::size_t> idx(k, 0);
  for (;;) {
    double b = 0, w2 = 0, w = jac;
    for (std::size_t j = 0; j < k; ++j) {
      double v = axes[j].x[idx[j]];
      b += v * v / neg[j];
      w2 += v * v;
      w *= axes[j].w[idx[j]];
    }
    if (b < U * U) fr.ws.push_back({b, w2 / 2, w});
    std::size_t j = 0;
    while (j < k && ++idx[j] == axes[j].x.size()) idx[j] = 0, ++j;
    if (j >= k) break;
  }
  return fr;
}

// sum over frame nodes of weight * radial(rho_max, b, a) where radial is
// the caller's rho-integral; rho_max is where Psi's support ends
template <class R>
double frame_sum(const polar_frame& fr, double U, R&& radial) {
  std::vector<double> parts(fr.ws.size(), 0.0);
  for (std::size_t i = 0; i < fr.ws.size(); ++i) {
    const auto& wn = fr.ws[i];
    double acc = 0;
    for (auto& [a, wd] : fr.dirs) {
      double rmax = std::sqrt((U * U - wn.b) / a);
      acc += wd * radial(rmax, wn, a);
    }
    parts[i] = wn.weight * acc;
  }
  return tree_sum(parts);
}

}  // namespace detail

// Richardson-extrapolated limit of (1/2e) * integral of Psi over |F - n/C^2| < e
inline double real_factor(const QuadraticForm& f, const BumpProfile& psi, double n_target, double C,
                          std::vector<double> eps = {}, double rel_tol = 1e-5) {
  require(psi.dims() == f.n_vars(), errc::dimension_mismatch, "bump and form dimensions differ");
  require(C > 0, errc::precondition_violated, "scale must be positive");
  if (eps.empty())
    for (int k = 0; k <= 6; ++k) eps.push_back(0.1 * std::ldexp(1.0, -k));
  for (std::size_t i = 1; i < eps.size(); ++i)
    require(eps[i] < eps[i - 1] && eps[i] > 0, errc::precondition_violated, "eps sequence must decrease to 0");

  double t = n_target / (C * C);
  bool flip = f.pos_eigen_count() == 0;
  if (flip) t = -t;
  const double U = psi.support_radius();
  auto fr = detail::make_frame(f.eigenvalues(), U, flip);
  if (fr.s == 0) return 0;

  // keep the shell clear of the cone vertex so the integrand stays smooth in e
  if (t > 0) {
    std::vector<double> kept;
    for (double e : eps)
      if (e < t / 2) kept.push_back(e);
    eps = kept;
  }
  require(eps.size() >= 3, errc::non_convergent, "too few admissible shell widths for extrapolation");

  const auto& gl = gauss_legendre(16);
  const double sd = static_cast<double>(fr.s);
  auto shell = [&](double e) {
    double v = detail::frame_sum(fr, U, [&](double rmax, const detail::polar_frame::wnode& wn, double a) {
      double us = t + wn.half_w2;
      double hi = std::min(rmax, std::sqrt(2 * std::max(0.0, us + e)));
      double lo = std::sqrt(2 * std::max(0.0, us - e));
      if (hi <= lo) return 0.0;
      double c = (lo + hi) / 2, h = (hi - lo) / 2, s = 0;
      for (std::size_t i = 0; i < gl.x.size(); ++i) {
        double rho = c + h * gl.x[i];
        s += gl.w[i] * psi.radial(std::sqrt(rho * rho * a + wn.b)) * std::pow(rho, sd - 1);
      }
      return s * h;
    });
    return v / (2 * e);
  };

  // Neville table in e^2, three columns deep
  std::vector<std::vector<double>> T;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    T.push_back({shell(eps[k])});
    for (std::size_t j = 1; j <= std::min<std::size_t>(k, 3); ++j) {
      double r = eps[k - j] * eps[k - j] / (eps[k] * eps[k]);
      T[k].push_back(T[k][j - 1] + (T[k][j - 1] - T[k - 1][j - 1]) / (r - 1));
    }
  }
  double best = T.back().back();
  double resid = std::abs(best - T[T.size() - 2].back());
  require(resid <= rel_tol * std::max(1.0, std::abs(best)) + 1e-12, errc::non_convergent,
          "shell limit did not settle: residual " + std::to_string(resid));
  return best;
}

struct SingularIntegral {
  double value;
  double est_error;
  double cutoff;  // B actually used (the last one for B = infinity)
};

// J(n, C; B) = C^{n-2} |det A|^{-1/2} integral of Psi D_{B C^2}(F - n/C^2),
// with D_B(v) = sin(2 pi B v) / (pi v); B = infinity by doubling B.
inline SingularIntegral singular_integral(const QuadraticForm& f, const BumpProfile& psi, double n_target, double C,
                                          double B, double tol = 1e-6) {
  const std::size_t n = f.n_vars();
  require(psi.dims() == n, errc::dimension_mismatch, "bump and form dimensions differ");
  require(C > 0 && B > 0, errc::precondition_violated, "need C > 0 and B > 0");
  const bool infinite = std::isinf(B);
  require(!infinite || n >= 3, errc::non_integrable, "the untruncated singular integral needs at least 3 variables");

  const double U = psi.support_radius();
  const double scale = std::pow(C, double(n) - 2);
  const double t0 = n_target / (C * C);
  // cos form of the kernel makes the x-integral symmetric, so J(F, n) = J(-F, -n)
  bool flip = f.pos_eigen_count() == 0;
  const double t = flip ? -t0 : t0;
  auto fr = detail::make_frame(f.eigenvalues(), U, flip);
  const auto& gl = gauss_legendre(16);
  const double sd = static_cast<double>(fr.s);

  auto at = [&](double Bp) {
    return detail::frame_sum(fr, U, [&](double rmax, const detail::polar_frame::wnode& wn, double a) {
      double us = t + wn.half_w2;
      double umax = rmax * rmax / 2;
      auto panels = static_cast<std::size_t>(std::ceil(umax * 2 * Bp)) + 4;
      double du = umax / double(panels), acc = 0;
      for (std::size_t p = 0; p < panels; ++p) {
        double lo = std::sqrt(2 * du * double(p)), hi = std::sqrt(2 * du * double(p + 1));
        double c = (lo + hi) / 2, h = (hi - lo) / 2, s = 0;
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
          double rho = c + h * gl.x[i];
          double v = rho * rho / 2 - us;
          double z = 2 * pi * Bp * v;
          double kern = std::abs(z) < 1e-4 ? 2 * Bp * (1 - z * z / 6) : std::sin(z) / (pi * v);
          s += gl.w[i] * psi.radial(std::sqrt(rho * rho * a + wn.b)) * std::pow(rho, sd - 1) * kern;
        }
        acc += s * h;
      }
      return acc;
    });
  };

  if (!infinite) return {scale * at(B * C * C), 0.0, B};

  // error of the truncation decays like B^{-s/2}; stop on two small steps
  double Bp = 16, prev = at(Bp), diff = 0;
  int calm = 0;
  for (int k = 0; k < 12; ++k) {
    Bp *= 2;
    double cur = at(Bp);
    diff = std::abs(cur - prev);
    prev = cur;
    calm = diff * scale <= tol * std::max(1.0, std::abs(cur * scale)) ? calm + 1 : 0;
    if (calm >= 2) return {scale * cur, scale * diff, Bp / (C * C)};
  }
  fail(errc::quadrature_failure, "singular integral did not settle as B grew");
}

// (2 pi)^{n/2} c / (Gamma(n/2) sqrt(det A)) * n^{n/2 - 1}
inline double shell_volume_density(const QuadraticForm& f, double n_target, double c) {
  require(f.positive_definite(), errc::not_positive_definite, "shell volume density needs a positive definite form");
  require(n_target > 0, errc::precondition_violated, "target must be positive");
  double h = static_cast<double>(f.n_vars()) / 2;
  return std::pow(2 * pi, h) * c / (std::tgamma(h) * std::sqrt(double(f.det()))) * std::pow(n_target, h - 1);
}

// upper bound for |sigma_infinity| by positive eigenvalue count
inline double real_factor_bound(const QuadraticForm& f, const BumpProfile& psi, double n_target, double C) {
  const int s = f.pos_eigen_count();
  if (s == 0) return 0;
  const auto& ev = f.eigenvalues();
  const double U = psi.support_radius(), n = double(f.n_vars());
  double prod = 1, negsum = 0;
  for (int j = 0; j < s; ++j) prod *= ev[j];
  for (std::size_t j = s; j < ev.size(); ++j) negsum += ev[j];
  if (s == 1)
    return std::pow(2 * U, n - 1) * std::sqrt(2 * pi) * C / (std::tgamma(0.5) * std::sqrt(ev[0] * n_target)) *
           psi.sup_abs();
  double h = double(s) / 2;
  return std::pow(2 * U, n - s) * std::pow(2 * pi, h) / (std::tgamma(h) * std::sqrt(prod)) *
         std::pow(n_target / (C * C) - U * U / 2 * negsum, h - 1) * psi.sup_abs();
}

}  // namespace circle_forms
