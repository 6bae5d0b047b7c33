#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <variant>
#include <vector>

#include "bmtk/density.hpp"
#include "bmtk/error.hpp"
#include "bmtk/grid.hpp"

namespace bmtk {

struct BlaschkeProduct {
  std::vector<cplx> zeros;  // open upper half-plane, repeated by multiplicity
};

/// Theta = (W - 1)/(W + 1), W = -i e^{-pi c} prod sqrt((1 + a^2)/(1 + b^2)) (b - z)/(a - z).
struct KreinShift {
  std::vector<double> A, B;  // a_1 < b_1 < a_2 < ...
  double c = 0.0;
  double log_scale = 0.0;  // -pi c + sum log sqrt((1 + a^2)/(1 + b^2))
};

struct PhasePrescribed {
  PhaseFunction theta;  // boundary values only
};

using InnerFunctionModel = std::variant<BlaschkeProduct, KreinShift, PhasePrescribed>;

// ---------------------------------------------------------------- Blaschke products

inline BlaschkeProduct blaschke_product(const PointSequence& zeros) {
  BlaschkeProduct b;
  for (std::size_t i = 0; i < zeros.points.size(); ++i) {
    cplx l = zeros.points[i];
    if (l.imag() == 0.0) fail(ErrorKind::ZeroOnBoundary, "a zero lies on the real line");
    if (l.imag() < 0.0) fail(ErrorKind::InvalidInput, "zeros must lie in the upper half-plane");
    for (std::size_t m = 0; m < zeros.multiplicity[i]; ++m) b.zeros.push_back(l);
  }
  return b;
}

/// prod (conj(l)/l) (z - l)/(z - conj(l)); each factor is 1 at 0, and l = i gives (i - z)/(i + z).
inline cplx blaschke_eval(const BlaschkeProduct& b, cplx z) {
  if (z.imag() < 0.0) fail(ErrorKind::InvalidInput, "evaluation point below the real line");
  cplx p = 1.0;
  for (cplx l : b.zeros) p *= (std::conj(l) / l) * (z - l) / (z - std::conj(l));
  return p;
}

inline cplx blaschke_eval(const PointSequence& zeros, cplx z) { return blaschke_eval(blaschke_product(zeros), z); }

// ---------------------------------------------------------------- Krein shift

inline KreinShift krein_shift(std::vector<double> A, std::vector<double> B, double c = 0.0) {
  if (A.size() != B.size() || A.empty()) fail(ErrorKind::NotIntertwining, "A and B must have the same positive size");
  for (std::size_t n = 0; n < A.size(); ++n) {
    if (!(A[n] < B[n]) || (n + 1 < A.size() && !(B[n] < A[n + 1])))
      fail(ErrorKind::NotIntertwining, "need a_1 < b_1 < a_2 < b_2 < ...");
  }
  KreinShift k{std::move(A), std::move(B), c, -pi * c};
  for (std::size_t n = 0; n < k.A.size(); ++n)
    k.log_scale += 0.5 * (std::log1p(k.A[n] * k.A[n]) - std::log1p(k.B[n] * k.B[n]));
  return k;
}

namespace detail {

/// log W up to multiples of 2 pi i.
inline cplx krein_log_w(const KreinShift& k, cplx z) {
  cplx L(k.log_scale, -0.5 * pi);
  for (std::size_t n = 0; n < k.A.size(); ++n) L += std::log((k.B[n] - z) / (k.A[n] - z));
  return L;
}

/// On the real line W = -i R(x); returns log|R|, sign R and S = (log R)'.
struct RealW {
  double log_abs = 0.0;
  double sign = 1.0;
  double dlog = 0.0;
};

inline RealW krein_real_w(const KreinShift& k, double x) {
  RealW r;
  r.log_abs = k.log_scale;
  for (std::size_t n = 0; n < k.A.size(); ++n) {
    double p = k.B[n] - x, q = k.A[n] - x;
    r.log_abs += std::log(std::abs(p / q));
    if ((p < 0.0) != (q < 0.0)) r.sign = -r.sign;
    r.dlog += 1.0 / q - 1.0 / p;
  }
  return r;
}

inline bool is_level_point(const KreinShift& k, double x) {
  return std::binary_search(k.A.begin(), k.A.end(), x) || std::binary_search(k.B.begin(), k.B.end(), x);
}

}  // namespace detail

inline cplx krein_eval(const KreinShift& k, cplx z) {
  if (z.imag() < 0.0) fail(ErrorKind::InvalidInput, "evaluation point below the real line");
  if (z.imag() == 0.0) {
    if (std::binary_search(k.A.begin(), k.A.end(), z.real())) return 1.0;
    if (std::binary_search(k.B.begin(), k.B.end(), z.real())) return -1.0;
  }
  return std::tanh(0.5 * detail::krein_log_w(k, z));
}

/// Continuous argument on the real line, normalised by theta(a_n) = 2 pi n with n counted from a_1 = 2 pi.
inline double krein_argument(const KreinShift& k, double x) {
  // Theta = -(1 + iR)/(1 - iR) = -exp(2i atan R); atan R drops by pi across every a_n
  auto passed = static_cast<double>(std::upper_bound(k.A.begin(), k.A.end(), x) - k.A.begin());
  if (std::binary_search(k.A.begin(), k.A.end(), x)) return 2.0 * pi * passed;
  auto w = detail::krein_real_w(k, x);
  double R = w.sign * std::exp(std::min(w.log_abs, 700.0));
  return pi + 2.0 * std::atan(R) + 2.0 * pi * passed;
}

/// theta'(x) = 2 R R'/(R (1 + R^2)) written as S sign(R) / cosh(log|R|).
inline double krein_argument_derivative(const KreinShift& k, double x) {
  if (detail::is_level_point(k, x)) fail(ErrorKind::AtLevelPoint, "theta' is requested at a level point");
  auto w = detail::krein_real_w(k, x);
  return w.sign * w.dlog / std::cosh(w.log_abs);
}

inline cplx evaluate(const InnerFunctionModel& m, cplx z) {
  if (const auto* b = std::get_if<BlaschkeProduct>(&m)) return blaschke_eval(*b, z);
  if (const auto* k = std::get_if<KreinShift>(&m)) return krein_eval(*k, z);
  const auto& p = std::get<PhasePrescribed>(m);
  if (z.imag() != 0.0) fail(ErrorKind::InvalidInput, "a prescribed phase is known on the real line only");
  return std::polar(1.0, p.theta(z.real()));
}

/// Limit of Theta(x0 + s t) as t -> 0+, from offsets t, t/2, ..., t/16 by Richardson steps.
inline cplx boundary_limit(const InnerFunctionModel& m, double x0, double offset, bool from_right = true) {
  double s = from_right ? 1.0 : -1.0;
  constexpr int levels = 5;
  std::array<cplx, levels> T;
  for (int i = 0; i < levels; ++i) T[static_cast<std::size_t>(i)] = evaluate(m, x0 + s * offset / std::ldexp(1.0, i));
  for (int j = 1; j < levels; ++j) {
    double f = std::ldexp(1.0, j);
    for (int i = levels - 1; i >= j; --i) {
      auto u = static_cast<std::size_t>(i);
      T[u] = (f * T[u] - T[u - 1]) / (f - 1.0);
    }
  }
  return T[levels - 1];
}

// ---------------------------------------------------------------- phase matching

struct PhaseInner {
  KreinShift model;
  double max_phase_gap = 0.0;  // max |theta - sigma| over the sampled window
  double ratio_min = inf;      // theta'(x) / |x|^kappa over 1 <= |x| <= window
  double ratio_max = 0.0;
  double window = 0.0;
  long first_index = 0;  // sigma(a_1) = 2 pi first_index
};

namespace detail {

/// Points of 1 <= |x| <= W: a log grid plus the midpoints of (a_n, b_n) and (b_n, a_{n+1}) near it.
inline std::vector<double> diagnostic_points(const KreinShift& k, double W, std::size_t n) {
  std::vector<double> xs;
  if (W <= 1.0) return xs;
  double r = std::log(W) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::exp(r * static_cast<double>(i));
    for (double y : {x, -x}) {
      auto j = std::upper_bound(k.A.begin(), k.A.end(), y) - k.A.begin();
      if (j > 0) {
        auto jj = static_cast<std::size_t>(j - 1);
        double lo = k.A[jj], mid = k.B[jj], hi = jj + 1 < k.A.size() ? k.A[jj + 1] : mid + (mid - lo);
        for (double t : {0.5 * (lo + mid), 0.5 * (mid + hi)})
          if (std::abs(t) >= 1.0 && std::abs(t) <= W) xs.push_back(t);
      }
      if (!is_level_point(k, y)) xs.push_back(y);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace detail

/// c with median log|R| = 0 at the centres of the intervals (a_n, b_n), so that W = i cot(z/2) for a full lattice.
inline double balancing_constant(const KreinShift& k, std::size_t samples = 64) {
  std::vector<double> logs;
  std::size_t step = std::max<std::size_t>(1, k.A.size() / samples);
  for (std::size_t n = 0; n < k.A.size(); n += step) logs.push_back(detail::krein_real_w(k, 0.5 * (k.A[n] + k.B[n])).log_abs);
  auto mid = logs.begin() + static_cast<std::ptrdiff_t>(logs.size() / 2);
  std::nth_element(logs.begin(), mid, logs.end());
  return k.c + *mid / pi;
}

/// Krein model with sigma(a_n) = 2 pi n and b_n = (a_n + a_{n+1})/2 inside the grid span of sigma.
inline PhaseInner phase_to_inner(const PhaseFunction& sigma, std::size_t diagnostic_count = 400) {
  const auto& t = sigma.xs();
  const auto& s = sigma.ys();
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (!(s[i + 1] > s[i])) fail(ErrorKind::NotIncreasing, "sigma must be strictly increasing on the grid");
  auto n0 = static_cast<long>(std::ceil(s.front() / (2.0 * pi)));
  auto n1 = static_cast<long>(std::floor(s.back() / (2.0 * pi)));
  std::vector<double> a;
  std::size_t cell = 0;
  for (long n = n0; n <= n1; ++n) {
    double level = 2.0 * pi * static_cast<double>(n);
    while (cell + 2 < s.size() && s[cell + 1] < level) ++cell;
    // sigma is linear on the cell, so the root is exact
    a.push_back(t[cell] + (level - s[cell]) * (t[cell + 1] - t[cell]) / (s[cell + 1] - s[cell]));
  }
  if (a.size() < 2) fail(ErrorKind::InvalidInput, "sigma must cross at least two levels 2 pi n");
  std::vector<double> A(a.begin(), a.end() - 1), B;
  for (std::size_t n = 0; n + 1 < a.size(); ++n) B.push_back(0.5 * (a[n] + a[n + 1]));
  PhaseInner out;
  out.model = krein_shift(std::move(A), std::move(B));
  out.model = krein_shift(out.model.A, out.model.B, balancing_constant(out.model));
  out.first_index = n0;
  // the model is -1/2 outside the span, so theta flattens near its ends
  out.window = 0.5 * std::min(std::abs(a.front()), std::abs(a[a.size() - 2]));
  double shift = 2.0 * pi * static_cast<double>(n0 - 1);
  const auto& K = out.model;
  for (double x : detail::diagnostic_points(K, out.window, diagnostic_count)) {
    if (x < K.A.front() || x > K.A.back()) continue;
    out.max_phase_gap = std::max(out.max_phase_gap, std::abs(krein_argument(K, x) + shift - sigma(x)));
    double r = krein_argument_derivative(K, x) / std::pow(std::abs(x), sigma.kappa);
    out.ratio_min = std::min(out.ratio_min, r);
    out.ratio_max = std::max(out.ratio_max, r);
  }
  return out;
}

// ---------------------------------------------------------------- Clark masses

struct ClarkMasses {
  std::vector<double> alphas, betas;  // mu_1{a_n}, mu_-1{b_n}
  std::vector<double> deltas;         // b_n - a_n
  double alpha_ratio_min = inf, alpha_ratio_max = 0.0;
  double beta_ratio_min = inf, beta_ratio_max = 0.0;
};

namespace detail {

/// lim eps Re F(x0 + i eps) with eps = scale * {1, 1/2, 1/4} * 1e-3 and two Richardson steps.
template <class F>
double point_mass(F&& f, double x0, double scale) {
  double e = 1e-3 * scale;
  double f0 = e * f(cplx(x0, e)).real(), f1 = 0.5 * e * f(cplx(x0, 0.5 * e)).real();
  double f2 = 0.25 * e * f(cplx(x0, 0.25 * e)).real();
  double r0 = 2.0 * f1 - f0, r1 = 2.0 * f2 - f1;
  return (4.0 * r1 - r0) / 3.0;
}

}  // namespace detail

/// Masses of the Clark measures at the level points from the Herglotz function (1 + Theta)/(1 - Theta) = W.
inline ClarkMasses clark_masses(const KreinShift& k, const std::vector<double>& A, const std::vector<double>& B) {
  auto matches = [](const std::vector<double>& have, const std::vector<double>& want) {
    return std::all_of(want.begin(), want.end(), [&](double x) {
      auto it = std::lower_bound(have.begin(), have.end(), x - 1e-12 * std::max(1.0, std::abs(x)));
      return it != have.end() && std::abs(*it - x) <= 1e-12 * std::max(1.0, std::abs(x));
    });
  };
  if (!matches(k.A, A) || !matches(k.B, B)) fail(ErrorKind::LevelSetMismatch, "points are not level points of the model");
  ClarkMasses c;
  auto W = [&](cplx z) { return std::exp(detail::krein_log_w(k, z)); };
  auto invW = [&](cplx z) { return std::exp(-detail::krein_log_w(k, z)); };
  // eps is tied to the local gap so the extrapolation never reaches the next level point
  auto gap = [&](double x) {
    double g = 1.0;
    auto i = std::lower_bound(k.A.begin(), k.A.end(), x) - k.A.begin();
    auto j = std::lower_bound(k.B.begin(), k.B.end(), x) - k.B.begin();
    for (auto idx : {i - 1, i, i + 1})
      if (idx >= 0 && static_cast<std::size_t>(idx) < k.A.size() && k.A[static_cast<std::size_t>(idx)] != x)
        g = std::min(g, std::abs(k.A[static_cast<std::size_t>(idx)] - x));
    for (auto idx : {j - 1, j, j + 1})
      if (idx >= 0 && static_cast<std::size_t>(idx) < k.B.size() && k.B[static_cast<std::size_t>(idx)] != x)
        g = std::min(g, std::abs(k.B[static_cast<std::size_t>(idx)] - x));
    return g;
  };
  for (double a : A) {
    auto n = static_cast<std::size_t>(std::lower_bound(k.A.begin(), k.A.end(), a - 1e-12 * std::max(1.0, std::abs(a))) - k.A.begin());
    double d = k.B[n] - k.A[n];
    double m = detail::point_mass(W, k.A[n], gap(k.A[n]));
    c.alphas.push_back(m);
    c.deltas.push_back(d);
    c.alpha_ratio_min = std::min(c.alpha_ratio_min, m / d);
    c.alpha_ratio_max = std::max(c.alpha_ratio_max, m / d);
  }
  for (double b : B) {
    auto n = static_cast<std::size_t>(std::lower_bound(k.B.begin(), k.B.end(), b - 1e-12 * std::max(1.0, std::abs(b))) - k.B.begin());
    double d = k.B[n] - k.A[n];
    double m = detail::point_mass(invW, k.B[n], gap(k.B[n]));
    c.betas.push_back(m);
    c.beta_ratio_min = std::min(c.beta_ratio_min, m / d);
    c.beta_ratio_max = std::max(c.beta_ratio_max, m / d);
  }
  return c;
}

// ---------------------------------------------------------------- argument derivative

struct ArgDerivative {
  double value = 0.0;      // finite-difference theta'
  double surrogate = 0.0;  // min(sum alpha/(x - a)^2, sum beta/(x - b)^2)
  double step = 0.0;
};

namespace detail {

inline double nearest_level_distance(const InnerFunctionModel& m, double x) {
  if (const auto* k = std::get_if<KreinShift>(&m)) {
    double d = inf;
    for (const auto* v : {&k->A, &k->B}) {
      auto it = std::lower_bound(v->begin(), v->end(), x);
      if (it != v->end()) d = std::min(d, *it - x);
      if (it != v->begin()) d = std::min(d, x - *(it - 1));
    }
    return d;
  }
  return inf;
}

}  // namespace detail

/// Central differences of arg Theta on the real line, the step halved until two estimates agree to 1e-6.
inline ArgDerivative arg_derivative(const InnerFunctionModel& m, double x, const ClarkMasses* masses = nullptr) {
  double d = detail::nearest_level_distance(m, x);
  if (d == 0.0) fail(ErrorKind::AtLevelPoint, "theta' is requested at a level point");
  auto diff = [&](double h) {
    // arg of the ratio is the increment as long as it stays below pi
    return std::arg(evaluate(m, x + h) / evaluate(m, x - h)) / (2.0 * h);
  };
  double h = std::min(0.25 * d, 0.1 * std::max(1.0, std::abs(x)));
  double prev = diff(h);
  ArgDerivative r;
  for (int it = 0; it < 60; ++it) {
    h *= 0.5;
    double cur = diff(h);
    r.value = cur;
    r.step = h;
    if (std::abs(cur - prev) <= 1e-6 * std::abs(cur)) break;
    prev = cur;
  }
  if (masses) {
    const auto& k = std::get<KreinShift>(m);
    double sa = 0.0, sb = 0.0;
    for (std::size_t n = 0; n < masses->alphas.size() && n < k.A.size(); ++n) sa += masses->alphas[n] / ((x - k.A[n]) * (x - k.A[n]));
    for (std::size_t n = 0; n < masses->betas.size() && n < k.B.size(); ++n) sb += masses->betas[n] / ((x - k.B[n]) * (x - k.B[n]));
    r.surrogate = std::min(sa, sb);
  }
  return r;
}

}  // namespace bmtk
