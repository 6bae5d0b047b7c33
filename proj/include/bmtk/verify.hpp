#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmtk/density.hpp"
#include "bmtk/error.hpp"
#include "bmtk/grid.hpp"
#include "bmtk/hilbert.hpp"

namespace bmtk {

enum class ProbeVerdict { Decaying, Stalling, Undetermined };

constexpr std::string_view to_string(ProbeVerdict v) {
  switch (v) {
    case ProbeVerdict::Decaying: return "Decaying";
    case ProbeVerdict::Stalling: return "Stalling";
    case ProbeVerdict::Undetermined: return "Undetermined";
  }
  return "?";
}

struct ProbeThresholds {
  double decay_floor = 1e-3;
  double stall_floor = 5e-2;
  double condition_limit = 1e14;
};

struct ProbeReport {
  double parameter = 0.0;
  std::vector<std::size_t> sizes;
  std::vector<double> values;
  ProbeVerdict verdict = ProbeVerdict::Undetermined;
  double fitted_slope = 0.0;           // d log value / d log N over the nonzero sizes
  std::vector<double> conditions;      // Gram condition numbers, when applicable
  bool ill_conditioned = false;
};

namespace detail {

inline void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) fail(ErrorKind::InvalidInput, "sizes must not be empty");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) fail(ErrorKind::InvalidInput, "sizes must be strictly increasing");
}

inline double log_slope(const std::vector<std::size_t>& n, const std::vector<double>& v) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n.size(); ++i)
    if (n[i] > 0 && v[i] > 0.0) {
      x.push_back(std::log(static_cast<double>(n[i])));
      y.push_back(std::log(v[i]));
    }
  if (x.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline ProbeVerdict classify_probe(const ProbeReport& r, const ProbeThresholds& t) {
  double last = r.values.back();
  if (last < t.decay_floor && r.fitted_slope < 0.0) return ProbeVerdict::Decaying;
  if (last >= t.stall_floor) return ProbeVerdict::Stalling;
  return ProbeVerdict::Undetermined;
}

/// int_u^v (y0 + s (x - u)) e^{-i w x} dx.
inline cplx linear_exp_integral(double u, double v, double y0, double s, cplx w) {
  double l = v - u;
  if (std::abs(w) * l < 1e-3) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto re = GK::integrate([&](double x) { return ((y0 + s * (x - u)) * std::exp(cplx(0, -1) * w * x)).real(); }, u, v);
    auto im = GK::integrate([&](double x) { return ((y0 + s * (x - u)) * std::exp(cplx(0, -1) * w * x)).imag(); }, u, v);
    return {re, im};
  }
  const cplx mi(0.0, -1.0);
  auto F = [&](double x) {
    cplx E = std::exp(mi * w * x);
    return (y0 + s * (x - u)) * E / (mi * w) - s * E / ((mi * w) * (mi * w));
  };
  return F(v) - F(u);
}

/// int_{-a}^{a} e^{i z x} dx.
inline cplx exp_moment(cplx z, double a) {
  if (std::abs(z) * a < 1e-8) return 2.0 * a;
  return 2.0 * std::sin(z * a) / z;
}

}  // namespace detail

/// Distance in L2(-a, a) from target to the span of e^{i lambda x} over the first N points of lambda (by modulus).
inline ProbeReport gram_completeness_probe(const PointSequence& lambda, double a, const std::vector<std::size_t>& sizes,
                                           const SampledFunction& target, const ProbeThresholds& th = {}) {
  if (!(a > 0.0)) fail(ErrorKind::InvalidInput, "a must be positive");
  detail::check_sizes(sizes);
  std::vector<cplx> pts;
  for (std::size_t i = 0; i < lambda.points.size(); ++i) {
    if (lambda.multiplicity[i] != 1) fail(ErrorKind::InvalidInput, "the probe takes simple points only");
    pts.push_back(lambda.points[i]);
  }
  std::stable_sort(pts.begin(), pts.end(), [](cplx p, cplx q) {
    if (std::abs(p) != std::abs(q)) return std::abs(p) < std::abs(q);
    return p.real() < q.real();
  });
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i] == pts[i - 1]) fail(ErrorKind::InvalidInput, "repeated point; pass it once with its multiplicity");
  if (sizes.back() > pts.size()) fail(ErrorKind::InvalidInput, "sizes exceed the number of points");

  // target restricted to (-a, a), cell by cell
  auto xs = merge_grids(target.xs(), {-a, a});
  std::vector<double> cx;
  for (double x : xs)
    if (x >= -a && x <= a) cx.push_back(x);
  if (cx.front() > -a) cx.insert(cx.begin(), -a);
  if (cx.back() < a) cx.push_back(a);
  auto cy = target(cx);
  double norm2 = 0.0;
  for (std::size_t c = 0; c + 1 < cx.size(); ++c) {
    double l = cx[c + 1] - cx[c];
    norm2 += l * (cy[c] * cy[c] + cy[c] * cy[c + 1] + cy[c + 1] * cy[c + 1]) / 3.0;
  }
  std::size_t M = sizes.back();
  Eigen::VectorXcd b(static_cast<Eigen::Index>(M));
  for (std::size_t j = 0; j < M; ++j) {
    cplx acc = 0.0;
    for (std::size_t c = 0; c + 1 < cx.size(); ++c)
      acc += detail::linear_exp_integral(cx[c], cx[c + 1], cy[c], (cy[c + 1] - cy[c]) / (cx[c + 1] - cx[c]), std::conj(pts[j]));
    b(static_cast<Eigen::Index>(j)) = acc;  // <f, e_j>
  }
  Eigen::MatrixXcd G(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t k = 0; k < M; ++k)
      G(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = detail::exp_moment(pts[k] - std::conj(pts[j]), a);

  ProbeReport r;
  r.parameter = a;
  r.sizes = sizes;
  for (std::size_t N : sizes) {
    if (N == 0) {
      r.values.push_back(std::sqrt(norm2));
      r.conditions.push_back(1.0);
      continue;
    }
    auto n = static_cast<Eigen::Index>(N);
    Eigen::MatrixXcd g = G.topLeftCorner(n, n);
    Eigen::VectorXcd bn = b.head(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
    double cond = lmin > 0.0 ? lmax / lmin : inf;
    r.conditions.push_back(cond);
    if (cond > th.condition_limit) r.ill_conditioned = true;
    double tau = 1e-12 * g.trace().real();
    Eigen::MatrixXcd reg = g + tau * Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXcd c = reg.ldlt().solve(bn);
    // |f - sum c_k e_k|^2 = |f|^2 - 2 Re c^H b + c^H G c
    double res2 = norm2 - 2.0 * c.dot(bn).real() + c.dot(g * c).real();
    r.values.push_back(std::sqrt(std::max(res2, 0.0)));
  }
  r.fitted_slope = detail::log_slope(r.sizes, r.values);
  r.verdict = detail::classify_probe(r, th);
  return r;
}

/// Triangle 1 - |x|/a on (-a, a), the default probe target.
inline SampledFunction triangle_target(double a) { return SampledFunction::compact({-a, 0.0, a}, {0.0, 1.0, 0.0}); }

namespace detail {

/// c_m = (1/2L) int_{-L}^{L} e^{i gamma(x)} e^{-i pi m x / L} dx for the piecewise-linear gamma.
inline cplx periodized_coefficient(const std::vector<double>& x, const std::vector<double>& g, long m) {
  double L = 0.5 * (x.back() - x.front()), mid = 0.5 * (x.back() + x.front());
  double w = pi * static_cast<double>(m) / L;
  cplx acc = 0.0;
  const cplx I(0.0, 1.0);
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    double u = x[c] - mid, v = x[c + 1] - mid;
    double s = (g[c + 1] - g[c]) / (v - u);
    // integrand exp(i (g_c - s u)) exp(i (s - w) t)
    double k = s - w;
    cplx base = std::exp(I * (g[c] - s * u));
    if (std::abs(k) * (v - u) < 1e-9) acc += base * (v - u);
    else acc += base * (std::exp(I * k * v) - std::exp(I * k * u)) / (I * k);
  }
  return acc / (2.0 * L);
}

}  // namespace detail

/// Minimal singular values of M x N truncations of the Toeplitz matrix (c_{j-k}) of the symbol e^{i gamma} periodized
/// on the grid span; M = row_factor * max N is fixed, so the values are nonincreasing in N.
inline ProbeReport toeplitz_kernel_probe(const PhaseFunction& gamma, const std::vector<std::size_t>& sizes, const ProbeThresholds& th = {},
                                         std::size_t row_factor = 4) {
  detail::check_sizes(sizes);
  if (sizes.front() == 0) fail(ErrorKind::InvalidInput, "truncation sizes must be positive");
  std::size_t N = sizes.back(), M = row_factor * N;
  const auto& x = gamma.xs();
  const auto& g = gamma.ys();
  auto lo = -static_cast<long>(N), hi = static_cast<long>(M);
  std::vector<cplx> c(static_cast<std::size_t>(hi - lo + 1));
  for (long m = lo; m <= hi; ++m) c[static_cast<std::size_t>(m - lo)] = detail::periodized_coefficient(x, g, m);
  Eigen::MatrixXcd T(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t k = 0; k < N; ++k)
      T(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = c[static_cast<std::size_t>(static_cast<long>(j) - static_cast<long>(k) - lo)];
  ProbeReport r;
  r.sizes = sizes;
  for (std::size_t n : sizes) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(T.leftCols(static_cast<Eigen::Index>(n)));
    r.values.push_back(svd.singularValues().minCoeff());
  }
  r.fitted_slope = detail::log_slope(r.sizes, r.values);
  r.verdict = detail::classify_probe(r, th);
  return r;
}

// ---------------------------------------------------------------- decay harness

enum class DecayVariant { Kolmogorov, Ko1, Weighted };
enum class DecayVerdict { Decreasing, NotDecreasing, HypothesisFailed };

constexpr std::string_view to_string(DecayVerdict v) {
  switch (v) {
    case DecayVerdict::Decreasing: return "Decreasing";
    case DecayVerdict::NotDecreasing: return "NotDecreasing";
    case DecayVerdict::HypothesisFailed: return "HypothesisFailed";
  }
  return "?";
}

struct DecayOptions {
  DecayVariant variant = DecayVariant::Kolmogorov;
  double a = 0.0;         // coefficient of x^{-1} h~ in the Ko1 variant
  double constant = 1.0;  // hypothesis h~' (+ a h~/x) <= constant x^kappa
  double x_min = 2.0;     // hypothesis and profile start here
  double window = 0.0;    // 0: half the grid reach on the right
};

struct DecayReport {
  std::vector<double> X;        // doubling thresholds
  std::vector<double> profile;  // max over X <= x <= window of |h~(x)|/x^(kappa+1)
  std::vector<double> shells;   // the same maximum over [X, 2X)
  double hypothesis_max = 0.0;  // max of the hypothesis left side divided by x^kappa
  DecayVerdict verdict = DecayVerdict::Decreasing;
};

/// Profile of |h~|/x^(kappa+1) on the right half-line once the one-sided Lipschitz hypothesis is confirmed on the window.
inline DecayReport lemma_decay_harness(const SampledFunction& h, double kappa, const DecayOptions& opt = {}) {
  if (opt.variant == DecayVariant::Weighted) {
    if (!(kappa >= -1.0 && kappa < 0.0)) fail(ErrorKind::InvalidInput, "the weighted variant needs kappa in [-1, 0)");
    weighted_l1_norm(h, kappa);  // DivergentTail when h is outside L1(|x|^(-2-kappa))
  } else {
    if (kappa < 0.0) fail(ErrorKind::InvalidInput, "kappa must be nonnegative");
    pi_integral_abs(h);
  }
  double W = opt.window > 0.0 ? opt.window : 0.5 * h.hi();
  if (!(W > 2.0 * opt.x_min)) fail(ErrorKind::InvalidInput, "window too small for a doubling profile");
  auto ht = hilbert_transform(h).values;
  const auto& x = ht.xs();
  const auto& v = ht.ys();
  DecayReport r;
  // hypothesis on cell averages of h~'
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    if (x[c] < opt.x_min || x[c + 1] > W) continue;
    double mid = 0.5 * (x[c] + x[c + 1]);
    double d = (v[c + 1] - v[c]) / (x[c + 1] - x[c]);
    if (opt.variant == DecayVariant::Ko1) d += opt.a * 0.5 * (v[c] + v[c + 1]) / mid;
    r.hypothesis_max = std::max(r.hypothesis_max, d / std::pow(mid, kappa));
  }
  for (double X = opt.x_min; X <= 0.5 * W; X *= 2.0) {
    double tail = 0.0, shell = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < X || x[i] > W) continue;
      double q = std::abs(v[i]) / std::pow(x[i], kappa + 1.0);
      tail = std::max(tail, q);
      if (x[i] < 2.0 * X) shell = std::max(shell, q);
    }
    r.X.push_back(X);
    r.profile.push_back(tail);
    r.shells.push_back(shell);
  }
  if (r.hypothesis_max > opt.constant) {
    r.verdict = DecayVerdict::HypothesisFailed;
    return r;
  }
  bool monotone = true;
  for (std::size_t k = 1; k < r.profile.size(); ++k)
    if (r.profile[k] > r.profile[k - 1] * (1.0 + 1e-12)) monotone = false;
  bool vanishing = r.profile.back() == 0.0 || r.profile.back() < r.profile.front();
  r.verdict = monotone && vanishing ? DecayVerdict::Decreasing : DecayVerdict::NotDecreasing;
  return r;
}

// ---------------------------------------------------------------- sub-exponential example

struct SubexpReport {
  std::size_t points = 0;
  double max_mismatch = 0.0;  // max over the grid of |arg(US) + 2 arg f| mod 2 pi
  double at_plus_one = 0.0;   // gamma(1) + sigma(1)
  double at_minus_one = 0.0;  // gamma(-1) + sigma(-1)
};

/// arg(US) = gamma + sigma against -2 arg f for f = exp{-(1 + i) z^{1/4}}, on |x| in [0.1, 100].
inline SubexpReport subexp_counterexample_check(std::size_t resolution = 2000) {
  if (resolution < 2) fail(ErrorKind::InvalidInput, "resolution must be at least 2");
  auto sigma = [](double x) { return 2.0 * (x < 0 ? -1.0 : 1.0) * std::pow(std::abs(x), 0.25); };
  auto gamma = [](double x) { return x < 0 ? 2.0 * (1.0 + std::sqrt(2.0)) * std::pow(-x, 0.25) : 0.0; };
  auto arg_f = [](double x) {
    // boundary value from the upper half-plane: z^{1/4} on the upper side of the cut
    cplx r = std::pow(cplx(x, +0.0), 0.25);
    return (-(cplx(1.0, 1.0)) * r).imag();
  };
  SubexpReport rep;
  double step = std::log(1000.0) / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    double t = 0.1 * std::exp(step * static_cast<double>(i));
    for (double x : {t, -t}) {
      double d = std::remainder(gamma(x) + sigma(x) + 2.0 * arg_f(x), 2.0 * pi);
      rep.max_mismatch = std::max(rep.max_mismatch, std::abs(d));
      ++rep.points;
    }
  }
  rep.at_plus_one = gamma(1.0) + sigma(1.0);
  rep.at_minus_one = gamma(-1.0) + sigma(-1.0);
  return rep;
}

}  // namespace bmtk
