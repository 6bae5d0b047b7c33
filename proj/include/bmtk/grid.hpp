#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmtk/error.hpp"

namespace bmtk {

inline constexpr double pi = std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class Side { plus, minus };

/// f(x) ~ coeff * |x|^exponent for |x| >= cutoff on one side.
struct TailModel {
  double exponent = 0.0;
  double coeff = 0.0;
  double cutoff = 1.0;
  Side side = Side::plus;

  double value(double x) const {
    if (coeff == 0.0) return 0.0;
    return coeff * std::pow(std::abs(x), exponent);
  }
  bool is_zero() const { return coeff == 0.0; }
};

/// Piecewise-linear samples with power-law tails.
class SampledFunction {
 public:
  SampledFunction() = default;

  SampledFunction(std::vector<double> xs, std::vector<double> ys, TailModel plus, TailModel minus,
                  double tail_tolerance = 0.1)
      : xs_(std::move(xs)), ys_(std::move(ys)), plus_(plus), minus_(minus) {
    validate(tail_tolerance);
  }

  /// Zero outside the sampled span.
  static SampledFunction compact(std::vector<double> xs, std::vector<double> ys) {
    TailModel p{0.0, 0.0, 1.0, Side::plus}, m{0.0, 0.0, 1.0, Side::minus};
    if (!xs.empty()) {
      p.cutoff = std::max(std::abs(xs.back()), 1e-300);
      m.cutoff = std::max(std::abs(xs.front()), 1e-300);
    }
    return SampledFunction(std::move(xs), std::move(ys), p, m, inf);
  }

  /// Tails with the given exponents passing exactly through the outermost samples.
  static SampledFunction with_tails(std::vector<double> xs, std::vector<double> ys, double p_plus,
                                    double p_minus) {
    if (xs.size() < 2 || xs.front() >= 0.0 || xs.back() <= 0.0)
      fail(ErrorKind::InvalidInput, "power tails need a grid straddling 0");
    TailModel p{p_plus, ys.back() / std::pow(xs.back(), p_plus), xs.back(), Side::plus};
    TailModel m{p_minus, ys.front() / std::pow(-xs.front(), p_minus), -xs.front(), Side::minus};
    return SampledFunction(std::move(xs), std::move(ys), p, m);
  }

  /// Tails fitted from the two outermost samples on each side.
  /// A log-log slope is used when both samples share a sign and the slope is below
  /// max_exponent; otherwise the tail is the constant through the outer sample.
  static SampledFunction with_fitted_tails(std::vector<double> xs, std::vector<double> ys,
                                           double max_exponent = 0.999) {
    if (xs.size() < 3 || xs.front() >= 0.0 || xs.back() <= 0.0)
      fail(ErrorKind::InvalidInput, "tail fitting needs a grid straddling 0");
    std::size_t n = xs.size();
    auto fit = [&](double x0, double y0, double x1, double y1) {
      // (x1, y1) is the outer sample
      if (y0 != 0.0 && y1 != 0.0 && (y0 > 0) == (y1 > 0) && x0 > 0.0) {
        double p = std::log(y1 / y0) / std::log(x1 / x0);
        if (std::isfinite(p) && p < max_exponent) return p;
      }
      return 0.0;
    };
    double pp = fit(xs[n - 2], ys[n - 2], xs[n - 1], ys[n - 1]);
    double pm = fit(-xs[1], ys[1], -xs[0], ys[0]);
    return with_tails(std::move(xs), std::move(ys), pp, pm);
  }

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const TailModel& tail_plus() const { return plus_; }
  const TailModel& tail_minus() const { return minus_; }
  std::size_t size() const { return xs_.size(); }
  double lo() const { return xs_.front(); }
  double hi() const { return xs_.back(); }

  double operator()(double x) const {
    if (x > xs_.back()) return plus_.value(x);
    if (x < xs_.front()) return minus_.value(x);
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end()) return ys_.back();
    std::size_t k = static_cast<std::size_t>(it - xs_.begin());
    if (k == 0) return ys_.front();
    double x0 = xs_[k - 1], x1 = xs_[k];
    double w = (x - x0) / (x1 - x0);
    return ys_[k - 1] + w * (ys_[k] - ys_[k - 1]);
  }

  std::vector<double> operator()(const std::vector<double>& at) const {
    std::vector<double> out(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) out[i] = (*this)(at[i]);
    return out;
  }

  /// Same grid, values and tail coefficients multiplied by a.
  SampledFunction scaled(double a) const {
    SampledFunction r = *this;
    for (double& y : r.ys_) y *= a;
    r.plus_.coeff *= a;
    r.minus_.coeff *= a;
    return r;
  }

 private:
  void validate(double tol) const {
    if (xs_.size() != ys_.size()) fail(ErrorKind::InvalidInput, "xs and ys differ in length");
    if (xs_.size() < 2) fail(ErrorKind::InvalidInput, "need at least two samples");
    for (std::size_t i = 1; i < xs_.size(); ++i)
      if (!(xs_[i] > xs_[i - 1])) fail(ErrorKind::InvalidInput, "xs must be strictly increasing");
    for (double y : ys_)
      if (!std::isfinite(y)) fail(ErrorKind::InvalidInput, "non-finite sample");
    if (!plus_.is_zero() && xs_.back() <= 0.0)
      fail(ErrorKind::InvalidInput, "nonzero plus tail needs a positive right end");
    if (!minus_.is_zero() && xs_.front() >= 0.0)
      fail(ErrorKind::InvalidInput, "nonzero minus tail needs a negative left end");
    if (std::isfinite(tol)) {
      auto check = [&](const TailModel& t, double x, double y) {
        double m = t.value(x);
        double scale = std::max({std::abs(m), std::abs(y), 1e-12});
        if (std::abs(m - y) > tol * scale)
          fail(ErrorKind::InvalidInput, "tail model inconsistent with the outermost sample");
      };
      check(plus_, xs_.back(), ys_.back());
      check(minus_, xs_.front(), ys_.front());
    }
  }

  std::vector<double> xs_, ys_;
  TailModel plus_, minus_;
};

/// Continuous phase with |x|^(kappa+1) tails.
struct PhaseFunction {
  SampledFunction base;
  double kappa = 0.0;
  double slope_plus = 0.0;   // gamma'(x) ~ slope_plus * x^kappa,    x -> +inf
  double slope_minus = 0.0;  // gamma'(x) ~ slope_minus * |x|^kappa, x -> -inf

  static PhaseFunction from_samples(std::vector<double> xs, std::vector<double> ys, double kappa) {
    if (kappa < 0.0) fail(ErrorKind::InvalidInput, "kappa must be nonnegative");
    PhaseFunction g;
    g.base = SampledFunction::with_tails(std::move(xs), std::move(ys), kappa + 1.0, kappa + 1.0);
    g.kappa = kappa;
    g.slope_plus = g.base.tail_plus().coeff * (kappa + 1.0);
    g.slope_minus = -g.base.tail_minus().coeff * (kappa + 1.0);
    return g;
  }

  template <class F>
  static PhaseFunction sample(const std::vector<double>& xs, F&& f, double kappa) {
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
    return from_samples(xs, std::move(ys), kappa);
  }

  double operator()(double x) const { return base(x); }
  const std::vector<double>& xs() const { return base.xs(); }
  const std::vector<double>& ys() const { return base.ys(); }
};

inline std::vector<double> merge_grids(std::vector<double> a, const std::vector<double>& b);

/// a*f + b*g sampled on the union of both grids; tails refitted with the larger kappa.
inline PhaseFunction combine(const PhaseFunction& f, double a, const PhaseFunction& g, double b) {
  auto xs = merge_grids(f.xs(), g.xs());
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = a * f(xs[i]) + b * g(xs[i]);
  return PhaseFunction::from_samples(std::move(xs), std::move(ys), std::max(f.kappa, g.kappa));
}

// ---------------------------------------------------------------- grids

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

/// Uniform core [-core, core] with spacing h, then geometric cells of ratio q out to +-outer.
inline std::vector<double> core_geometric_grid(double core, double h, double outer, double q) {
  std::size_t n = static_cast<std::size_t>(std::llround(2.0 * core / h)) + 1;
  std::vector<double> pos;
  double x = core, step = h;
  while (x < outer) {
    step *= q;
    x = std::min(x + step, outer);
    pos.push_back(x);
  }
  std::vector<double> g;
  g.reserve(n + 2 * pos.size());
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) g.push_back(-*it);
  auto c = linspace(-core, core, n);
  g.insert(g.end(), c.begin(), c.end());
  g.insert(g.end(), pos.begin(), pos.end());
  return g;
}

/// Symmetric grid geometric away from 0: +-[inner, outer] with per-side count n, plus 0.
inline std::vector<double> symmetric_geometric_grid(double inner, double outer, std::size_t n) {
  std::vector<double> g;
  g.reserve(2 * n + 1);
  double r = std::log(outer / inner) / static_cast<double>(n - 1);
  for (std::size_t i = n; i-- > 0;) g.push_back(-inner * std::exp(r * static_cast<double>(i)));
  g.push_back(0.0);
  for (std::size_t i = 0; i < n; ++i) g.push_back(inner * std::exp(r * static_cast<double>(i)));
  g.front() = -outer;
  g.back() = outer;
  return g;
}

/// Sorted union with near-duplicates (relative 1e-14) removed.
inline std::vector<double> merge_grids(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  std::vector<double> out;
  out.reserve(a.size());
  for (double x : a) {
    if (!out.empty() && std::abs(x - out.back()) <= 1e-14 * std::max(1.0, std::abs(x))) continue;
    out.push_back(x);
  }
  return out;
}

template <class F>
SampledFunction sample_compact(const std::vector<double>& xs, F&& f) {
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
  return SampledFunction::compact(xs, std::move(ys));
}

// ---------------------------------------------------------------- integration

namespace detail {

/// int_u^v dx/(1+x^2) and int_u^v (x-u)/(1+x^2) dx.
inline void poisson_cell_moments(double u, double v, double& m0, double& m1u) {
  m0 = std::atan2(v - u, 1.0 + u * v);
  double m1 = 0.5 * std::log1p((v - u) * (v + u) / (1.0 + u * u));
  m1u = m1 - u * m0;
}

/// int_X^inf x^p/(1+x^2) dx for X >= 2 by the alternating expansion in 1/x^2.
inline double poisson_power_series(double X, double p) {
  double sum = 0.0, term_pow = std::pow(X, p - 1.0), inv2 = 1.0 / (X * X), sgn = 1.0;
  for (int k = 0; k < 200; ++k) {
    double t = sgn * term_pow / (2.0 * k + 1.0 - p);
    sum += t;
    if (std::abs(t) <= 1e-17 * std::abs(sum)) break;
    term_pow *= inv2;
    sgn = -sgn;
  }
  return sum;
}

inline double power_integral(double a, double b, double k) {
  // int_a^b x^k dx, 0 < a <= b <= inf
  if (a == b) return 0.0;
  if (k == -1.0) {
    if (std::isinf(b)) return inf;
    return std::log(b / a);
  }
  if (std::isinf(b)) return k < -1.0 ? -std::pow(a, k + 1.0) / (k + 1.0) : inf;
  return (std::pow(b, k + 1.0) - std::pow(a, k + 1.0)) / (k + 1.0);
}

}  // namespace detail

/// int_a^b x^p/(1+x^2) dx for 0 < a < b <= inf; requires p < 1 when b is infinite.
inline double poisson_power_integral(double a, double b, double p) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(a > 0.0) || !(b > a)) return 0.0;
  if (std::isinf(b)) {
    if (p >= 1.0) fail(ErrorKind::DivergentTail, "power tail with exponent >= 1 is not Poisson-integrable");
    if (a >= 2.0) return detail::poisson_power_series(a, p);
    // x^p/(1+x^2) = x^p - x^(p+2)/(1+x^2) removes the endpoint singularity for p < 0
    double smooth = gauss_kronrod<double, 61>::integrate(
        [p](double x) { return std::pow(x, p + 2.0) / (1.0 + x * x); }, a, 2.0, 20, 1e-14);
    return detail::power_integral(a, 2.0, p) - smooth + detail::poisson_power_series(2.0, p);
  }
  if (p == 0.0) return std::atan2(b - a, 1.0 + a * b);
  return gauss_kronrod<double, 61>::integrate([p](double x) { return std::pow(x, p) / (1.0 + x * x); }, a,
                                              b, 20, 1e-14);
}

enum class Weight { poisson, bm_l1 };

namespace detail {

/// int over [u,v] of (y0 + s (x-u)) against the weight, sign of the linear piece not altered.
inline double linear_piece_integral(double u, double v, double y0, double s, Weight w, double kappa) {
  if (!(v > u)) return 0.0;
  if (w == Weight::poisson) {
    double m0, m1u;
    poisson_cell_moments(u, v, m0, m1u);
    return y0 * m0 + s * m1u;
  }
  // bm_l1: weight 1 on (-1,1), |x|^(-2-kappa) outside; caller splits at +-1
  double mid = 0.5 * (u + v);
  if (std::abs(mid) < 1.0) return (v - u) * (y0 + 0.5 * s * (v - u));
  double q = -2.0 - kappa;
  if (u >= 0.0) {
    // (y0 - s u) int x^q + s int x^(q+1)
    return (y0 - s * u) * power_integral(u, v, q) + s * power_integral(u, v, q + 1.0);
  }
  // reflect x -> -x: x in [u,v] maps to t in [-v,-u], f = y0 + s(-t-u)
  return (y0 - s * u) * power_integral(-v, -u, q) - s * power_integral(-v, -u, q + 1.0);
}

inline double tail_piece_integral(const TailModel& t, double a, double b, Weight w, double kappa, bool absval) {
  // a < b on one side of 0, |x| >= cutoff region; returns int of the tail over (a,b)
  if (t.is_zero() || !(b > a)) return 0.0;
  double c = absval ? std::abs(t.coeff) : t.coeff;
  double lo = a >= 0.0 ? a : -b, hi = a >= 0.0 ? b : -a;  // |x| range
  if (w == Weight::poisson) {
    if (std::isinf(hi) && t.exponent >= 1.0)
      fail(ErrorKind::DivergentTail, "tail exponent >= 1 is not Poisson-integrable");
    return c * poisson_power_integral(lo, hi, t.exponent);
  }
  double total = 0.0;
  if (lo < 1.0) total += c * power_integral(lo, std::min(hi, 1.0), t.exponent);
  if (hi > 1.0) {
    double k = t.exponent - 2.0 - kappa;
    if (std::isinf(hi) && k >= -1.0) fail(ErrorKind::DivergentTail, "tail too heavy for the weighted L1 norm");
    total += c * power_integral(std::max(lo, 1.0), hi, k);
  }
  return total;
}

inline double integrate_impl(const SampledFunction& f, double a, double b, Weight w, double kappa, bool absval) {
  if (!(b > a)) return 0.0;
  const auto& xs = f.xs();
  const auto& ys = f.ys();
  double total = 0.0;
  // tails
  if (a < xs.front()) total += tail_piece_integral(f.tail_minus(), a, std::min(b, xs.front()), w, kappa, absval);
  if (b > xs.back()) total += tail_piece_integral(f.tail_plus(), std::max(a, xs.back()), b, w, kappa, absval);
  // core cells
  double lo = std::max(a, xs.front()), hi = std::min(b, xs.back());
  if (!(hi > lo)) return total;
  std::size_t k0 = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), lo) - xs.begin());
  if (k0 > 0) --k0;
  double breaks[4];
  for (std::size_t k = k0; k + 1 < xs.size() && xs[k] < hi; ++k) {
    double u = std::max(xs[k], lo), v = std::min(xs[k + 1], hi);
    if (!(v > u)) continue;
    double s = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    double yu = ys[k] + s * (u - xs[k]);
    double yv = ys[k] + s * (v - xs[k]);
    int nb = 0;
    breaks[nb++] = u;
    if (absval && ((yu > 0.0 && yv < 0.0) || (yu < 0.0 && yv > 0.0))) breaks[nb++] = u + yu / (yu - yv) * (v - u);
    if (w == Weight::bm_l1) {
      for (double e : {-1.0, 1.0})
        if (e > u && e < v) breaks[nb++] = e;
    }
    breaks[nb++] = v;
    std::sort(breaks, breaks + nb);
    for (int i = 0; i + 1 < nb; ++i) {
      double p = breaks[i], q = breaks[i + 1];
      if (!(q > p)) continue;
      double yp = ys[k] + s * (p - xs[k]);
      double piece = linear_piece_integral(p, q, yp, s, w, kappa);
      if (absval) {
        double ymid = ys[k] + s * (0.5 * (p + q) - xs[k]);
        if (ymid < 0.0) piece = -piece;
      }
      total += piece;
    }
  }
  return total;
}

}  // namespace detail

/// int f dPi over the real line, dPi = dx/(1+x^2).
inline double pi_integral(const SampledFunction& f) { return detail::integrate_impl(f, -inf, inf, Weight::poisson, 0.0, false); }

/// int_a^b f dPi.
inline double pi_integral(const SampledFunction& f, double a, double b) {
  return detail::integrate_impl(f, a, b, Weight::poisson, 0.0, false);
}

inline double pi_integral_abs(const SampledFunction& f, double a = -inf, double b = inf) {
  return detail::integrate_impl(f, a, b, Weight::poisson, 0.0, true);
}

/// int_{|x|>=1} |f| |x|^(-2-kappa) dx + int_{|x|<1} |f| dx.
inline double weighted_l1_norm(const SampledFunction& f, double kappa) {
  return detail::integrate_impl(f, -inf, inf, Weight::bm_l1, kappa, true);
}

/// Pi((a,b)).
inline double poisson_measure(double a, double b) {
  if (!(b > a)) return 0.0;
  if (std::isinf(a) || std::isinf(b)) return std::atan(b) - std::atan(a);
  return std::atan2(b - a, 1.0 + a * b);
}

}  // namespace bmtk
