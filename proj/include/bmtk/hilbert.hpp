#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmtk/grid.hpp"

namespace bmtk {

using cplx = std::complex<double>;

struct HalfPlanePoint {
  double x = 0.0;
  double y = 1.0;

  HalfPlanePoint() = default;
  HalfPlanePoint(double x_, double y_) : x(x_), y(y_) {
    if (!(y_ > 0.0)) fail(ErrorKind::InvalidInput, "half-plane point needs y > 0");
  }
  cplx z() const { return {x, y}; }
};

struct HilbertResult {
  SampledFunction values;
  std::vector<std::size_t> low_confidence;  // indices within one cell of the grid ends
};

namespace detail {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// One power-law tail c t^p on [X, inf), seen from the positive side.
struct TailPiece {
  double c = 0.0, p = 0.0, X = 1.0, Y = 2.0;
  double gX = 0.0;
  double comp_XY = 0.0;  // int_X^Y t/(1+t^2) c t^p dt

  bool active() const { return c != 0.0; }

  static TailPiece make(const TailModel& t, double X, double Y) {
    TailPiece r;
    r.c = t.coeff;
    r.p = t.exponent;
    r.X = X;
    r.Y = Y;
    if (!r.active()) return r;
    if (r.p >= 1.0) fail(ErrorKind::DivergentTail, "h is not in L1(Pi): tail exponent >= 1");
    r.gX = r.c * std::pow(X, r.p);
    double c = r.c, p = r.p;
    r.comp_XY = GK::integrate([c, p](double t) { return c * std::pow(t, p + 1.0) / (1.0 + t * t); }, X, Y, 20, 1e-13);
    return r;
  }

  // int_X^Y (g(t) - g(X)) / (x - t) dt for real x <= X
  double smooth_part(double x) const {
    if (p == 0.0) return 0.0;
    auto f = [&](double t) { return (c * std::pow(t, p) - gX) / (x - t); };
    return GK::integrate(f, X, Y, 15, 1e-11);
  }

  // int_Y^inf [1/(x-t) + t/(1+t^2)] c t^p dt, |x| <= Y/2
  double far_series(double x) const {
    double sum = 0.0;
    double r = x / Y, rm = r, yp = std::pow(Y, p);
    for (int m = 1; m < 200; ++m) {
      double t = rm / (m - p);
      sum -= t;
      if (std::abs(t) < 1e-17 * (std::abs(sum) + 1e-300) || rm == 0.0) break;
      rm *= r;
    }
    double inv2 = 1.0 / (Y * Y), q = inv2, sgn = -1.0;
    for (int k = 1; k < 200; ++k) {
      double t = sgn * q / (2.0 * k - p);
      sum += t;
      if (std::abs(t) < 1e-17 * (std::abs(sum) + 1e-300)) break;
      q *= inv2;
      sgn = -sgn;
    }
    return c * yp * sum;
  }

  // full tail contribution to pi*h~(x), without the gX log|x-X| term
  double hilbert_part(double x) const {
    if (!active()) return 0.0;
    return smooth_part(x) - gX * std::log(std::abs(x - Y)) + comp_XY + far_series(x);
  }

  // int_X^inf [1/(t-z) - t/(1+t^2)] c t^p dt including all log terms
  cplx schwarz_part(cplx z) const {
    if (!active()) return 0.0;
    cplx near = 0.0;
    if (p != 0.0) {
      auto f = [&](double t) { return cplx(c * std::pow(t, p) - gX) / (t - z); };
      near = GK::integrate(f, X, Y, 15, 1e-11);
    }
    near += gX * (std::log(Y - z) - std::log(X - z));
    cplx sum = 0.0, r = z / Y, rm = r;
    for (int m = 1; m < 400; ++m) {
      cplx t = rm / (m - p);
      sum += t;
      if (std::abs(t) < 1e-17 * (std::abs(sum) + 1e-300)) break;
      rm *= r;
    }
    double inv2 = 1.0 / (Y * Y), q = inv2, sgn = -1.0;
    for (int k = 1; k < 200; ++k) {
      double t = sgn * q / (2.0 * k - p);
      sum -= t;
      if (std::abs(t) < 1e-17 * (std::abs(sum) + 1e-300)) break;
      q *= inv2;
      sgn = -sgn;
    }
    return near - comp_XY + c * std::pow(Y, p) * sum;
  }

  // int_X^inf c t^p / (t-z)^2 dt
  cplx planar_part(cplx z) const {
    if (!active()) return 0.0;
    auto f = [&](double t) { return cplx(c * std::pow(t, p)) / ((t - z) * (t - z)); };
    cplx near = GK::integrate(f, X, Y, 15, 1e-11);
    cplx sum = 0.0, r = z / Y, rm = 1.0;
    for (int m = 0; m < 400; ++m) {
      cplx t = double(m + 1) * rm / (m + 1.0 - p);
      sum += t;
      if (std::abs(t) < 1e-17 * (std::abs(sum) + 1e-300)) break;
      rm *= r;
    }
    return near + c * std::pow(Y, p - 1.0) * sum;
  }
};

/// Precomputed data for transforms of one piecewise-linear function.
struct TransformKernel {
  const SampledFunction* h = nullptr;
  std::vector<double> slope;  // per cell
  double comp = 0.0;          // int t/(1+t^2) h dt over the core
  TailPiece plus, minus;      // minus is mirrored onto the positive axis

  explicit TransformKernel(const SampledFunction& f, double zmax = 0.0) : h(&f) {
    const auto& t = f.xs();
    const auto& y = f.ys();
    std::size_t n = t.size();
    slope.resize(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) slope[j] = (y[j + 1] - y[j]) / (t[j + 1] - t[j]);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      double a = t[j], b = t[j + 1];
      double A = y[j] - slope[j] * a;
      double dlog = 0.5 * std::log1p((b - a) * (b + a) / (1.0 + a * a));
      double datan = std::atan2(b - a, 1.0 + a * b);
      comp += A * dlog + slope[j] * ((b - a) - datan);
    }
    double Y = 2.0 * std::max({std::abs(t.front()), std::abs(t.back()), zmax, 1.0});
    if (!f.tail_plus().is_zero()) plus = TailPiece::make(f.tail_plus(), t.back(), Y);
    if (!f.tail_minus().is_zero()) minus = TailPiece::make(f.tail_minus(), -t.front(), Y);
  }

  /// pi * h~(x) for x within the grid span.
  double pi_hilbert(double x) const {
    const auto& t = h->xs();
    const auto& y = h->ys();
    std::size_t n = t.size();
    double acc = 0.0;
    // per cell: h_j(x) (log|x-t_j| - log|x-t_{j+1}|) - s_j dt_j, with h_j the linear extension;
    // log terms at a knot equal to x cancel between neighbouring cells and are dropped
    for (std::size_t j = 0; j + 1 < n; ++j) {
      double a = t[j], b = t[j + 1], s = slope[j], dt = b - a;
      double v;
      if (x <= a) {
        if (x == a) {
          v = -y[j] * std::log(dt) - s * dt;
        } else {
          double L = std::log1p(-dt / (b - x));
          v = y[j] * L + s * ((x - a) * L - dt);
        }
      } else if (x >= b) {
        if (x == b) {
          v = y[j + 1] * std::log(dt) - s * dt;
        } else {
          double L = std::log1p(dt / (x - b));
          v = y[j] * L + s * ((x - a) * L - dt);
        }
      } else {
        double hx = y[j] + s * (x - a);
        v = hx * (std::log(x - a) - std::log(b - x)) - s * dt;
      }
      acc += v;
    }
    // the tails carry g(X) log|x - X| terms; they pair with the outer knots
    if (x != t.front() && minus.gX != 0.0) acc -= minus.gX * std::log(std::abs(x - t.front()));
    if (x != t.back() && plus.gX != 0.0) acc += plus.gX * std::log(std::abs(x - t.back()));
    acc += comp;
    acc += plus.hilbert_part(x);
    acc -= minus.hilbert_part(-x);
    return acc;
  }

  static cplx log1p_c(cplx w) {
    double re = 0.5 * std::log1p(w.real() * (2.0 + w.real()) + w.imag() * w.imag());
    return {re, std::atan2(w.imag(), 1.0 + w.real())};
  }

  /// The integral int [1/(t-z) - t/(1+t^2)] h(t) dt.
  cplx schwarz_raw(cplx z) const {
    const auto& t = h->xs();
    const auto& y = h->ys();
    std::size_t n = t.size();
    cplx acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      double a = t[j], s = slope[j], dt = t[j + 1] - a;
      cplx w = a - z;
      cplx L = log1p_c(dt / w);  // log((b-z)/(a-z))
      acc += y[j] * L + s * (dt - w * L);
    }
    acc -= comp;
    acc += plus.schwarz_part(z);
    // t = -u maps the minus tail to  -int_X^inf [1/(u+z) - u/(1+u^2)] g du
    acc -= minus.schwarz_part(-z);
    return acc;
  }

  /// int h(t)/(t-z)^2 dt.
  cplx planar(cplx z) const {
    const auto& t = h->xs();
    const auto& y = h->ys();
    std::size_t n = t.size();
    cplx acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      double a = t[j], b = t[j + 1], s = slope[j], dt = b - a;
      cplx wa = a - z, wb = b - z;
      // (y_j - s w_a) dt/(w_a w_b) + s log(w_b/w_a)
      acc += y[j] * dt / (wa * wb) + s * (log1p_c(dt / wa) - dt / wb);
    }
    acc += plus.planar_part(z);
    // t = -u: int g(u)/(u+z)^2 du = planar tail at -z
    acc += minus.planar_part(-z);
    return acc;
  }
};

}  // namespace detail

/// h~(x) = (1/pi) v.p. int [1/(x-t) + t/(1+t^2)] h(t) dt, exact on the piecewise-linear interpolant.
inline double hilbert_value(const SampledFunction& h, double x) {
  if (x < h.lo() || x > h.hi()) fail(ErrorKind::OutOfSpan, "evaluation point outside the grid span");
  detail::TransformKernel K(h);
  return K.pi_hilbert(x) / pi;
}

inline HilbertResult hilbert_transform(const SampledFunction& h) {
  detail::TransformKernel K(h);
  const auto& xs = h.xs();
  std::size_t n = xs.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = K.pi_hilbert(xs[i]) / pi;
  HilbertResult r;
  if (xs.front() < 0.0 && xs.back() > 0.0 && n >= 3)
    r.values = SampledFunction::with_fitted_tails(xs, std::move(v));
  else
    r.values = SampledFunction::compact(xs, std::move(v));
  for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1})
    if (i < n && (r.low_confidence.empty() || r.low_confidence.back() != i)) r.low_confidence.push_back(i);
  return r;
}

/// Sh(z) = (1/(pi i)) int [1/(t-z) - t/(1+t^2)] h(t) dt.
inline cplx schwarz_integral(const SampledFunction& h, HalfPlanePoint z) {
  detail::TransformKernel K(h, std::abs(z.z()));
  return K.schwarz_raw(z.z()) / cplx(0.0, pi);
}

/// H(z) = int h(t)/(t-z)^2 dt.
inline cplx planar_hilbert(const SampledFunction& hminus, HalfPlanePoint z) {
  detail::TransformKernel K(hminus, std::abs(z.z()));
  return K.planar(z.z());
}

/// Schwarz integral of the indicator of a finite union of intervals, in closed form.
inline cplx schwarz_indicator(const std::vector<std::pair<double, double>>& intervals, cplx z) {
  cplx acc = 0.0;
  for (auto [a, b] : intervals) {
    acc += std::log((b - z) / (a - z));
    acc -= 0.5 * std::log((1.0 + b * b) / (1.0 + a * a));
  }
  return acc / cplx(0.0, pi);
}

/// For each level A, Pi{|f| > A} computed exactly for the interpolant and the tails.
inline std::vector<std::pair<double, double>> weak_l1_profile(const SampledFunction& f, const std::vector<double>& levels) {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (!(levels[i] > 0.0) || (i > 0 && !(levels[i] > levels[i - 1])))
      fail(ErrorKind::InvalidInput, "levels must be positive and increasing");
  const auto& xs = f.xs();
  const auto& ys = f.ys();
  auto tail_measure = [](const TailModel& t, double X, double A) {
    // Pi{ t >= X : |c| t^p > A }
    double c = std::abs(t.coeff);
    if (c == 0.0) return 0.0;
    if (t.exponent == 0.0) return c > A ? poisson_measure(X, inf) : 0.0;
    double xs_ = std::pow(A / c, 1.0 / t.exponent);
    if (t.exponent > 0.0) return poisson_measure(std::max(X, xs_), inf);
    return xs_ > X ? poisson_measure(X, xs_) : 0.0;
  };
  std::vector<std::pair<double, double>> out;
  for (double A : levels) {
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      double a = xs[k], b = xs[k + 1], ya = ys[k], yb = ys[k + 1];
      for (double sgn : {1.0, -1.0}) {
        // {sgn*f > A} on [a,b]
        double u = sgn * ya - A, v = sgn * yb - A;
        if (u <= 0.0 && v <= 0.0) continue;
        if (u > 0.0 && v > 0.0) {
          m += poisson_measure(a, b);
          continue;
        }
        double r = a + u / (u - v) * (b - a);
        m += u > 0.0 ? poisson_measure(a, r) : poisson_measure(r, b);
      }
    }
    if (xs.back() > 0.0) m += tail_measure(f.tail_plus(), xs.back(), A);
    if (xs.front() < 0.0) m += tail_measure(f.tail_minus(), -xs.front(), A);
    out.emplace_back(A, m);
  }
  return out;
}

}  // namespace bmtk
