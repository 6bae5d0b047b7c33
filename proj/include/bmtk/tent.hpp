#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmtk/bm.hpp"
#include "bmtk/hilbert.hpp"

namespace bmtk {

/// int_a^b |x|^kappa T(x) dPi with T = dist(x, {a, b}).
inline double tent_weight_integral(double a, double b, double kappa) {
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double cuts[4] = {a, m, b, 0.0};
  int n = 3;
  if (a < 0.0 && b > 0.0) cuts[n++] = 0.0;
  std::sort(cuts, cuts + n);
  double total = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    double u = cuts[i], v = cuts[i + 1];
    if (!(v > u)) continue;
    double tu = std::min(u - a, b - u);
    double s = (u < m) ? 1.0 : -1.0;
    if (kappa == 0.0) {
      total += detail::linear_piece_integral(u, v, tu, s, Weight::poisson, 0.0);
    } else {
      auto f = [=](double x) { return std::pow(std::abs(x), kappa) * std::min(x - a, b - x) / (1.0 + x * x); };
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, u, v, 20, 1e-14);
    }
  }
  return total;
}

struct TentCovering {
  IntervalFamily intervals;
  std::vector<double> coefficients;   // eps_n in (0, eps]
  std::vector<double> residuals;      // |int_{l_n} (f - eps_n |x|^kappa T_n) dPi|
  std::vector<bool> stopped_at_zero;  // b_n found where F(b_n) = 0 rather than F(b_n) < 0
  SampledFunction f;                  // gamma* - gamma with pruned intervals removed
  std::size_t pruned = 0;             // BM intervals with l < max(d,1)^-kappa
  double pruned_correction = 0.0;     // sup of the bounded function removed with them
  DivergenceVerdict e2;               // partial sums of d^(kappa-2) l_n^2
  double kappa = 0.0, eps = 0.0;
};

namespace detail {

/// gamma* - gamma on a grid refined with the BM endpoints; pruned intervals zeroed.
inline SampledFunction bm_excess(const PhaseFunction& gamma, const std::vector<Interval>& keep,
                                 const std::vector<Interval>& drop, double& dropped_sup) {
  std::vector<double> extra;
  for (const auto* set : {&keep, &drop})
    for (const auto& l : *set) {
      extra.push_back(l.a);
      extra.push_back(l.b);
      if (l.a < gamma.xs().front()) {
        // left-tail extension of a BM interval: sample the tail between a and t_0
        double t0 = gamma.xs().front();
        for (int k = 1; k < 64; ++k) extra.push_back(l.a + (t0 - l.a) * k / 64.0);
      }
    }
  auto xs = merge_grids(gamma.xs(), extra);
  auto gs = upper_envelope(gamma, xs);
  std::vector<double> f(xs.size());
  auto inside = [](const std::vector<Interval>& v, double x) {
    auto it = std::upper_bound(v.begin(), v.end(), x, [](double y, const Interval& l) { return y < l.b; });
    return it != v.end() && it->contains(x);
  };
  dropped_sup = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double v = std::max(0.0, gs[i] - gamma(xs[i]));
    if (inside(drop, xs[i])) {
      dropped_sup = std::max(dropped_sup, v);
      v = 0.0;
    } else if (!inside(keep, xs[i])) {
      v = 0.0;
    }
    f[i] = v;
  }
  return SampledFunction::compact(std::move(xs), std::move(f));
}

struct SideCovering {
  std::vector<Interval> l;
  std::vector<double> eps, resid;
  std::vector<bool> zero_stop;
};

/// The induction on one side; intervals sorted left to right, f given in the same coordinates.
inline SideCovering cover_side(const SampledFunction& f, const std::vector<Interval>& bm, double kappa, double eps) {
  SideCovering out;
  std::size_t idx = 0;
  while (idx < bm.size()) {
    double a = bm[idx].a;
    auto F = [&](double b) { return pi_integral(f, a, b) - eps * tent_weight_integral(a, b, kappa); };
    double bn = inf;
    bool zero = false;
    std::size_t j = idx;
    for (; j < bm.size(); ++j) {
      double gs = bm[j].b;
      double ge = j + 1 < bm.size() ? bm[j + 1].a : inf;
      double Fs = F(gs);
      if (Fs <= 0.0) {
        bn = gs;
        break;
      }
      if (std::isinf(ge)) {
        // f = 0 beyond the last interval and F decreases to -infinity
        double step = std::max(1.0, gs - a);
        ge = gs + step;
        for (int it = 0; it < 200 && F(ge) > 0.0; ++it) {
          step *= 2.0;
          ge = gs + step;
        }
      }
      if (F(ge) <= 0.0) {
        double lo = gs, hi = ge;
        for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
          double mid = 0.5 * (lo + hi);
          (F(mid) > 0.0 ? lo : hi) = mid;
        }
        bn = hi;
        zero = true;
        break;
      }
    }
    if (std::isinf(bn)) fail(ErrorKind::NonConvergence, "no right endpoint found for a covering interval");
    double If = pi_integral(f, a, bn), W = tent_weight_integral(a, bn, kappa);
    double en = If / W;
    out.l.push_back({a, bn});
    out.eps.push_back(en);
    out.resid.push_back(std::abs(If - en * W));
    out.zero_stop.push_back(zero);
    idx = j + 1;
    while (idx < bm.size() && bm[idx].a < bn) ++idx;
  }
  return out;
}

inline SampledFunction reflect(const SampledFunction& f) {
  std::vector<double> xs(f.xs().rbegin(), f.xs().rend()), ys(f.ys().rbegin(), f.ys().rend());
  for (double& x : xs) x = -x;
  return SampledFunction::compact(std::move(xs), std::move(ys));
}

}  // namespace detail

/// Tent covering of the BM intervals: l_n start at the first uncovered BM endpoint and stop at
/// the first point outside the BM set where F <= 0; eps_n solves the mean-zero equation.
inline TentCovering tent_covering(const PhaseFunction& gamma, double kappa, double eps, const SeriesOptions& opt = {}) {
  if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "eps must be positive");
  auto v = almost_decreasing_test(gamma, kappa, opt);
  if (!v.tails_ok || v.kind != VerdictKind::Convergent)
    fail(ErrorKind::NotAlmostDecreasing, "gamma is not (kappa)-almost decreasing on the data window");
  TentCovering cov;
  cov.kappa = kappa;
  cov.eps = eps;
  std::vector<Interval> keep, drop;
  for (const auto& l : bm_intervals(gamma)) {
    if (std::isinf(l.a)) fail(ErrorKind::NotAlmostDecreasing, "unbounded BM interval");
    if (l.length() < std::pow(std::max(l.distance(), 1.0), -kappa))
      drop.push_back(l);
    else
      keep.push_back(l);
  }
  cov.pruned = drop.size();
  cov.f = detail::bm_excess(gamma, keep, drop, cov.pruned_correction);

  std::vector<Interval> plus, minus;
  for (const auto& l : keep) (l.b > 0.0 ? plus : minus).push_back(l);
  auto P = detail::cover_side(cov.f, plus, kappa, eps);
  std::vector<Interval> mref;
  for (auto it = minus.rbegin(); it != minus.rend(); ++it) mref.push_back({-it->b, -it->a});
  auto M = detail::cover_side(detail::reflect(cov.f), mref, kappa, eps);

  std::vector<Interval> all;
  for (std::size_t i = M.l.size(); i-- > 0;) {
    all.push_back({-M.l[i].b, -M.l[i].a});
    cov.coefficients.push_back(M.eps[i]);
    cov.residuals.push_back(M.resid[i]);
    cov.stopped_at_zero.push_back(M.zero_stop[i]);
  }
  for (std::size_t i = 0; i < P.l.size(); ++i) {
    all.push_back(P.l[i]);
    cov.coefficients.push_back(P.eps[i]);
    cov.residuals.push_back(P.resid[i]);
    cov.stopped_at_zero.push_back(P.zero_stop[i]);
  }
  cov.intervals = IntervalFamily(std::move(all));
  double span = std::max(std::abs(gamma.xs().front()), std::abs(gamma.xs().back()));
  cov.e2 = classify_series(bm_series_terms(cov.intervals, kappa), span, opt);
  return cov;
}

struct Atom {
  Interval l;
  double lambda = 0.0;  // Pi(l) * sup |g_n|
  SampledFunction A;    // g_n / lambda, supported on l
};

namespace detail {

/// Knots of f inside l, the tent apex and, for kappa > 0, a dense uniform refinement.
inline std::vector<double> atom_grid(const SampledFunction& f, const Interval& l, double kappa, std::size_t dense) {
  std::vector<double> xs = {l.a, 0.5 * (l.a + l.b), l.b};
  for (double x : f.xs())
    if (x > l.a && x < l.b) xs.push_back(x);
  if (kappa != 0.0) {
    auto u = linspace(l.a, l.b, 2 * dense + 1);
    xs.insert(xs.end(), u.begin(), u.end());
    if (l.a < 0.0 && l.b > 0.0) xs.push_back(0.0);
  }
  return merge_grids(xs, {});
}

inline double g_value(const SampledFunction& f, const Interval& l, double en, double kappa, double x) {
  double T = std::max(0.0, std::min(x - l.a, l.b - x));
  return f(x) - en * std::pow(std::abs(x), kappa) * T;
}

}  // namespace detail

/// A_n = g_n / lambda_n with g = f - sum eps_n |x|^kappa T_n restricted to l_n.
inline std::vector<Atom> atom_decomposition(const TentCovering& cov, std::size_t dense = 16384) {
  std::vector<Atom> out;
  for (std::size_t n = 0; n < cov.intervals.size(); ++n) {
    const auto& l = cov.intervals[n];
    auto xs = detail::atom_grid(cov.f, l, cov.kappa, dense);
    std::vector<double> g(xs.size());
    double sup = 0.0, fsup = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      g[i] = detail::g_value(cov.f, l, cov.coefficients[n], cov.kappa, xs[i]);
      sup = std::max(sup, std::abs(g[i]));
      fsup = std::max(fsup, std::abs(cov.f(xs[i])));
    }
    Atom a;
    a.l = l;
    // f equal to its tent up to rounding leaves a null atom
    bool null = sup <= 1e-12 * fsup;
    a.lambda = null ? 0.0 : poisson_measure(l.a, l.b) * sup;
    for (double& y : g) y = null ? 0.0 : y / a.lambda;
    // the support is closed by zero knots just outside l
    double pad = 1e-12 * std::max(1.0, l.length());
    xs.insert(xs.begin(), l.a - pad);
    g.insert(g.begin(), 0.0);
    xs.push_back(l.b + pad);
    g.push_back(0.0);
    a.A = SampledFunction::compact(std::move(xs), std::move(g));
    out.push_back(std::move(a));
  }
  return out;
}

struct BasicWitness {
  SampledFunction alpha;  // nondecreasing
  SampledFunction h;      // in L1(Pi), gamma - eps sigma = -alpha + h~
  SampledFunction g;      // f + beta, the atomic part
  double constant = 0.0;  // absorbed into alpha
  double residual = 0.0;  // sup over the central 80% of the span
  double min_alpha_increment = 0.0;
  double h_pi_norm = 0.0;  // int |h| dPi
  double covering_eps = 0.0;
  TentCovering covering;
};

/// gamma - eps sigma = -alpha + h~ from gamma - eps sigma = -(f + beta) + (beta - eps sigma) + gamma*.
inline BasicWitness basic_witness(const PhaseFunction& gamma, const PhaseFunction& sigma, double kappa, double eps) {
  if (!(sigma.slope_plus > 0.0 && sigma.slope_minus > 0.0))
    fail(ErrorKind::InvalidInput, "sigma must increase at both infinities");
  // smallest sigma'/|x|^kappa over the cells bounds the tent slopes that keep beta - eps sigma decreasing
  double smin = inf;
  const auto& sx = sigma.xs();
  const auto& sy = sigma.ys();
  for (std::size_t k = 0; k + 1 < sx.size(); ++k) {
    double w = std::pow(std::max(std::abs(sx[k]), std::abs(sx[k + 1])), kappa);
    double s = (sy[k + 1] - sy[k]) / (sx[k + 1] - sx[k]);
    smin = std::min(smin, w > 0.0 ? s / w : inf);
  }
  if (!(smin > 0.0)) fail(ErrorKind::InvalidInput, "sigma must be increasing");
  BasicWitness out;
  double ec = 0.5 * eps * smin;
  for (int attempt = 0; attempt < 12; ++attempt, ec *= 0.5) {
    out.covering = tent_covering(gamma, kappa, ec);
    out.covering_eps = ec;
    const auto& cov = out.covering;
    std::vector<double> xs = merge_grids(gamma.xs(), sigma.xs());
    xs = merge_grids(xs, cov.f.xs());
    for (const auto& l : cov.intervals) xs = merge_grids(xs, detail::atom_grid(cov.f, l, kappa, kappa == 0.0 ? 0 : 2048));
    auto gs = upper_envelope(gamma, xs);
    std::vector<double> gv(xs.size()), av(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double beta = 0.0;
      for (std::size_t n = 0; n < cov.intervals.size(); ++n) {
        const auto& l = cov.intervals[n];
        if (xs[i] > l.a && xs[i] < l.b)
          beta -= cov.coefficients[n] * std::pow(std::abs(xs[i]), kappa) * std::min(xs[i] - l.a, l.b - xs[i]);
      }
      gv[i] = cov.f(xs[i]) + beta;
      av[i] = -(beta - eps * sigma(xs[i]) + gs[i]);
    }
    double mininc = inf;
    for (std::size_t i = 1; i < xs.size(); ++i) mininc = std::min(mininc, av[i] - av[i - 1]);
    out.min_alpha_increment = mininc;
    if (mininc < -1e-10) continue;

    out.g = SampledFunction::compact(xs, gv);
    // h ~ const + m/x far out, which a single power tail fits badly; zero-pad g well beyond the span
    double lo = xs.front(), hi = xs.back(), w = hi - lo;
    std::vector<double> pad;
    for (double x = w / 64.0; x < 1e4 * w; x *= 1.15) {
      pad.push_back(lo - x);
      pad.push_back(hi + x);
    }
    // h has x log|x| cusps at the kinks of g; cluster knots geometrically around them
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
      double dl = xs[i] - xs[i - 1], dr = xs[i + 1] - xs[i];
      double jump = (gv[i + 1] - gv[i]) / dr - (gv[i] - gv[i - 1]) / dl;
      if (std::abs(jump) * std::min(dl, dr) <= 1e-9) continue;
      for (double r = 0.5; r > 1e-7; r *= 0.5) {
        pad.push_back(xs[i] - r * dl);
        pad.push_back(xs[i] + r * dr);
      }
    }
    auto wide = merge_grids(xs, pad);
    out.h = hilbert_transform(SampledFunction::compact(wide, out.g(wide))).values;
    auto ht = hilbert_transform(out.h).values;
    std::vector<double> d;
    for (std::size_t i = 0; i < wide.size(); ++i)
      if (wide[i] >= lo + 0.1 * w && wide[i] <= hi - 0.1 * w) d.push_back(ht.ys()[i] + out.g(wide[i]));
    // constant minimising the sup deviation
    auto [mn, mx] = std::minmax_element(d.begin(), d.end());
    out.constant = 0.5 * (*mn + *mx);
    out.residual = 0.5 * (*mx - *mn);
    for (double& a : av) a += out.constant;
    out.alpha = SampledFunction::with_tails(xs, av, kappa + 1.0, kappa + 1.0);
    out.h_pi_norm = pi_integral_abs(out.h);
    return out;
  }
  fail(ErrorKind::NonConvergence, "could not make alpha nondecreasing");
}

}  // namespace bmtk
