#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bmtk/grid.hpp"

namespace bmtk {

struct Interval {
  double a = 0.0, b = 0.0;

  double length() const { return b - a; }
  /// dist(0, (a, b))
  double distance() const {
    if (a >= 0.0) return a;
    if (b <= 0.0) return -b;
    return 0.0;
  }
  bool contains(double x) const { return x > a && x < b; }
  /// The interval of length k|l| with the same centre.
  Interval scaled(double k) const {
    double m = 0.5 * (a + b), r = 0.5 * k * (b - a);
    return {m - r, m + r};
  }
};

/// Sorted, pairwise disjoint open intervals.
struct IntervalFamily {
  std::vector<Interval> intervals;

  IntervalFamily() = default;
  explicit IntervalFamily(std::vector<Interval> v) : intervals(std::move(v)) { validate(); }

  void validate() const {
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      if (!(intervals[i].a < intervals[i].b)) fail(ErrorKind::InvalidInput, "interval with a >= b");
      if (i > 0 && intervals[i].a < intervals[i - 1].b) fail(ErrorKind::InvalidInput, "intervals overlap or are unsorted");
    }
  }
  std::size_t size() const { return intervals.size(); }
  bool empty() const { return intervals.empty(); }
  const Interval& operator[](std::size_t i) const { return intervals[i]; }
  auto begin() const { return intervals.begin(); }
  auto end() const { return intervals.end(); }
};

// ---------------------------------------------------------------- series verdicts

enum class VerdictKind { Divergent, Convergent, Undetermined };

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Divergent: return "Divergent";
    case VerdictKind::Convergent: return "Convergent";
    case VerdictKind::Undetermined: return "Undetermined";
  }
  return "?";
}

struct DivergenceVerdict {
  VerdictKind kind = VerdictKind::Undetermined;
  std::vector<double> windows;       // R_m
  std::vector<double> partial_sums;  // sum of terms with position <= R_m
  double fitted_growth = 0.0;        // slope of partial sums against log R over the last windows
  double sum = 0.0;                  // all terms in the data window
  bool tails_ok = true;              // false when the limits at +-infinity already fail
};

struct SeriesOptions {
  double growth_threshold = 0.1;   // Divergent iff fitted slope >= this
  double cauchy_tolerance = 0.05;  // Convergent needs last increment <= tol * max(1, S)
  std::size_t fit_windows = 5;
  std::size_t min_windows = 3;
  double span = 0.0;  // data window for the phase tests; 0 means the grid span
  // fit S(R) = A + B log R + C / R instead of A + B log R, so a convergent 1/R tail is not read as growth
  bool inverse_correction = true;
};

namespace detail {

/// Least-squares coefficient of log R in the partial-sum model over windows [from, n).
inline double log_growth(const std::vector<double>& R, const std::vector<double>& S, std::size_t from, bool inverse) {
  std::size_t m = R.size() - from, p = inverse ? 3 : 2;
  Eigen::MatrixXd A(m, p);
  Eigen::VectorXd b(m);
  for (std::size_t i = 0; i < m; ++i) {
    double r = R[from + i];
    A(i, 0) = 1.0;
    A(i, 1) = std::log(r);
    if (inverse) A(i, 2) = 1.0 / r;
    b(i) = S[from + i];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  return c(1);
}

}  // namespace detail

/// Classify a nonnegative series from finitely many (position, term) pairs.
/// Windows are R = span, span/2, span/4, ... down to 1.
inline DivergenceVerdict classify_series(std::vector<std::pair<double, double>> terms, double span,
                                         const SeriesOptions& opt = {}) {
  DivergenceVerdict v;
  std::sort(terms.begin(), terms.end());
  for (auto& t : terms) v.sum += t.second;
  // anchored at the span so that rescaling the data rescales the windows
  for (double R = span; R >= 1.0; R *= 0.5) v.windows.push_back(R);
  if (v.windows.empty()) v.windows.push_back(span);
  std::reverse(v.windows.begin(), v.windows.end());
  std::size_t j = 0;
  double acc = 0.0;
  for (double R : v.windows) {
    while (j < terms.size() && terms[j].first <= R) acc += terms[j++].second;
    v.partial_sums.push_back(acc);
  }
  if (v.sum == 0.0) {
    v.kind = VerdictKind::Convergent;
    return v;
  }
  std::size_t n = v.windows.size();
  if (n < opt.min_windows) {
    v.kind = VerdictKind::Undetermined;
    return v;
  }
  std::size_t k = std::min(opt.fit_windows, n);
  v.fitted_growth = detail::log_growth(v.windows, v.partial_sums, n - k, opt.inverse_correction && k >= 4);
  double last = v.partial_sums[n - 1], inc = last - v.partial_sums[n - 2];
  if (v.fitted_growth >= opt.growth_threshold)
    v.kind = VerdictKind::Divergent;
  else if (inc <= opt.cauchy_tolerance * std::max(1.0, last))
    v.kind = VerdictKind::Convergent;
  else
    v.kind = VerdictKind::Undetermined;
  return v;
}

// ---------------------------------------------------------------- BM intervals

/// Components of {gamma != max gamma[x, +inf)}. Exact for the piecewise-linear interpolant.
inline IntervalFamily bm_intervals(const PhaseFunction& gamma) {
  const auto& t = gamma.xs();
  const auto& g = gamma.ys();
  const TailModel& tp = gamma.base.tail_plus();
  if (!(tp.coeff < 0.0)) fail(ErrorKind::TailUnbounded, "gamma does not tend to -infinity at +infinity");
  std::size_t n = t.size();
  // right-to-left: M = max over (t_k, inf) with the decreasing tail contributing g.back()
  std::vector<Interval> rev;
  double M = g[n - 1];
  bool open = false;  // a component is being extended leftwards
  double right = 0.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    double gk = g[k], gk1 = g[k + 1];
    // cell [t_k, t_{k+1}], sup to the right of the cell is M (covers t_{k+1} too)
    if (gk1 < M || (gk < M && gk1 <= M)) {
      // gamma < M somewhere right next to t_{k+1}; find where the cell leaves the set
      if (!open) {
        open = true;
        right = t[k + 1];
      }
      if (gk >= M) {
        double xs = t[k] + (M - gk) * (t[k + 1] - t[k]) / (gk1 - gk);
        rev.push_back({xs, right});
        open = false;
      }
    } else if (open) {
      rev.push_back({t[k + 1], right});
      open = false;
    }
    M = std::max(M, gk);
  }
  const TailModel& tm = gamma.base.tail_minus();
  if (open) {
    // the component reaches t_0; continue into the left tail c |x|^p until gamma = M
    double left = -inf;
    if (tm.coeff > 0.0 && M > 0.0) left = -std::pow(M / tm.coeff, 1.0 / tm.exponent);
    rev.push_back({std::min(left, t[0]), right});
  } else if (tm.coeff < 0.0) {
    // gamma falls below gamma(t_0) all along the left tail
    rev.push_back({-inf, t[0]});
  }
  std::reverse(rev.begin(), rev.end());
  // components sharing an endpoint stay separate: that point has gamma = gamma*
  std::vector<Interval> out;
  for (const auto& iv : rev)
    if (iv.b > iv.a) out.push_back(iv);
  return IntervalFamily(std::move(out));
}

/// gamma*(x) = max gamma[x, +inf) sampled on the given grid (knots of gamma plus BM endpoints).
inline std::vector<double> upper_envelope(const PhaseFunction& gamma, const std::vector<double>& at) {
  std::vector<double> out(at.size());
  // running max of gamma over [x, inf) on a grid that contains all knots of gamma beyond at.front()
  auto xs = merge_grids(gamma.xs(), at);
  std::vector<double> m(xs.size());
  double M = gamma(xs.back());
  for (std::size_t k = xs.size(); k-- > 0;) {
    M = std::max(M, gamma(xs[k]));
    m[k] = M;
  }
  for (std::size_t i = 0; i < at.size(); ++i) {
    auto it = std::lower_bound(xs.begin(), xs.end(), at[i] - 1e-14 * std::max(1.0, std::abs(at[i])));
    out[i] = m[static_cast<std::size_t>(it - xs.begin())];
  }
  return out;
}

// ---------------------------------------------------------------- (kappa)-almost decreasing

/// Terms d^(kappa-2) l^2 over BM intervals with d >= 1, as (d, term) pairs.
inline std::vector<std::pair<double, double>> bm_series_terms(const IntervalFamily& fam, double kappa) {
  std::vector<std::pair<double, double>> terms;
  for (const auto& l : fam) {
    double d = l.distance();
    if (d < 1.0) continue;
    double len = l.length();
    // a term enters the partial sums once the window holds the whole interval
    terms.emplace_back(std::max(std::abs(l.a), std::abs(l.b)), std::pow(d, kappa - 2.0) * len * len);
  }
  return terms;
}

inline DivergenceVerdict almost_decreasing_test(const PhaseFunction& gamma, double kappa, const SeriesOptions& opt = {}) {
  if (kappa < 0.0) fail(ErrorKind::InvalidInput, "kappa must be nonnegative");
  double span = opt.span > 0.0 ? opt.span : std::max(std::abs(gamma.xs().front()), std::abs(gamma.xs().back()));
  bool tails = gamma.base.tail_plus().coeff < 0.0 && gamma.base.tail_minus().coeff > 0.0;
  if (!tails) {
    DivergenceVerdict v;
    v.kind = VerdictKind::Divergent;
    v.tails_ok = false;
    return v;
  }
  return classify_series(bm_series_terms(bm_intervals(gamma), kappa), span, opt);
}

// ---------------------------------------------------------------- section 3 diagnostics

/// inf over (b, b + c|l|) minus sup over (a - c|l|, a); exact over knots.
inline double delta_star(const PhaseFunction& gamma, const Interval& l, double c) {
  double w = c * l.length();
  double lo1 = l.a - w, hi2 = l.b + w;
  const auto& t = gamma.xs();
  if (lo1 < t.front() || hi2 > t.back()) fail(ErrorKind::OutOfSpan, "adjacent intervals leave the grid span");
  auto extreme = [&](double u, double v, bool want_max) {
    double best = want_max ? std::max(gamma(u), gamma(v)) : std::min(gamma(u), gamma(v));
    auto i0 = std::upper_bound(t.begin(), t.end(), u);
    for (auto it = i0; it != t.end() && *it < v; ++it) {
      double y = gamma.ys()[static_cast<std::size_t>(it - t.begin())];
      best = want_max ? std::max(best, y) : std::min(best, y);
    }
    return best;
  };
  return extreme(l.b, hi2, false) - extreme(lo1, l.a, true);
}

/// Covering multiplicity of a set of open intervals (max number containing a point).
inline std::size_t covering_multiplicity(const std::vector<Interval>& v) {
  std::vector<std::pair<double, int>> ev;
  for (const auto& l : v) {
    ev.emplace_back(l.a, +1);
    ev.emplace_back(l.b, -1);
  }
  // closing events first at equal coordinates: open intervals sharing an endpoint do not overlap
  std::sort(ev.begin(), ev.end(), [](auto& p, auto& q) { return p.first < q.first || (p.first == q.first && p.second < q.second); });
  int cur = 0, best = 0;
  for (auto& e : ev) {
    cur += e.second;
    best = std::max(best, cur);
  }
  return static_cast<std::size_t>(best);
}

struct TestFamily {
  IntervalFamily family;
  Side side = Side::plus;
  double adjacency = 1.0;    // the constant c defining l' and l''
  double realized_c = 0.0;   // min over the family of Delta*/(d^kappa |l|)
  double series_sum = 0.0;   // sum d^(kappa-2) l^2 over the family
  std::size_t dropped = 0;   // intervals whose neighbourhoods leave the grid
};

/// Disjoint test intervals with 10|l| <= d, {5l} of multiplicity <= 2 and Delta*[gamma + eps sigma] >= c d^kappa |l|.
inline TestFamily select_test_intervals(const PhaseFunction& gamma, const PhaseFunction& sigma, double kappa, double eps,
                                        const SeriesOptions& opt = {}) {
  auto verdict = almost_decreasing_test(gamma, kappa, opt);
  if (!verdict.tails_ok || verdict.kind != VerdictKind::Divergent)
    fail(ErrorKind::NotDivergent, "the BM series of gamma is not divergent");
  auto bm = bm_intervals(gamma);
  double sp = 0.0, sm = 0.0;
  for (const auto& l : bm) {
    if (l.distance() < 1.0) continue;
    double term = std::pow(l.distance(), kappa - 2.0) * l.length() * l.length();
    (l.a > 0.0 ? sp : sm) += term;
  }
  TestFamily out;
  out.side = sp >= sm ? Side::plus : Side::minus;
  std::vector<Interval> cand;
  for (const auto& l : bm) {
    if (l.distance() < 1.0) continue;
    bool plus = l.a > 0.0;
    if (plus != (out.side == Side::plus)) continue;
    Interval s = l;
    if (10.0 * l.length() > l.distance()) {
      // keep the peak end: gamma(b) >= gamma(a) on the shortened interval
      s.a = l.b - std::abs(l.b) / 11.0;
    }
    cand.push_back(s);
  }
  // subcover of the union of the 5l with multiplicity <= 2: greedy farthest reach
  std::vector<std::size_t> order(cand.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return cand[i].scaled(5).a < cand[j].scaled(5).a; });
  std::vector<Interval> chosen;
  std::size_t i = 0;
  while (i < order.size()) {
    // start of a connected run of the union
    double reach = cand[order[i]].scaled(5).b;
    std::size_t best = order[i];
    ++i;
    chosen.push_back(cand[best]);
    while (i < order.size()) {
      // among intervals starting inside the current reach, take the one reaching farthest
      double far = reach;
      std::size_t pick = order.size();
      std::size_t j = i;
      for (; j < order.size() && cand[order[j]].scaled(5).a < reach; ++j) {
        if (cand[order[j]].scaled(5).b > far) {
          far = cand[order[j]].scaled(5).b;
          pick = order[j];
        }
      }
      if (j == i) break;  // gap in the union: new run
      i = j;
      if (pick != order.size()) {
        chosen.push_back(cand[pick]);
        reach = far;
      }
    }
  }
  std::sort(chosen.begin(), chosen.end(), [](auto& p, auto& q) { return p.a < q.a; });
  auto phi = combine(gamma, 1.0, sigma, eps);
  std::vector<Interval> kept;
  for (const auto& l : chosen) {
    if (l.a - l.length() < phi.xs().front() || l.b + l.length() > phi.xs().back()) {
      ++out.dropped;
      continue;
    }
    kept.push_back(l);
  }
  out.family = IntervalFamily(kept);
  for (const auto& l : kept) out.series_sum += std::pow(l.distance(), kappa - 2.0) * l.length() * l.length();
  if (kept.empty()) fail(ErrorKind::NotDivergent, "no test intervals inside the grid span");
  double c = 1.0;
  for (int it = 0; it < 40; ++it, c *= 0.5) {
    double worst = inf;
    for (const auto& l : kept) worst = std::min(worst, delta_star(phi, l, c) / (std::pow(l.distance(), kappa) * l.length()));
    if (worst > 0.0) {
      out.adjacency = c;
      out.realized_c = worst;
      return out;
    }
  }
  fail(ErrorKind::NonConvergence, "no adjacency constant gives a positive Delta* bound");
}

enum class IntervalType { TypeI, TypeII };

/// TypeI iff d^(kappa-2) |l|^2 <= C * int_{5l} |h| dPi.
inline std::vector<IntervalType> classify_intervals(const SampledFunction& h, const IntervalFamily& family, double C, double kappa) {
  std::vector<IntervalType> out;
  for (const auto& l : family) {
    if (l.a < h.lo() || l.b > h.hi()) fail(ErrorKind::OutOfSpan, "interval outside the grid span of h");
    auto l5 = l.scaled(5.0);
    double rhs = C * pi_integral_abs(h, l5.a, l5.b);
    double lhs = std::pow(l.distance(), kappa - 2.0) * l.length() * l.length();
    out.push_back(lhs <= rhs ? IntervalType::TypeI : IntervalType::TypeII);
  }
  return out;
}

}  // namespace bmtk
