#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmtk/bm.hpp"
#include "bmtk/error.hpp"
#include "bmtk/grid.hpp"
#include "bmtk/hilbert.hpp"

namespace bmtk {

struct ObstacleProblem {
  SampledFunction h0;  // obstacle; its grid carries the solution
  double eps = 1.0;
  double kappa = 0.0;
  double origin_gap = 0.1;  // h0 must vanish on [-origin_gap, origin_gap]

  void validate() const {
    if (!(eps > 0.0)) fail(ErrorKind::InvalidInput, "eps must be positive");
    if (!(kappa >= 0.0)) fail(ErrorKind::InvalidInput, "kappa must be nonnegative");
    if (h0.size() < 3) fail(ErrorKind::InvalidInput, "obstacle grid needs at least three points");
    if (!h0.tail_plus().is_zero() || !h0.tail_minus().is_zero())
      fail(ErrorKind::InvalidInput, "the obstacle must vanish outside its grid");
    const auto& x = h0.xs();
    const auto& y = h0.ys();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(y[i])) fail(ErrorKind::InvalidInput, "obstacle values must be finite");
      if (std::abs(x[i]) <= origin_gap && y[i] > 0.0) fail(ErrorKind::InvalidInput, "the obstacle must vanish near the origin");
    }
  }
};

struct ObstacleSolution {
  SampledFunction h;
  double objective = 0.0;
  double kkt_max_violation = 0.0;  // discrete stationarity residual of the solver
  IntervalFamily active_set;       // cells around maximal runs of grid points with h = max(h0, 0) > 0
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

// G'' = log|u|
inline double log_second_antiderivative(double u) {
  if (u == 0.0) return 0.0;
  return 0.5 * u * u * std::log(std::abs(u)) - 0.75 * u * u;
}

/// int_a^b int_c^d log|x - t| dt dx.
inline double log_cell_pair(double a, double b, double c, double d) {
  auto G = log_second_antiderivative;
  return G(b - c) - G(a - c) - G(b - d) + G(a - d);
}

/// N_cd = (1/(|c||d|)) int_c int_d log|x - t|, so that ||h||_D^2 = -(1/pi) s^T N s |c||d| for slopes s.
inline Eigen::MatrixXd log_kernel_cells(const std::vector<double>& x) {
  auto m = x.size() - 1;
  Eigen::MatrixXd N(m, m);
  for (std::size_t c = 0; c < m; ++c)
    for (std::size_t d = c; d < m; ++d) {
      double v = log_cell_pair(x[c], x[c + 1], x[d], x[d + 1]);
      N(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = v;
      N(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c)) = v;
    }
  return N;
}

/// Stiffness of ||h||_D^2 = h^T K h over nodal values of a piecewise-linear h vanishing at the grid ends.
inline Eigen::MatrixXd dirichlet_stiffness(const std::vector<double>& x) {
  auto N = log_kernel_cells(x);
  auto n = static_cast<Eigen::Index>(x.size());
  auto m = n - 1;
  // node i enters the slope of cell i-1 with +1/len and of cell i with -1/len
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index c = 0; c < m; ++c) {
    double len = x[static_cast<std::size_t>(c) + 1] - x[static_cast<std::size_t>(c)];
    D(c, c) = -1.0 / len;
    D(c, c + 1) = 1.0 / len;
  }
  Eigen::MatrixXd K = -(1.0 / pi) * D.transpose() * N * D;
  return 0.5 * (K + K.transpose());
}

/// ||h||_D^2 of the piecewise-linear interpolant of (x, y), zero outside, summed cell pair by cell pair.
inline double dirichlet_form_exact(const std::vector<double>& x, const std::vector<double>& y) {
  double q = 0.0;
  std::size_t m = x.size() - 1;
  for (std::size_t c = 0; c < m; ++c) {
    double dc = y[c + 1] - y[c];
    if (dc == 0.0) continue;
    double lc = x[c + 1] - x[c];
    for (std::size_t d = 0; d < m; ++d) {
      double dd = y[d + 1] - y[d];
      if (dd == 0.0) continue;
      q += dc / lc * dd / (x[d + 1] - x[d]) * log_cell_pair(x[c], x[c + 1], x[d], x[d + 1]);
    }
  }
  return -q / pi;
}

using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

/// |x|^((2+kappa)/2)/(1+x^2), the density of the penalty against dx.
inline double penalty_density(double x, double kappa) { return std::pow(std::abs(x), 1.0 + 0.5 * kappa) / (1.0 + x * x); }

/// w_i = int phi_i(x) rho(x) dx for the hat functions phi_i of the grid.
inline std::vector<double> hat_penalty_weights(const std::vector<double>& x, double kappa) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    double a = x[c], b = x[c + 1], l = b - a;
    w[c] += GK15::integrate([&](double t) { return (b - t) / l * penalty_density(t, kappa); }, a, b);
    w[c + 1] += GK15::integrate([&](double t) { return (t - a) / l * penalty_density(t, kappa); }, a, b);
  }
  return w;
}

/// int_a^b |t|^q (t - a)/(b - a) dt and the mirror weight, for cells not containing 0 in their interior, q >= -1.
inline std::pair<double, double> hat_power_moments(double a, double b, double q) {
  double s = 1.0;
  if (b <= 0.0) {
    std::swap(a, b);
    a = -a;
    b = -b;
    s = -1.0;  // mirror swaps the rising and falling halves
  }
  auto P = [&](double t, double k) {  // int t^k, t > 0
    if (t == 0.0) return k > -1.0 ? 0.0 : -inf;
    return std::abs(k + 1.0) < 1e-14 ? std::log(t) : std::pow(t, k + 1.0) / (k + 1.0);
  };
  double l = b - a;
  double m1 = P(b, q + 1.0) - P(a, q + 1.0);
  double up, down;
  if (a == 0.0 && q <= -1.0) {
    up = m1 / l;
    down = inf;
  } else {
    double m0 = P(b, q) - P(a, q);
    up = (m1 - a * m0) / l;
    down = (b * m0 - m1) / l;
  }
  return s > 0 ? std::pair{up, down} : std::pair{down, up};
}

inline IntervalFamily active_runs(const std::vector<double>& x, const std::vector<double>& h, const std::vector<double>& lower) {
  IntervalFamily f;
  std::size_t i = 0;
  while (i < x.size()) {
    if (lower[i] > 0.0 && h[i] <= lower[i] * (1.0 + 1e-12)) {
      std::size_t j = i;
      while (j + 1 < x.size() && lower[j + 1] > 0.0 && h[j + 1] <= lower[j + 1] * (1.0 + 1e-12)) ++j;
      double lo = i > 0 ? 0.5 * (x[i - 1] + x[i]) : x[i], hi = j + 1 < x.size() ? 0.5 * (x[j] + x[j + 1]) : x[j];
      f.intervals.push_back({lo, hi});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return f;
}

}  // namespace detail

/// ||h||_D^2 = int h h~' dx = -int h' h~ dx, with h~ from the Hilbert transform and Simpson's rule per cell.
inline double dirichlet_norm(const SampledFunction& h) {
  for (const auto* t : {&h.tail_plus(), &h.tail_minus()})
    if (!t->is_zero() && t->exponent >= 0.0) fail(ErrorKind::DivergentTail, "h must decay at infinity for a finite Dirichlet norm");
  const auto& x = h.xs();
  const auto& y = h.ys();
  std::vector<double> mids;
  for (std::size_t c = 0; c + 1 < x.size(); ++c) mids.push_back(0.5 * (x[c] + x[c + 1]));
  auto fine = merge_grids(x, mids);
  SampledFunction hf(fine, h(fine), h.tail_plus(), h.tail_minus(), inf);
  auto ht = hilbert_transform(hf).values;
  const auto& v = ht.ys();
  double q = 0.0;
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    // fine[2c], fine[2c+1], fine[2c+2] are the left end, midpoint and right end of cell c
    double cell = (v[2 * c] + 4.0 * v[2 * c + 1] + v[2 * c + 2]) / 6.0;
    q -= (y[c + 1] - y[c]) * cell;
  }
  // tails: h = c t^p, h~ ~ c~ t^r, int_X^inf h' h~ = c p c~ X^(p+r) / -(p+r)
  auto tail = [&](const TailModel& t, const TailModel& s, double X) {
    if (t.is_zero()) return 0.0;
    double p = t.exponent, r = s.is_zero() ? 0.0 : s.exponent;
    double cs = s.is_zero() ? 0.0 : s.coeff;
    if (p + r >= 0.0) fail(ErrorKind::DivergentTail, "tails too heavy for a finite Dirichlet norm");
    return t.coeff * p * cs * std::pow(X, p + r) / -(p + r);
  };
  q -= tail(h.tail_plus(), ht.tail_plus(), x.back());
  // on the left h' = -c p |t|^(p-1), which flips the sign
  q += tail(h.tail_minus(), ht.tail_minus(), -x.front());
  return q;
}

/// I(h) = ||h||_D^2 + eps int |x|^((2+kappa)/2) |h| dPi, from scratch for h vanishing outside its grid.
inline double obstacle_objective(const SampledFunction& h, double eps, double kappa) {
  const auto& x = h.xs();
  const auto& y = h.ys();
  double l1 = 0.0;
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    double a = x[c], b = x[c + 1];
    auto f = [&](double t) { return std::abs(y[c] + (y[c + 1] - y[c]) * (t - a) / (b - a)) * detail::penalty_density(t, kappa); };
    // split at a sign change so the integrand stays smooth
    if (y[c] * y[c + 1] < 0.0) {
      double z = a - y[c] * (b - a) / (y[c + 1] - y[c]);
      l1 += detail::GK15::integrate(f, a, z) + detail::GK15::integrate(f, z, b);
    } else {
      l1 += detail::GK15::integrate(f, a, b);
    }
  }
  return detail::dirichlet_form_exact(x, y) + eps * l1;
}

/// Worst violation of h~'(x) >= -eps |x|^((kappa-2)/2) tested against the hat functions of the grid.
inline double kkt_check(const SampledFunction& h, double eps, double kappa) {
  const auto& x = h.xs();
  if (x.size() < 3) return 0.0;
  std::vector<double> mids;
  for (std::size_t c = 0; c + 1 < x.size(); ++c) mids.push_back(0.5 * (x[c] + x[c + 1]));
  auto fine = merge_grids(x, mids);
  SampledFunction hf(fine, h(fine), h.tail_plus(), h.tail_minus(), inf);
  auto ht = hilbert_transform(hf).values;
  const auto& v = ht.ys();
  // int_cell h~ by Simpson
  std::vector<double> cell(x.size() - 1);
  for (std::size_t c = 0; c + 1 < x.size(); ++c)
    cell[c] = (x[c + 1] - x[c]) * (v[2 * c] + 4.0 * v[2 * c + 1] + v[2 * c + 2]) / 6.0;
  double q = 0.5 * (kappa - 2.0);
  double worst = -inf;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    double l = x[i] - x[i - 1], r = x[i + 1] - x[i];
    // int phi_i h~' = -int phi_i' h~
    double dh = -(cell[i - 1] / l - cell[i] / r);
    double mass = 0.5 * (l + r);
    auto left = detail::hat_power_moments(x[i - 1], x[i], q).first;
    auto right = detail::hat_power_moments(x[i], x[i + 1], q).second;
    double bound = eps * (left + right);
    worst = std::max(worst, (-dh - bound) / mass);
  }
  return std::max(worst, 0.0);
}

inline double kkt_check(const ObstacleSolution& s, double eps, double kappa) { return kkt_check(s.h, eps, kappa); }

/// min ||h||_D^2 + eps sum w_i h_i over h >= max(h0, 0) on the grid, by primal-dual active sets.
inline ObstacleSolution solve_obstacle(const ObstacleProblem& p, std::size_t max_iterations = 200) {
  p.validate();
  const auto& x = p.h0.xs();
  std::vector<double> lower(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) lower[i] = std::max(p.h0.ys()[i], 0.0);
  lower.front() = lower.back() = 0.0;

  ObstacleSolution out;
  std::vector<double> h(x.size(), 0.0);
  if (std::all_of(lower.begin(), lower.end(), [](double v) { return v == 0.0; })) {
    out.h = SampledFunction::compact(x, h);
    out.converged = true;
    out.active_set = {};
    return out;
  }

  // interior unknowns 1..n-2; the ends are pinned at 0
  auto n = static_cast<Eigen::Index>(x.size()) - 2;
  Eigen::MatrixXd K = detail::dirichlet_stiffness(x).block(1, 1, n, n);
  auto wfull = detail::hat_penalty_weights(x, p.kappa);
  Eigen::VectorXd w(n), l(n), u(n), lam(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = wfull[static_cast<std::size_t>(i) + 1];
    l(i) = lower[static_cast<std::size_t>(i) + 1];
  }
  // grad = 2 K u + eps w = lam >= 0 on the active set, 0 off it
  std::vector<bool> active(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = true;
  double scale = K.diagonal().maxCoeff();
  double best = inf;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::vector<Eigen::Index> F, A;
    for (Eigen::Index i = 0; i < n; ++i) (active[static_cast<std::size_t>(i)] ? A : F).push_back(i);
    u = l;
    if (!F.empty()) {
      auto nf = static_cast<Eigen::Index>(F.size());
      Eigen::MatrixXd KF(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        double r = -0.5 * p.eps * w(F[static_cast<std::size_t>(a)]);
        for (auto j : A) r -= K(F[static_cast<std::size_t>(a)], j) * l(j);
        rhs(a) = r;
        for (Eigen::Index b = 0; b < nf; ++b) KF(a, b) = K(F[static_cast<std::size_t>(a)], F[static_cast<std::size_t>(b)]);
      }
      Eigen::VectorXd uf = KF.llt().solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) u(F[static_cast<std::size_t>(a)]) = uf(a);
    }
    lam = 2.0 * K * u + p.eps * w;
    // residuals: infeasibility off the active set, negative multipliers on it, stationarity everywhere free
    double viol = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[static_cast<std::size_t>(i)]) viol = std::max(viol, -lam(i));
      else viol = std::max({viol, l(i) - u(i), std::abs(lam(i))});
    }
    out.iterations = it + 1;
    if (viol < best) {
      best = viol;
      for (Eigen::Index i = 0; i < n; ++i) h[static_cast<std::size_t>(i) + 1] = std::max(u(i), l(i));
    }
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool next = lam(i) + scale * (l(i) - u(i)) > 0.0;
      if (next != active[static_cast<std::size_t>(i)]) changed = true;
      active[static_cast<std::size_t>(i)] = next;
    }
    if (!changed) {
      out.converged = true;
      break;
    }
  }
  out.kkt_max_violation = best;
  out.h = SampledFunction::compact(x, h);
  out.objective = obstacle_objective(out.h, p.eps, p.kappa);
  out.active_set = detail::active_runs(x, h, lower);
  return out;
}

// ---------------------------------------------------------------- multiplier witness

struct MultiplierWitness {
  SampledFunction w;
  ObstacleSolution solution;
  double pi_norm = 0.0;           // int |w| dPi
  double min_excess = 0.0;        // min (w - w0) over the grid
  double lipschitz_margin = inf;  // min (w~' + eps |x|^kappa)/|x|^kappa over cells in 1 <= |x| <= window
  double window = 0.0;
};

/// Grid for the witness: uniform with spacing h on [-core, core], geometric of ratio q out to +-outer.
inline std::vector<double> witness_grid(const SampledFunction& w0, double h = 0.02, double q = 1.08, double outer_factor = 30.0) {
  double reach = std::max(std::abs(w0.lo()), std::abs(w0.hi()));
  double core = std::ceil(1.5 * reach);
  return merge_grids(core_geometric_grid(core, h, outer_factor * core, q), w0.xs());
}

/// w = |x|^((2+kappa)/2) h with h solving the obstacle problem for h0 = |x|^(-(2+kappa)/2) w0.
inline MultiplierWitness multiplier_witness(const SampledFunction& w0, double kappa, double eps, std::vector<double> grid = {},
                                            double window = 0.0, std::size_t max_iterations = 200) {
  pi_integral_abs(w0);  // DivergentTail when w0 is not in L1(Pi)
  if (!w0.tail_plus().is_zero() || !w0.tail_minus().is_zero())
    fail(ErrorKind::InvalidInput, "w0 must vanish outside its grid");
  if (grid.empty()) grid = witness_grid(w0);
  double a = 1.0 + 0.5 * kappa;
  std::vector<double> h0(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = w0(grid[i]);
    h0[i] = grid[i] == 0.0 ? (v > 0.0 ? inf : 0.0) : v * std::pow(std::abs(grid[i]), -a);
  }
  ObstacleProblem p{SampledFunction::compact(grid, h0), eps, kappa};
  MultiplierWitness r;
  r.solution = solve_obstacle(p, max_iterations);
  const auto& hy = r.solution.h.ys();
  std::vector<double> wy(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) wy[i] = std::pow(std::abs(grid[i]), a) * hy[i];
  r.w = SampledFunction::compact(grid, wy);
  r.pi_norm = pi_integral_abs(r.w);
  r.min_excess = inf;
  for (std::size_t i = 0; i < grid.size(); ++i) r.min_excess = std::min(r.min_excess, wy[i] - w0(grid[i]));
  r.window = window > 0.0 ? window : 0.5 * std::min(-grid.front(), grid.back());
  // cell averages of w~' are finite where the pointwise derivative has log spikes at kinks
  auto wt = hilbert_transform(r.w).values;
  const auto& v = wt.ys();
  for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
    double lo = std::min(std::abs(grid[c]), std::abs(grid[c + 1])), hi = std::max(std::abs(grid[c]), std::abs(grid[c + 1]));
    if (grid[c] * grid[c + 1] < 0.0 || lo < 1.0 || hi > r.window) continue;
    double mid = 0.5 * (grid[c] + grid[c + 1]);
    double slope = (v[c + 1] - v[c]) / (grid[c + 1] - grid[c]);
    double k = std::pow(std::abs(mid), kappa);
    r.lipschitz_margin = std::min(r.lipschitz_margin, (slope + eps * k) / k);
  }
  return r;
}

struct DirichletMembership {
  double norm = 0.0;       // over the window
  double half_norm = 0.0;  // over half the window
  bool finite = true;
};

/// ||chi f||_D^2 for f = |x|^(-(2+kappa)/2) w, chi cutting off |x| < 1 and |x| > window by linear ramps.
inline DirichletMembership dirichlet_membership(const SampledFunction& w, double kappa, double window = 0.0) {
  for (const auto& y : w.ys())
    if (y < 0.0) fail(ErrorKind::InvalidInput, "w must be nonnegative");
  pi_integral_abs(w);  // DivergentTail outside L1(Pi)
  double a = 1.0 + 0.5 * kappa;
  double W = window > 0.0 ? window : 0.25 * std::min(-w.lo(), w.hi());
  if (!(W > 2.0)) fail(ErrorKind::InvalidInput, "window must exceed 2");
  auto norm_at = [&](double R) {
    auto xs = merge_grids(w.xs(), {-2.0 * R, -R, -1.0, -0.5, 0.5, 1.0, R, 2.0 * R});
    std::vector<double> keep;
    for (double x : xs)
      if (std::abs(x) <= 2.0 * R) keep.push_back(x);
    std::vector<double> f(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      double t = std::abs(keep[i]);
      double chi = std::clamp(2.0 * t - 1.0, 0.0, 1.0) * std::clamp(2.0 - t / R, 0.0, 1.0);
      f[i] = chi == 0.0 ? 0.0 : chi * w(keep[i]) * std::pow(t, -a);
    }
    return detail::dirichlet_form_exact(keep, f);
  };
  DirichletMembership m;
  m.norm = norm_at(W);
  m.half_norm = norm_at(0.5 * W);
  m.finite = std::abs(m.norm - m.half_norm) <= 0.1 * std::max(m.norm, 1e-300) || m.norm == 0.0;
  return m;
}

}  // namespace bmtk
