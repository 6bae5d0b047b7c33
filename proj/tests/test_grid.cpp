#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bmtk/grid.hpp"

using namespace bmtk;
using Catch::Approx;

TEST_CASE("evaluate interpolates inside and follows tails outside", "[grid]") {
  auto id = SampledFunction::compact({-1.0, 1.0}, {-1.0, 1.0});
  CHECK(id(0.5) == Approx(0.5));

  auto sq = SampledFunction::compact({-1.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
  CHECK(sq(0.5) == Approx(0.5));

  std::vector<double> xs = {-2.0, 0.0, 2.0};
  auto lin = SampledFunction::with_tails(xs, {-4.0, 0.0, 4.0}, 1.0, 1.0);
  CHECK(lin.tail_plus().coeff == Approx(2.0));
  CHECK(lin(20.0) == Approx(40.0));
  CHECK(lin.tail_plus().cutoff == 2.0);
}

TEST_CASE("tail seam is continuous", "[grid]") {
  auto xs = symmetric_geometric_grid(0.01, 50.0, 200);
  std::vector<double> ys;
  for (double x : xs) ys.push_back(1.0 / (1.0 + x * x));
  auto f = SampledFunction::with_fitted_tails(xs, ys);
  double X = xs.back();
  CHECK(f(X * (1 + 1e-12)) == Approx(f(X)).epsilon(1e-9));
  CHECK(f(-X * (1 + 1e-12)) == Approx(f(-X)).epsilon(1e-9));
}

TEST_CASE("invalid samples are rejected", "[grid]") {
  CHECK_THROWS_AS(SampledFunction::compact({0.0, 0.0}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(SampledFunction::compact({0.0, 1.0}, {1.0}), Error);
  TailModel bad{0.0, 5.0, 1.0, Side::plus}, zero{0.0, 0.0, 1.0, Side::minus};
  CHECK_THROWS_AS(SampledFunction({-1.0, 1.0}, {1.0, 1.0}, bad, zero), Error);
}

TEST_CASE("pi_integral closed forms", "[grid]") {
  SECTION("constant one") {
    auto one = SampledFunction::with_tails({-3.0, 0.0, 3.0}, {1.0, 1.0, 1.0}, 0.0, 0.0);
    CHECK(pi_integral(one) == Approx(pi).epsilon(1e-14));
  }
  SECTION("indicator of (0,1)") {
    auto ind = SampledFunction::compact({-1.0, 0.0, 1e-15, 1.0 - 1e-15, 1.0, 2.0}, {0, 0, 1, 1, 0, 0});
    CHECK(pi_integral(ind) == Approx(pi / 4).epsilon(1e-12));
  }
  SECTION("1/(1+x^2) against symbolic pi/2") {
    auto xs = core_geometric_grid(5.0, 1e-3, 1e4, 1.01);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(1.0 / (1.0 + x * x));
    auto f = SampledFunction::with_tails(xs, ys, -2.0, -2.0);
    CHECK(pi_integral(f) == Approx(pi / 2).epsilon(1e-6));
  }
  SECTION("divergent tail") {
    auto f = SampledFunction::with_tails({-1.0, 1.0}, {1.0, 1.0}, 1.0, 0.0);
    CHECK_THROWS_AS(pi_integral(f), Error);
  }
}

TEST_CASE("pi_integral matches independent quadrature on a piecewise-linear rational sample", "[grid]") {
  // oracle: tanh-sinh over the interpolant on the core, and the tail model against x^p/(1+x^2)
  std::vector<double> xs = linspace(-4.0, 4.0, 41);
  std::vector<double> ys;
  for (double x : xs) ys.push_back((1.0 + x) / (2.0 + x * x));
  auto f = SampledFunction::with_tails(xs, ys, -1.0, -1.0);
  boost::math::quadrature::tanh_sinh<double> ts;
  double core = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k)
    core += ts.integrate([&](double x) { return f(x) / (1 + x * x); }, xs[k], xs[k + 1]);
  double cp = f.tail_plus().coeff, cm = f.tail_minus().coeff;
  // int_4^inf x^-1/(1+x^2) dx = 0.5 log(1 + 1/16)
  double tail = (cp + cm) * 0.5 * std::log1p(1.0 / 16.0);
  CHECK(pi_integral(f) == Approx(core + tail).epsilon(1e-8));
}

TEST_CASE("pi_integral is linear", "[grid]") {
  auto xs = linspace(-10.0, 10.0, 301);
  std::vector<double> a, b, c;
  for (double x : xs) {
    a.push_back(std::sin(x));
    b.push_back(std::exp(-x * x));
    c.push_back(3.0 * std::sin(x) - 2.0 * std::exp(-x * x));
  }
  auto fa = SampledFunction::compact(xs, a), fb = SampledFunction::compact(xs, b), fc = SampledFunction::compact(xs, c);
  double lhs = pi_integral(fc), rhs = 3.0 * pi_integral(fa) - 2.0 * pi_integral(fb);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * 5.0);
}

TEST_CASE("power-law tail integral against series and quadrature", "[grid]") {
  for (double p : {-1.5, -0.5, 0.0, 0.5, 0.9}) {
    for (double X : {0.3, 1.0, 2.5, 40.0}) {
      boost::math::quadrature::tanh_sinh<double> ts;
      double ref = ts.integrate([p](double x) { return std::pow(x, p) / (1 + x * x); }, X, inf);
      CHECK(poisson_power_integral(X, inf, p) == Approx(ref).epsilon(1e-9));
    }
  }
}

TEST_CASE("weighted_l1_norm closed forms", "[grid]") {
  auto zero = SampledFunction::compact({-1.0, 1.0}, {0.0, 0.0});
  CHECK(weighted_l1_norm(zero, 0.0) == 0.0);

  auto box = SampledFunction::compact({0.5, 1.0, 1.0 + 1e-14, 2.0 - 1e-14, 2.0, 3.0}, {0, 0, 1, 1, 0, 0});
  CHECK(weighted_l1_norm(box, 0.0) == Approx(0.5).epsilon(1e-10));

  // 1 on (1, inf) via the tail, kappa = 1
  TailModel plus{0.0, 1.0, 2.0, Side::plus}, minus{0.0, 0.0, 1.0, Side::minus};
  SampledFunction step({-1.0, 1.0 - 1e-14, 1.0, 2.0}, {0.0, 0.0, 1.0, 1.0}, plus, minus);
  CHECK(weighted_l1_norm(step, 1.0) == Approx(0.5).epsilon(1e-10));

  SampledFunction lin({-1.0, 2.0}, {0.0, 2.0}, TailModel{1.0, 1.0, 2.0, Side::plus}, minus);
  CHECK_THROWS_AS(weighted_l1_norm(lin, 0.0), Error);
}

TEST_CASE("poisson_measure of intervals", "[grid]") {
  CHECK(poisson_measure(-inf, inf) == Approx(pi));
  CHECK(poisson_measure(0.0, 1.0) == Approx(pi / 4));
  CHECK(poisson_measure(-2.0, 3.0) == Approx(std::atan(3.0) + std::atan(2.0)));
}
