#include <catch_amalgamated.hpp>

#include "bmtk/hilbert.hpp"
#include "bmtk/inner.hpp"

using namespace bmtk;
using Catch::Approx;

namespace {

const cplx I(0.0, 1.0);

// E = (-1, 1): Su = -1/2 + (1/(pi i)) log((1 - z)/(-1 - z)), so W = i (1 - z)/(1 + z).
cplx unit_interval_theta(cplx z) {
  cplx w = I * (1.0 - z) / (1.0 + z);
  return (w - 1.0) / (w + 1.0);
}

// Same model through the Schwarz integral of 1_E.
cplx schwarz_theta(const std::vector<double>& A, const std::vector<double>& B, double c, cplx z) {
  std::vector<std::pair<double, double>> E;
  for (std::size_t n = 0; n < A.size(); ++n) E.emplace_back(A[n], B[n]);
  cplx su = schwarz_indicator(E, z) - 0.5;
  cplx w = std::exp(pi * I * (su + I * c));
  return (w - 1.0) / (w + 1.0);
}

PhaseFunction power_phase(double kappa, double half, std::size_t n) {
  auto xs = linspace(-half, half, n);
  return PhaseFunction::sample(xs, [&](double x) { return (x < 0 ? -1.0 : 1.0) * std::pow(std::abs(x), kappa + 1.0); }, kappa);
}

}  // namespace

TEST_CASE("Blaschke products", "[inner]") {
  auto one = PointSequence({I}, {1}, 1.0);
  CHECK(std::abs(blaschke_eval(one, 1.0) - I) < 1e-15);
  CHECK(std::abs(blaschke_eval(one, 2.0 * I) + 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(blaschke_eval(one, 0.0) - 1.0) < 1e-15);

  auto two = PointSequence({cplx(1.0, 2.0), cplx(-3.0, 0.5)}, {1, 2}, 4.0);
  for (double x : {-7.0, -0.3, 0.0, 2.5, 40.0}) CHECK(std::abs(blaschke_eval(two, x)) == Approx(1.0).margin(1e-14));
  for (cplx z : {cplx(0.2, 0.1), cplx(-5.0, 3.0), cplx(10.0, 0.01)}) CHECK(std::abs(blaschke_eval(two, z)) < 1.0);
  CHECK(std::abs(blaschke_eval(two, cplx(-3.0, 0.5))) < 1e-15);

  SECTION("argument derivative") {
    // arg (i - x)/(i + x) = -2 atan x + const
    InnerFunctionModel m = blaschke_product(one);
    for (double x : {-3.0, 0.0, 0.7, 12.0}) {
      auto d = arg_derivative(m, x);
      CHECK(std::abs(d.value) == Approx(2.0 / (1.0 + x * x)).epsilon(1e-6));
    }
  }

  CHECK_THROWS_AS(blaschke_product(PointSequence({cplx(1.0, 0.0)}, {1}, 2.0)), Error);
  CHECK_THROWS_AS(blaschke_product(PointSequence({cplx(1.0, -1.0)}, {1}, 2.0)), Error);
  try {
    blaschke_product(PointSequence({cplx(1.0, 0.0)}, {1}, 2.0));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroOnBoundary);
  }
}

TEST_CASE("Krein shift of a single interval", "[inner]") {
  auto k = krein_shift({-1.0}, {1.0});
  for (cplx z : {cplx(0.0, 1.0), cplx(0.3, 0.01), cplx(-4.0, 2.0), cplx(50.0, 7.0), cplx(0.999, 1e-5)}) {
    CHECK(std::abs(krein_eval(k, z) - unit_interval_theta(z)) < 1e-12);
    CHECK(std::abs(krein_eval(k, z)) < 1.0);
  }
  CHECK(std::abs(krein_eval(k, I)) < 1e-15);
  for (double x : {-5.0, -0.9, 0.0, 0.5, 3.0}) CHECK(std::abs(krein_eval(k, x)) == Approx(1.0).margin(1e-12));
  // E = {Im Theta > 0}
  for (double x : {-0.9, 0.0, 0.7}) CHECK(krein_eval(k, x).imag() > 0.0);
  for (double x : {-1.1, 1.5, 30.0}) CHECK(krein_eval(k, x).imag() < 0.0);

  InnerFunctionModel m = k;
  for (bool right : {true, false}) {
    CHECK(std::abs(boundary_limit(m, -1.0, 1e-4, right) - 1.0) < 1e-9);
    CHECK(std::abs(boundary_limit(m, 1.0, 1e-4, right) + 1.0) < 1e-9);
  }
  // raw values at the offset are only first-order close
  CHECK(std::abs(krein_eval(k, -1.0 + 1e-4) - 1.0) == Approx(1e-4).epsilon(1e-3));

  SECTION("Clark masses") {
    // W = i (1 - z)/(1 + z) has residue 2 at -1, and 1/W has residue 2 at 1
    auto c = clark_masses(k, {-1.0}, {1.0});
    CHECK(c.alphas[0] == Approx(2.0).epsilon(1e-8));
    CHECK(c.betas[0] == Approx(2.0).epsilon(1e-8));
    CHECK(c.alpha_ratio_min == Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("Krein shift of several intervals", "[inner]") {
  std::vector<double> A{-6.0, -2.0, 0.5, 4.0}, B{-4.5, -1.0, 2.0, 4.25};
  for (double c : {0.0, 0.4, -1.3}) {
    auto k = krein_shift(A, B, c);
    for (cplx z : {cplx(0.0, 1.0), cplx(-3.0, 0.2), cplx(4.1, 0.01), cplx(20.0, 15.0)})
      CHECK(std::abs(krein_eval(k, z) - schwarz_theta(A, B, c, z)) < 1e-12);
    InnerFunctionModel m = k;
    for (double a : A) CHECK(std::abs(boundary_limit(m, a, 1e-4) - 1.0) < 1e-9);
    for (double b : B) CHECK(std::abs(boundary_limit(m, b, 1e-4, false) + 1.0) < 1e-9);
  }

  auto k = krein_shift(A, B, 0.4);
  SECTION("argument is continuous and increasing") {
    auto xs = linspace(-10.0, 10.0, 4001);
    double prev = krein_argument(k, xs.front()) - 1e-9;
    for (double x : xs) {
      if (detail::is_level_point(k, x)) continue;
      double t = krein_argument(k, x);
      CHECK(std::abs(std::polar(1.0, t) - krein_eval(k, x)) < 1e-12);
      CHECK(t > prev);
      CHECK(t - prev < pi);
      prev = t;
    }
    for (std::size_t n = 0; n < A.size(); ++n) CHECK(krein_argument(k, A[n]) == Approx(2.0 * pi * static_cast<double>(n + 1)));
  }
  SECTION("derivative") {
    auto masses = clark_masses(k, A, B);
    InnerFunctionModel m = k;
    for (double x : {-8.0, -5.0, -1.5, 0.0, 3.0, 4.1, 9.0}) {
      auto d = arg_derivative(m, x, &masses);
      CHECK(d.value == Approx(krein_argument_derivative(k, x)).epsilon(1e-5));
      CHECK(d.value > 0.0);
      CHECK(d.surrogate / d.value > 0.1);
      CHECK(d.surrogate / d.value < 10.0);
    }
    CHECK_THROWS_AS(arg_derivative(m, 0.5), Error);
    CHECK_THROWS_AS(krein_argument_derivative(k, 2.0), Error);
  }
  SECTION("Clark masses against residues") {
    auto masses = clark_masses(k, A, B);
    double scale = std::exp(k.log_scale);
    for (std::size_t n = 0; n < A.size(); ++n) {
      double r = scale * (B[n] - A[n]);
      for (std::size_t m = 0; m < A.size(); ++m)
        if (m != n) r *= (B[m] - A[n]) / (A[m] - A[n]);
      CHECK(masses.alphas[n] == Approx(r).epsilon(1e-7));
      double s = (A[n] - B[n]) / scale;
      for (std::size_t m = 0; m < A.size(); ++m)
        if (m != n) s *= (A[m] - B[n]) / (B[m] - B[n]);
      CHECK(masses.betas[n] == Approx(-s).epsilon(1e-7));
    }
    CHECK_THROWS_AS(clark_masses(k, {-5.0}, {}), Error);
  }
}

TEST_CASE("Krein shift input errors", "[inner]") {
  CHECK_THROWS_AS(krein_shift({0.0, 1.0}, {2.0}), Error);
  CHECK_THROWS_AS(krein_shift({0.0, 1.0}, {2.0, 3.0}), Error);
  CHECK_THROWS_AS(krein_shift({0.0}, {0.0}), Error);
  CHECK_THROWS_AS(krein_shift({}, {}), Error);
  auto k = krein_shift({0.0}, {1.0});
  CHECK_THROWS_AS(krein_eval(k, cplx(0.0, -1.0)), Error);
}

TEST_CASE("phase to inner function", "[inner]") {
  SECTION("linear phase") {
    auto r = phase_to_inner(power_phase(0.0, 200.0, 401));
    const auto& k = r.model;
    for (std::size_t n = 0; n < k.A.size(); ++n) {
      double level = 2.0 * pi * static_cast<double>(r.first_index + static_cast<long>(n));
      CHECK(k.A[n] == Approx(level).margin(1e-9));
    }
    CHECK(r.max_phase_gap <= 2.0 * pi);
    CHECK(r.ratio_min >= 0.1);
    CHECK(r.ratio_max <= 10.0);
    auto c = clark_masses(k, {k.A[k.A.size() / 2]}, {k.B[k.B.size() / 2]});
    // an infinite lattice has Theta = e^{iz} with residue 2 at each a_n
    CHECK(c.alphas[0] == Approx(2.0).epsilon(0.05));
  }
  SECTION("quadratic phase") {
    auto r = phase_to_inner(power_phase(1.0, 30.0, 3001));
    const auto& k = r.model;
    for (std::size_t n = 0; n < k.A.size(); ++n) {
      double level = 2.0 * pi * static_cast<double>(r.first_index + static_cast<long>(n));
      CHECK(k.A[n] == Approx((level < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(level))).margin(1e-3));
    }
    CHECK(r.max_phase_gap <= 2.0 * pi);
    CHECK(r.ratio_min >= 0.1);
    CHECK(r.ratio_max <= 10.0);
  }
  SECTION("errors") {
    auto xs = linspace(-10.0, 10.0, 21);
    auto flat = PhaseFunction::sample(xs, [](double x) { return x < 0 ? x : 0.0; }, 0.0);
    CHECK_THROWS_AS(phase_to_inner(flat), Error);
    auto small = PhaseFunction::sample(xs, [](double x) { return 0.1 * x; }, 0.0);
    CHECK_THROWS_AS(phase_to_inner(small), Error);
  }
}
