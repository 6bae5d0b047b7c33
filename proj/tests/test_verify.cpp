#include <functional>
#include <optional>

#include <catch_amalgamated.hpp>

#include "bmtk/io/json.hpp"
#include "bmtk/verify.hpp"

using namespace bmtk;
using Catch::Approx;

namespace {

PointSequence lattice(double step, int half) {
  std::vector<double> x;
  for (int k = -half; k <= half; ++k) x.push_back(step * k);
  return PointSequence::real(x, step * half);
}

const std::vector<std::size_t> probe_sizes{11, 21, 41, 61, 81};

ProbeThresholds fixture_thresholds() { return io::load_probe_thresholds(BMTK_FIXTURE_DIR "/probe_thresholds.json"); }

// Past pi/d, the span of e^{i d n x} on (-a, a) is the functions with period P = 2 pi/d; the distance of x/a to it is
// sqrt((a - P/2) (P/a)^2), and for the triangle 1 - |x|/a with d = 1 it is sqrt((2/a^2) 2 (a - pi)^3/3).
double ramp_stall_limit(double a, double d) { return std::sqrt((a - pi / d) * std::pow(2.0 * pi / (d * a), 2)); }
double triangle_stall_limit(double a) { return std::sqrt(2.0 / (a * a) * 2.0 * std::pow(a - pi, 3) / 3.0); }

SampledFunction sampled(const std::vector<double>& g, const std::function<double(double)>& f, double tail = 0.0) {
  std::vector<double> y;
  for (double x : g) y.push_back(f(x));
  return tail == 0.0 ? SampledFunction::compact(g, y) : SampledFunction::with_tails(g, y, tail, tail);
}

// max over the nodes in [X, window] of an exact profile
double node_max(const std::vector<double>& g, double X, double window, const std::function<double(double)>& q) {
  double m = 0.0;
  for (double x : g)
    if (x >= X && x <= window) m = std::max(m, q(x));
  return m;
}

}  // namespace

TEST_CASE("Gram completeness probe", "[verify]") {
  auto th = fixture_thresholds();
  CHECK(th.decay_floor == 1e-3);
  CHECK(th.stall_floor == 5e-2);
  auto Z = lattice(1.0, 40);

  SECTION("integers against the triangle") {
    auto dec = gram_completeness_probe(Z, 0.8 * pi, probe_sizes, triangle_target(0.8 * pi), th);
    auto st = gram_completeness_probe(Z, 1.2 * pi, probe_sizes, triangle_target(1.2 * pi), th);
    CHECK(dec.verdict == ProbeVerdict::Decaying);
    CHECK(st.verdict == ProbeVerdict::Stalling);
    CHECK(st.values.back() == Approx(triangle_stall_limit(1.2 * pi)).epsilon(0.02));
    CHECK(st.values.back() >= triangle_stall_limit(1.2 * pi));
    for (std::size_t k = 1; k < probe_sizes.size(); ++k) {
      CHECK(dec.values[k] <= dec.values[k - 1]);
      CHECK(st.values[k] <= st.values[k - 1]);
    }
    // pinned regression values
    auto pinned = io::read_json_file(BMTK_FIXTURE_DIR "/probe_thresholds.json")["pinned"]["gram_integers_triangle"];
    double tol = pinned["relative_tolerance"];
    for (std::size_t k = 0; k < probe_sizes.size(); ++k) {
      CHECK(dec.values[k] == Approx(pinned["residuals"][0][k].get<double>()).epsilon(tol));
      CHECK(st.values[k] == Approx(pinned["residuals"][1][k].get<double>()).epsilon(tol));
    }
  }
  SECTION("empty sequence") {
    auto t = triangle_target(2.0);
    auto r = gram_completeness_probe(PointSequence(), 2.0, {0}, t, th);
    CHECK(r.values[0] == Approx(std::sqrt(2.0 * 2.0 / 3.0)).epsilon(1e-14));
    CHECK(r.verdict == ProbeVerdict::Stalling);
  }
  SECTION("a single exponential") {
    // projection of 1 onto span{1} is exact
    auto one = SampledFunction::compact({-1.0, 1.0}, {1.0, 1.0});
    auto r = gram_completeness_probe(PointSequence::real({0.0}, 1.0), 1.0, {0, 1}, one, th);
    CHECK(r.values[0] == Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r.values[1] < 1e-6);
  }
  SECTION("crossover brackets pi over the step") {
    for (double d : {0.5, 1.0, 2.0}) {
      auto L = lattice(d, 40);
      std::optional<double> last_decay, first_stall;
      for (double f : {0.9, 0.95, 1.05, 1.1}) {
        double a = f * pi / d;
        auto r = gram_completeness_probe(L, a, probe_sizes, SampledFunction::compact({-a, a}, {-1.0, 1.0}), th);
        if (r.verdict == ProbeVerdict::Decaying) last_decay = a;
        if (r.verdict == ProbeVerdict::Stalling && !first_stall) first_stall = a;
        if (f > 1.0) CHECK(r.values.back() == Approx(ramp_stall_limit(a, d)).epsilon(0.03));
      }
      REQUIRE(last_decay);
      REQUIRE(first_stall);
      CHECK(*last_decay < pi / d);
      CHECK(*first_stall > pi / d);
      CHECK(*last_decay >= 0.9 * pi / d);
      CHECK(*first_stall <= 1.1 * pi / d);
    }
  }
  SECTION("determinism") {
    auto a = gram_completeness_probe(Z, 0.9 * pi, probe_sizes, triangle_target(0.9 * pi), th);
    auto b = gram_completeness_probe(Z, 0.9 * pi, probe_sizes, triangle_target(0.9 * pi), th);
    CHECK(a.values == b.values);
    CHECK(a.conditions == b.conditions);
  }
  SECTION("errors") {
    auto t = triangle_target(1.0);
    CHECK_THROWS_AS(gram_completeness_probe(Z, 0.0, {1}, t), Error);
    CHECK_THROWS_AS(gram_completeness_probe(Z, 1.0, {5, 5}, t), Error);
    CHECK_THROWS_AS(gram_completeness_probe(Z, 1.0, {100}, t), Error);
    CHECK_THROWS_AS(gram_completeness_probe(PointSequence::real({0.0, 0.0}, 1.0), 1.0, {1}, t), Error);
  }
}

TEST_CASE("Toeplitz kernel probe", "[verify]") {
  auto xs = linspace(-50.0, 50.0, 1001);
  std::vector<std::size_t> sizes{4, 8, 16, 32};
  auto probe = [&](double slope) {
    return toeplitz_kernel_probe(PhaseFunction::sample(xs, [&](double x) { return slope * x; }, 0.0), sizes);
  };
  auto one = probe(0.0);
  for (double v : one.values) CHECK(v == Approx(1.0).margin(1e-12));

  // e^{2ix} is inner: its Toeplitz operator is an isometry, and the conjugate symbol has a kernel
  auto up = probe(2.0);
  auto down = probe(-2.0);
  CHECK(up.verdict == ProbeVerdict::Stalling);
  CHECK(up.values.back() > 0.95);
  CHECK(down.verdict == ProbeVerdict::Decaying);
  CHECK(down.values.back() < 1e-10);

  for (const auto* r : {&one, &up, &down})
    for (std::size_t k = 1; k < sizes.size(); ++k) CHECK(r->values[k] <= r->values[k - 1] + 1e-12);

  auto wiggly = toeplitz_kernel_probe(PhaseFunction::sample(xs, [](double x) { return 3.0 * std::sin(x / 4.0) + 0.2 * x; }, 0.0), sizes);
  for (std::size_t k = 1; k < sizes.size(); ++k) CHECK(wiggly.values[k] <= wiggly.values[k - 1] + 1e-12);
  CHECK(probe(2.0).values == up.values);
  CHECK_THROWS_AS(toeplitz_kernel_probe(PhaseFunction::sample(xs, [](double) { return 0.0; }, 0.0), {0, 2}), Error);
}

TEST_CASE("decay harness", "[verify]") {
  auto g = core_geometric_grid(4.0, 0.01, 400.0, 1.05);

  SECTION("zero") {
    auto r = lemma_decay_harness(sampled(g, [](double) { return 0.0; }), 0.0);
    CHECK(r.verdict == DecayVerdict::Decreasing);
    for (double v : r.profile) CHECK(v == 0.0);
  }
  SECTION("indicator") {
    auto h = sampled(g, [](double x) { return std::abs(x) < 1.0 ? 1.0 : std::abs(x) == 1.0 ? 0.5 : 0.0; });
    auto r = lemma_decay_harness(h, 0.0);
    CHECK(r.verdict == DecayVerdict::Decreasing);
    REQUIRE(r.X.size() >= 5);
    // |h~|/x = (1/pi) log((x + 1)/(x - 1))/x, largest at the left end of each range
    for (std::size_t k = 0; k < r.X.size(); ++k) {
      double exact = node_max(g, r.X[k], 200.0, [](double x) { return std::log((x + 1.0) / (x - 1.0)) / (pi * x); });
      CHECK(r.profile[k] == Approx(exact).epsilon(2e-2));
    }
  }
  SECTION("Poisson kernel") {
    auto h = sampled(g, [](double x) { return 1.0 / (1.0 + x * x); }, -2.0);
    for (double kappa : {0.0, 1.0}) {
      auto r = lemma_decay_harness(h, kappa);
      CHECK(r.verdict == DecayVerdict::Decreasing);
      for (std::size_t k = 0; k < r.X.size(); ++k) {
        double exact = node_max(g, r.X[k], 200.0, [&](double x) { return x / (1.0 + x * x) / std::pow(x, kappa + 1.0); });
        CHECK(r.profile[k] == Approx(exact).epsilon(1e-3));
      }
    }
    DecayOptions ko1;
    ko1.variant = DecayVariant::Ko1;
    ko1.a = 0.5;
    CHECK(lemma_decay_harness(h, 0.0, ko1).verdict == DecayVerdict::Decreasing);
    DecayOptions weighted;
    weighted.variant = DecayVariant::Weighted;
    CHECK(lemma_decay_harness(h, -0.5, weighted).verdict == DecayVerdict::Decreasing);
    CHECK_THROWS_AS(lemma_decay_harness(h, 0.0, weighted), Error);
  }
  SECTION("violator") {
    // -20 on (-1, 1) has h~' = (40/pi)/(x^2 - 1), about 4.2 at x = 2
    auto h = sampled(g, [](double x) { return std::abs(x) < 1.0 ? -20.0 : std::abs(x) == 1.0 ? -10.0 : 0.0; });
    auto r = lemma_decay_harness(h, 0.0);
    CHECK(r.verdict == DecayVerdict::HypothesisFailed);
    CHECK(r.hypothesis_max == Approx(40.0 / (3.0 * pi)).epsilon(0.05));
  }
}

TEST_CASE("sub-exponential counterexample", "[verify]") {
  auto r = subexp_counterexample_check();
  CHECK(r.points == 4000);
  CHECK(r.max_mismatch <= 1e-6);
  CHECK(r.at_plus_one == Approx(2.0).epsilon(1e-15));
  // -2 arg f(-1) = 2 sqrt 2 from z^{1/4} = e^{i pi/4} at z = -1
  CHECK(r.at_minus_one == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(subexp_counterexample_check(1), Error);
}

TEST_CASE("probe report JSON", "[verify]") {
  ProbeReport r;
  r.parameter = 1.5;
  r.sizes = {1, 2};
  r.values = {0.5, 0.25};
  r.conditions = {1.0, inf};
  auto j = io::to_json(r);
  CHECK(j["verdict"] == "Undetermined");
  CHECK(j["conditions"][1].is_null());
  CHECK(j["sizes"][1] == 2);
  CHECK_THROWS_AS(io::probe_thresholds_from_json(io::json{{"decay_floor", 0.1}, {"stall_floor", 0.01}}), Error);
}
