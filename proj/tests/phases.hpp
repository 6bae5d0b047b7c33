#pragma once

#include <vector>

#include "bmtk/grid.hpp"

namespace testing_phases {

struct Hat {
  double center, width, height;
};

/// slope * x plus triangular bumps, sampled on a uniform grid merged with the hat knots.
inline bmtk::PhaseFunction bumpy_line(double slope, const std::vector<Hat>& hats, double half, std::size_t n, double kappa = 0.0) {
  auto xs = bmtk::linspace(-half, half, n);
  std::vector<double> knots;
  for (const auto& h : hats) {
    knots.push_back(h.center - h.width / 2);
    knots.push_back(h.center);
    knots.push_back(h.center + h.width / 2);
  }
  xs = bmtk::merge_grids(xs, knots);
  auto f = [&](double x) {
    double y = slope * x;
    for (const auto& h : hats) {
      double t = 1.0 - std::abs(x - h.center) / (h.width / 2);
      if (t > 0) y += h.height * t;
    }
    return y;
  };
  return bmtk::PhaseFunction::sample(xs, f, kappa);
}

}  // namespace testing_phases
