#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lsh/point.hpp"

namespace lsh {

/// A one-dimensional quadrature rule: sum_i weights[i] * f(nodes[i]).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the weight exp(-x^2) on R.
Rule1D gauss_hermite_rule(int n);

/// Gauss-Legendre rule on [-1, 1].
Rule1D gauss_legendre_rule(int n);

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

struct AdaptiveOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int max_intervals = 4000;
};

/// Globally adaptive Gauss-Kronrod (G7/K15) quadrature on a finite interval.
/// The error estimate is |K15 - G7| summed over the final partition.
AdaptiveResult adaptive_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                      const AdaptiveOptions& options = {});

/// Integral over R via x = tan(theta).
AdaptiveResult adaptive_real_line(const std::function<double(double)>& f,
                                  const AdaptiveOptions& options = {});

/// Integral over [0, inf) via x = tan(theta).
AdaptiveResult adaptive_half_line(const std::function<double(double)>& f,
                                  const AdaptiveOptions& options = {});

/// The 15 Kronrod nodes on [-1, 1] with Kronrod weights and embedded Gauss
/// weights (zero for Kronrod-only nodes).
struct KronrodPanel {
  std::vector<double> nodes;
  std::vector<double> kronrod_weights;
  std::vector<double> gauss_weights;
};
const KronrodPanel& kronrod15();

/// Surface area of the unit sphere S^{n-1} in R^n.
double unit_sphere_area(std::size_t n);
/// Volume of the unit ball in R^n.
double unit_ball_volume(std::size_t n);

/// Unit directions approximating the uniform measure on S^{n-1}:
///   n = 1: {+1, -1};
///   n = 2: `count` equally spaced angles;
///   n = 3: a spherical Fibonacci lattice of count/2 points plus antipodes;
///   n > 3: seeded Gaussian directions plus antipodes.
/// Odd functions average to zero exactly (up to rounding) in every case.
std::vector<Point> sphere_directions(std::size_t n, std::size_t count);

/// Default angular resolution used by spherical averages and sphere-mean tests.
std::size_t default_sphere_count(std::size_t n);

}  // namespace lsh
