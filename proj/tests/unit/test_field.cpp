#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "lsh/error.hpp"
#include "lsh/field.hpp"
#include "lsh/random.hpp"
#include "lsh/rules.hpp"

using namespace lsh;

namespace {

// Five-point Laplacian of ln f.
double log_laplacian(const ScalarField& f, const Point& x, double h = 1e-3) {
  double lap = 0.0;
  const double c = f.log_value(x);
  for (std::size_t i = 0; i < x.dim(); ++i) {
    Point p = x;
    Point m = x;
    p[i] += h;
    m[i] -= h;
    lap += (f.log_value(p) - 2.0 * c + f.log_value(m)) / (h * h);
  }
  return lap;
}

std::vector<ScalarField> battery_1d() {
  return {constant(2.0, 1),
          log_linear(Point{0.8}),
          cosh_field(0.8),
          power(cosh_field(1.2), 1.5),
          product(log_linear(Point{0.4}), cosh_field(0.5)),
          dilate(cosh_field(1.0), 0.7),
          exp_sq_norm(0.2, 1),
          cosh_norm(0.9, 1)};
}

std::vector<ScalarField> battery_2d() {
  return {log_linear(Point{0.3, -0.6}),
          cosh_field(Point{0.5, 0.2}),
          modulus_holomorphic({{1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}),
          exp_sq_norm(0.3, 2),
          cosh_norm(0.7, 2),
          power(modulus_holomorphic({{0.5, 0.5}, {1.0, 0.0}}), 2.5)};
}

}  // namespace

TEST(Builders, LogLinear) {
  const ScalarField one = log_linear(Point{0.0});
  EXPECT_EQ(one.value(Point{3.7}), 1.0);
  EXPECT_EQ(one.gradient(Point{3.7})[0], 0.0);
  const ScalarField f = log_linear(Point{0.8});
  EXPECT_NEAR(f.value(Point{1.0}), 2.22554, 1e-5);
  EXPECT_EQ(f.certificate(), Certificate::log_linear);
  const ScalarField g = log_linear(Point{0.4, -1.1, 0.2});
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Point x{rng.normal(), rng.normal(), rng.normal()};
    EXPECT_NEAR(log_laplacian(g, x), 0.0, 1e-6);
  }
}

TEST(Builders, ModulusHolomorphic) {
  const ScalarField z = modulus_holomorphic({{0.0, 0.0}, {1.0, 0.0}});
  EXPECT_NEAR(z.value(Point{3.0, 4.0}), 5.0, 1e-14);
  const ScalarField p = modulus_holomorphic({{1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}});
  EXPECT_EQ(p.value(Point{0.0, 1.0}), 0.0);  // z^2 + 1 vanishes at i
  // Analytic log-gradient against finite differences of ln|p|.
  const Point x{0.7, -0.4};
  const Point g = p.log_gradient(x);
  const Point fd = fd_gradient([&](const Point& y) { return p.log_value(y); }, x);
  EXPECT_NEAR(g[0], fd[0], 1e-8);
  EXPECT_NEAR(g[1], fd[1], 1e-8);
}

TEST(Builders, PowerOfLogLinear) {
  const ScalarField a = power(log_linear(Point{0.6}), 2.5);
  const ScalarField b = log_linear(Point{1.5});
  for (double x : {-2.0, 0.0, 0.3, 1.7}) EXPECT_NEAR(a.value(Point{x}) / b.value(Point{x}), 1.0, 1e-14);
  EXPECT_THROW(power(b, 0.0), std::invalid_argument);
}

TEST(Builders, CoshIsLogConvex) {
  const ScalarField f = cosh_field(1.0);
  for (double x : {-3.0, -0.5, 0.0, 0.4, 2.5}) {
    // Oracle: second difference of ln cosh equals sech^2 > 0.
    const double h = 1e-3;
    const double d2 = (std::log(std::cosh(x + h)) - 2.0 * std::log(std::cosh(x)) + std::log(std::cosh(x - h))) / (h * h);
    EXPECT_GT(d2, 0.0);
    EXPECT_NEAR(d2, 1.0 / (std::cosh(x) * std::cosh(x)), 1e-5);
  }
  EXPECT_TRUE(is_lsh(f).passed);
  EXPECT_NEAR(f.value(Point{400.0}) / std::exp(400.0 - std::numbers::ln2), 1.0, 1e-12);
}

TEST(Builders, ExpSubharmonicValidation) {
  Potential u;
  u.linear = Point{0.5, -0.2};
  u.quadratic = 0.3;
  const ScalarField f = exp_subharmonic(u);
  EXPECT_TRUE(is_lsh(f).passed);
  u.quadratic = -0.3;
  try {
    exp_subharmonic(u);
    FAIL() << "expected NotSubharmonic";
  } catch (const NotSubharmonic& e) {
    EXPECT_EQ(e.center().dim(), 2U);
    EXPECT_GT(e.radius(), 0.0);
  }
}

TEST(Dilation, IdentityAndSemigroup) {
  const ScalarField f = product(cosh_field(0.9), log_linear(Point{0.3}));
  const ScalarField same = dilate(f, 1.0);
  EXPECT_EQ(same.model(), f.model());
  Rng rng(11);
  for (int i = 0; i < 30; ++i) {
    const Point x{3.0 * rng.normal()};
    const double r = 0.2 + 0.8 * rng.uniform();
    const double s = 0.2 + 0.8 * rng.uniform();
    EXPECT_NEAR(dilate(dilate(f, r), s).log_value(x), dilate(f, r * s).log_value(x), 1e-13);
  }
  EXPECT_THROW(dilate(f, 0.0), std::invalid_argument);
  EXPECT_THROW(dilate(f, 1.2), std::invalid_argument);
  EXPECT_EQ(dilate(f, 0.5).certificate(), Certificate::dilation);
}

TEST(Dilation, LogLinearRescales) {
  for (double r : {0.3, 0.75}) {
    const ScalarField a = dilate(log_linear(Point{1.1, -0.4}), r);
    const ScalarField b = log_linear(Point{1.1 * r, -0.4 * r});
    for (const Point& x : {Point{1.0, 2.0}, Point{-0.3, 0.9}}) EXPECT_NEAR(a.value(x), b.value(x), 1e-13);
  }
}

TEST(Euler, ClosedForms) {
  EXPECT_EQ(euler(constant(3.0, 2), Point{1.0, -2.0}), 0.0);
  EXPECT_NEAR(euler(log_linear(Point{1.0}), Point{1.0}), std::numbers::e, 1e-14);
  // Smooth field without gradient goes through finite differences.
  const ScalarField custom = from_functions(
      1, [](const Point& x) { return std::exp(x[0]); }, nullptr, true, "exp");
  EXPECT_NEAR(euler(custom, Point{1.0}), std::numbers::e, 1e-8);
  const ScalarField rough = from_functions(
      1, [](const Point& x) { return std::abs(x[0]); }, nullptr, false, "abs");
  EXPECT_THROW(euler(rough, Point{1.0}), std::invalid_argument);
}

TEST(Euler, ChainRuleUnderDilation) {
  // E(f_r)(x) = (Ef)(rx).
  for (const ScalarField& f : battery_1d()) {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      const Point x{2.0 * rng.normal()};
      const double r = 0.3 + 0.7 * rng.uniform();
      const double lhs = euler(dilate(f, r), x);
      const double rhs = euler(f, r * x);
      EXPECT_NEAR(lhs, rhs, 1e-8 * std::max(1.0, std::abs(rhs))) << f.describe();
    }
  }
}

TEST(Euler, RotationCommutes) {
  // E(k o u)(y) = (Ek)(uy) for a rotation u of the plane.
  const ScalarField k = modulus_holomorphic({{1.0, 0.5}, {0.0, 0.0}, {1.0, 0.0}});
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    auto rot = [t](const Point& y) {
      return Point{std::cos(t) * y[0] - std::sin(t) * y[1], std::sin(t) * y[0] + std::cos(t) * y[1]};
    };
    const ScalarField ku = from_functions(
        2, [&](const Point& y) { return k.value(rot(y)); }, nullptr, true, "k o u");
    const Point y{rng.normal(), rng.normal()};
    const double expected = euler(k, rot(y));
    EXPECT_NEAR(euler(ku, y), expected, 1e-6 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  auto check = [](const ScalarField& f, const Point& x) {
    const Point g = f.gradient(x);
    const Point fd = fd_gradient([&](const Point& y) { return f.value(y); }, x);
    for (std::size_t i = 0; i < x.dim(); ++i) {
      EXPECT_NEAR(g[i], fd[i], 1e-5 * std::max(1.0, std::abs(fd[i]))) << f.describe();
    }
  };
  Rng rng(13);
  for (const ScalarField& f : battery_1d()) {
    for (int i = 0; i < 10; ++i) check(f, Point{1.5 * rng.normal()});
  }
  for (const ScalarField& f : battery_2d()) {
    for (int i = 0; i < 10; ++i) check(f, Point{rng.normal(), rng.normal()});
  }
}

TEST(Mollifier, UnitMassAndShrinkingSupport) {
  for (std::size_t n = 1; n <= 3; ++n) {
    double prev = INFINITY;
    for (int k : {1, 2, 4, 8}) {
      const Mollifier phi(n, k);
      EXPECT_NEAR(phi.mass(), 1.0, 1e-8) << n << " " << k;
      double sum = 0.0;
      for (double w : phi.weights()) sum += w;
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_LT(phi.support_radius(), prev);
      prev = phi.support_radius();
    }
  }
  EXPECT_THROW(Mollifier(1, 0), std::invalid_argument);
}

TEST(Mollifier, UnitBumpMassMatchesIndependentQuadrature) {
  // Z_1 = int_{-1}^{1} exp(-1/(1-t^2)) dt by Simpson on a fine grid.
  const double z = oracle::simpson([](double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; },
                                   -1.0, 1.0, 200000);
  EXPECT_NEAR(z, 0.4439938161680793, 1e-10);
  const Mollifier phi(1, 1);
  EXPECT_NEAR(phi.value(Point{0.0}), std::exp(-1.0) / z, 1e-9);
}

TEST(Mollifier, ScalingQuantityIsConstant) {
  // Vol(supp phi_s) * ||phi_s||_{p'}^p does not depend on s.
  for (std::size_t n : {1, 2}) {
    for (double p : {1.0, 2.0, 3.0}) {
      const double pc = p == 1.0 ? INFINITY : p / (p - 1.0);
      auto quantity = [&](const Mollifier& m) { return m.support_volume() * std::pow(m.lp_norm(pc), p); };
      const double a = quantity(Mollifier(n, 1));
      const double b = quantity(Mollifier(n, 5));
      EXPECT_NEAR(b / a, 1.0, 1e-8) << n << " " << p;
    }
  }
}

TEST(Convolution, PreservesConstants) {
  const ScalarField c = convolve(constant(3.5, 2), Mollifier(2, 3));
  EXPECT_NEAR(c.value(Point{0.4, -1.0}), 3.5, 1e-13);
  EXPECT_EQ(c.certificate(), Certificate::mollified);
}

TEST(Convolution, LogLinearFactor) {
  const double lambda = 1.3;
  const Mollifier phi(1, 2);
  const ScalarField g = convolve(log_linear(Point{lambda}), phi);
  // m(lambda) = int exp(-lambda y) phi(y) dy by independent Simpson quadrature.
  const double s = phi.support_radius();
  const double m = oracle::simpson([&](double y) { return std::exp(-lambda * y) * phi.value(Point{y}); }, -s, s, 200000);
  EXPECT_GE(m, 1.0);
  for (double x : {-1.0, 0.0, 2.0}) EXPECT_NEAR(g.value(Point{x}) / std::exp(lambda * x), m, 1e-9);
  const ScalarField d = dilated_convolve(log_linear(Point{lambda}), phi, 0.6);
  for (double x : {-1.0, 0.5}) EXPECT_NEAR(d.value(Point{x}) / std::exp(0.6 * lambda * x), m, 1e-6);
}

TEST(Convolution, DilatedConvolutionChangeOfVariables) {
  // (f * phi)_r = f_r * (r^n phi)_r; the right side is the mollifier with radius s / r.
  const ScalarField f = modulus_holomorphic({{1.0, 0.0}, {0.5, 0.2}, {1.0, 0.0}});
  const double r = 0.7;
  const Mollifier phi(2, 2);
  const ScalarField lhs = dilated_convolve(f, phi, r);
  const ScalarField rhs = convolve(dilate(f, r), Mollifier(2, 2, 1.0 / r));
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    const Point x{rng.normal(), rng.normal()};
    EXPECT_NEAR(lhs.value(x), rhs.value(x), 1e-12 * std::max(1.0, rhs.value(x)));
  }
}

TEST(Convolution, GradientMatchesFiniteDifferences) {
  const ScalarField g = convolve(cosh_field(1.1), Mollifier(1, 2));
  const ScalarField h = convolve(from_functions(
                                     1, [](const Point& x) { return std::exp(0.7 * x[0]); }, nullptr, true, "exp"),
                                 Mollifier(1, 2));
  for (double x : {-1.3, 0.2, 0.9}) {
    const Point p{x};
    const double fd = fd_gradient([&](const Point& y) { return g.value(y); }, p)[0];
    EXPECT_NEAR(g.gradient(p)[0], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    EXPECT_NEAR(h.gradient(p)[0], 0.7 * h.value(p), 1e-6 * h.value(p));
  }
}

TEST(Convolution, MollifiedHolomorphicIsLsh) {
  const ScalarField f = convolve(modulus_holomorphic({{1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}), Mollifier(2, 4));
  EXPECT_TRUE(is_lsh(f).passed);
}

TEST(SphericalAverage, InvariantFieldsUnchanged) {
  const ScalarField f = cosh_norm(0.8, 2);
  const ScalarField avg = spherical_average(f);
  for (const Point& x : {Point{0.3, 0.4}, Point{-1.0, 2.0}}) EXPECT_NEAR(avg.value(x), f.value(x), 1e-13);
  const ScalarField f3 = exp_sq_norm(0.2, 3);
  const ScalarField avg3 = spherical_average(f3);
  EXPECT_NEAR(avg3.value(Point{0.3, -0.2, 1.0}), f3.value(Point{0.3, -0.2, 1.0}), 1e-12);
  EXPECT_EQ(avg.certificate(), Certificate::averaged);
  EXPECT_THROW(spherical_average(log_linear(Point::filled(4, 0.1))), std::invalid_argument);
}

TEST(SphericalAverage, SaddleCancels) {
  const ScalarField saddle = from_functions(
      2, [](const Point& x) { return x[0] * x[0] - x[1] * x[1] + 5.0; }, nullptr, true, "x^2 - y^2 + 5");
  const ScalarField avg = spherical_average(saddle);
  for (const Point& x : {Point{1.0, 0.0}, Point{0.6, 1.7}}) EXPECT_NEAR(avg.value(x), 5.0, 1e-12);
}

TEST(SphericalAverage, ExponentialGivesBesselI0) {
  const ScalarField avg = spherical_average(log_linear(Point{1.0, 0.0}));
  for (double t : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(avg.value(Point{0.0, t}), oracle::bessel_i0(t), 1e-5);
    EXPECT_NEAR(avg.value(Point{t / std::sqrt(2.0), t / std::sqrt(2.0)}), oracle::bessel_i0(t), 1e-5);
  }
  EXPECT_NEAR(oracle::bessel_i0(1.0), 1.266065877752008, 1e-14);
}

TEST(SphericalAverage, OneDimensionalIsEvenPart) {
  const ScalarField avg = spherical_average(log_linear(Point{0.9}));
  EXPECT_NEAR(avg.value(Point{1.3}), std::cosh(0.9 * 1.3), 1e-13);
  EXPECT_NEAR(avg.gradient(Point{1.3})[0], 0.9 * std::sinh(0.9 * 1.3), 1e-12);
}

TEST(IsLsh, GaussianBumpFails) {
  const ScalarField f = from_functions(
      1, [](const Point& x) { return std::exp(-x[0] * x[0]); }, nullptr, true, "exp(-x^2)");
  const LshTestReport rep = is_lsh(f);
  EXPECT_FALSE(rep.passed);
  ASSERT_TRUE(rep.witness.has_value());
  EXPECT_GT(rep.witness_radius, 0.0);
}

TEST(IsLsh, LogLinearPasses) {
  EXPECT_TRUE(is_lsh(log_linear(Point{2.0})).passed);
  EXPECT_TRUE(is_lsh(log_linear(Point{0.3, -1.0})).passed);
  EXPECT_TRUE(is_lsh(log_linear(Point{0.3, -1.0, 0.5})).passed);
}

TEST(IsLsh, HolomorphicWithZerosPassesAndReportsSkips) {
  const ScalarField f = modulus_holomorphic({{1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}});
  std::vector<Point> probes = default_probes(2);
  probes.push_back(Point{0.0, 1.0});
  probes.push_back(Point{0.0, -1.0});
  const LshTestReport rep = is_lsh(f, probes, default_radii());
  EXPECT_TRUE(rep.passed);
  EXPECT_GE(rep.skipped_zero, 2U);
  EXPECT_FALSE(rep.note.empty());
}

TEST(IsLsh, ClosureUnderPowerProductConvolution) {
  const std::vector<Point> fresh = default_probes(2, 64, 99, 1.5);
  const ScalarField a = modulus_holomorphic({{0.3, 0.1}, {1.0, 0.0}});
  const ScalarField b = cosh_field(Point{0.6, 0.8});
  for (const ScalarField& f : {power(a, 0.7), product(a, b), convolve(product(a, b), Mollifier(2, 3)),
                               dilate(product(a, b), 0.6)}) {
    EXPECT_TRUE(is_lsh(f, fresh, default_radii()).passed) << f.describe();
  }
}

TEST(IsLsh, CertifiedBatteryPasses) {
  for (const ScalarField& f : battery_1d()) EXPECT_TRUE(is_lsh(f).passed) << f.describe();
  for (const ScalarField& f : battery_2d()) EXPECT_TRUE(is_lsh(f).passed) << f.describe();
}
