#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "lsh/error.hpp"
#include "lsh/functionals.hpp"

using namespace lsh;

namespace {

std::vector<ScalarField> battery_1d() {
  return {constant(2.0, 1),        log_linear(Point{0.8}),       cosh_field(0.8),
          power(cosh_field(1.2), 1.5), product(log_linear(Point{0.4}), cosh_field(0.5)),
          convolve(cosh_field(0.9), Mollifier(1, 4))};
}

std::vector<ScalarField> battery_2d() {
  return {cosh_norm(0.6, 2), log_linear(Point{0.3, -0.5}), modulus_holomorphic({{1.0, 0.0}, {0.0, 0.5}, {0.3, 0.0}}),
          exp_sq_norm(0.1, 2)};
}

}  // namespace

TEST(Functionals, ExponentSchedule) {
  EXPECT_DOUBLE_EQ(q_of_r(1.0, 1.0), 1.0);
  EXPECT_NEAR(q_of_r(1.0, 0.5), 4.0, 1e-14);
  EXPECT_NEAR(q_of_r(0.5, 0.5), 16.0, 1e-12);
  const auto grid = default_r_grid();
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(q_of_r(1.3, grid[i]), q_of_r(1.3, grid[i - 1]));
  for (double c : {0.5, 1.0, 2.0}) {
    for (auto [p, q] : {std::pair{1.0, 2.0}, {0.5, 1.0}, {2.0, 7.0}, {1.0, 1.0}}) {
      const double r = contraction_time(c, p, q);
      EXPECT_GT(r, 0.0);
      EXPECT_LE(r, 1.0);
      EXPECT_NEAR(q_of_r(c, r) * p, q, 1e-12 * q);
    }
  }
  EXPECT_THROW(contraction_time(1.0, 2.0, 1.0), std::invalid_argument);
  HCParams bad;
  bad.r_grid = {0.9, 0.8};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_NO_THROW(HCParams{}.validate());
}

TEST(Functionals, EntropyClosedForms) {
  const Density mu = make_gaussian();
  EXPECT_NEAR(entropy(constant(3.0, 1), mu).value, 0.0, 1e-14);
  const double lam = 0.8;
  const double expect = lam * lam / 2.0 * std::exp(lam * lam / 2.0);
  EXPECT_NEAR(expect, 0.440681, 1e-6);
  EXPECT_NEAR(entropy(log_linear(Point{lam}), mu).value, expect, 1e-10);
  // cosh against Simpson
  auto g = [](double x) { return std::cosh(0.8 * x); };
  const double n1 = oracle::simpson([&](double x) { return g(x) * oracle::gaussian_pdf(x); }, -20, 20);
  const double ent = oracle::simpson([&](double x) { return g(x) * std::log(g(x) / n1) * oracle::gaussian_pdf(x); }, -20, 20);
  EXPECT_NEAR(entropy(cosh_field(0.8), mu).value, ent, 1e-9);
}

TEST(Functionals, EntropyIsHomogeneousAndNonNegative) {
  const std::vector<Density> ms = {make_gaussian(), make_gen_exponential(1.0, 1.0, 1), make_uniform_ball(2.0, 1)};
  for (const auto& mu : ms) {
    for (const auto& g : battery_1d()) {
      const double e = entropy(g, mu).value;
      EXPECT_GE(e, -1e-12) << g.describe() << " " << mu.describe();
      EXPECT_NEAR(entropy(scale(g, 3.5), mu).value, 3.5 * e, 1e-10 * std::max(1.0, e)) << g.describe();
    }
  }
  const Density g2 = make_gaussian(1.0, 2);
  for (const auto& g : battery_2d()) EXPECT_GE(entropy(g, g2).value, -1e-12) << g.describe();
}

TEST(Functionals, DivergentNormIsReported) {
  EXPECT_THROW(entropy(log_linear(Point{0.8}), make_poly_tail(3.0)), QuadratureError);
}

TEST(Functionals, EulerEnergyClosedForms) {
  const Density mu = make_gaussian();
  EXPECT_NEAR(euler_energy(constant(3.0, 1), mu).value, 0.0, 1e-14);
  const double expect = 0.64 * std::exp(0.32);
  EXPECT_NEAR(expect, 0.881362, 1e-6);
  EXPECT_NEAR(euler_energy(log_linear(Point{0.8}), mu).value, expect, 1e-10);
  const double oracle_val = oracle::simpson(
      [](double x) { return x * 0.8 * std::sinh(0.8 * x) * oracle::gaussian_pdf(x); }, -20, 20);
  EXPECT_NEAR(euler_energy(cosh_field(0.8), mu).value, oracle_val, 1e-9);
}

TEST(Functionals, EulerEnergyPositiveOnLshUnderRotationInvariantMeasures) {
  for (const auto& mu : {make_gaussian(), make_gen_exponential(1.0, 1.5, 1)}) {
    for (const auto& g : battery_1d()) EXPECT_GE(euler_energy(g, mu).value, -1e-9) << g.describe();
  }
  for (const auto& mu : {make_gaussian(1.0, 2), make_gen_exponential(1.0, 1.0, 2)}) {
    for (const auto& g : battery_2d()) EXPECT_GE(euler_energy(g, mu).value, -1e-7) << g.describe();
  }
}

TEST(Functionals, AlphaClosedForms) {
  const Density mu = make_gaussian();
  const ScalarField f = log_linear(Point{0.8});
  EXPECT_NEAR(alpha(f, mu, 1.0, 1.0).value, std::exp(0.32), 1e-12);
  for (double r : default_r_grid()) {
    EXPECT_NEAR(alpha(f, mu, 1.0, r).value / std::exp(0.32), 1.0, 1e-10) << r;
    EXPECT_NEAR(alpha(constant(1.0, 1), mu, 1.0, r).value, 1.0, 1e-12);
  }
  // c = 0.5: alpha(r) = exp(lambda^2 / (2 r^2))
  EXPECT_NEAR(alpha(f, mu, 0.5, 0.8).value, std::exp(0.32 / 0.64), 1e-9);
  EXPECT_NEAR(alpha(scale(cosh_field(0.7), 2.5), mu, 1.0, 0.7).value, 2.5 * alpha(cosh_field(0.7), mu, 1.0, 0.7).value,
              1e-12);
}

TEST(Functionals, AlphaRejectsHugeExponents) {
  try {
    alpha(log_linear(Point{0.8}), make_gaussian(), 0.5, 0.1);
    FAIL();
  } catch (const QuadratureError& e) {
    EXPECT_NE(std::string(e.what()).find("raise the r_grid minimum"), std::string::npos);
  }
}

TEST(Functionals, AlphaPrimeClosedForms) {
  const Density mu = make_gaussian();
  for (double r : {0.6, 0.8, 1.0}) {
    EXPECT_NEAR(alpha_prime_analytic(constant(2.0, 1), mu, 1.0, r).value, 0.0, 1e-13);
    EXPECT_NEAR(alpha_prime_analytic(log_linear(Point{0.8}), mu, 1.0, r).value, 0.0, 1e-9);
  }
  // c = 0.5: alpha' = -lambda^2 r^{-3} exp(lambda^2 / (2 r^2))
  const double r = 0.8;
  EXPECT_NEAR(alpha_prime_analytic(log_linear(Point{0.8}), mu, 0.5, r).value,
              -0.64 / (r * r * r) * std::exp(0.32 / (r * r)), 1e-8);
}

TEST(Functionals, AlphaPrimeMatchesFiniteDifferences) {
  const Density mu = make_gaussian();
  const NodeSet ns = build_nodes(mu, {});
  for (const auto& f : battery_1d()) {
    for (double r : {0.6, 0.7, 0.8, 0.9, 1.0}) {
      const double a = alpha_prime_analytic(f, ns, 1.0, r).value;
      const double fd = alpha_prime_fd(f, ns, 1.0, r);
      const double al = alpha(f, ns, 1.0, r).value;
      EXPECT_LE(std::abs(a - fd), 1e-3 * std::max(std::abs(a), std::abs(fd)) + 1e-7 * al)
          << f.describe() << " r=" << r << " a=" << a << " fd=" << fd;
    }
  }
  const Density g2 = make_gaussian(1.0, 2);
  const NodeSet ns2 = build_nodes(g2, {});
  for (const auto& f : battery_2d()) {
    for (double r : {0.7, 1.0}) {
      const double a = alpha_prime_analytic(f, ns2, 1.2, r).value;
      const double fd = alpha_prime_fd(f, ns2, 1.2, r);
      EXPECT_LE(std::abs(a - fd), 1e-3 * std::max(std::abs(a), std::abs(fd)) + 1e-7 * alpha(f, ns2, 1.2, r).value)
          << f.describe() << " r=" << r;
    }
  }
}

TEST(Functionals, BracketAtOneIsTheLogSobolevDeficit) {
  const Density mu = make_gaussian();
  for (const auto& f : battery_1d()) {
    for (double c : {0.8, 1.0}) {
      const double deficit = 0.5 * c * euler_energy(f, mu).value - entropy(f, mu).value;
      EXPECT_NEAR(hc_bracket(f, mu, c, 1.0).value, deficit, 1e-10 * std::max(1.0, std::abs(deficit)));
    }
  }
}

TEST(Functionals, BracketVanishesInTheEqualityCase) {
  const Density mu = make_gaussian();
  for (double lam : {0.4, 0.8, 1.2}) {
    for (double r : default_r_grid()) {
      EXPECT_NEAR(hc_bracket(log_linear(Point{lam}), mu, 1.0, r).value, 0.0, 1e-9) << lam << " " << r;
    }
  }
}

TEST(Functionals, BracketDerivativeIdentity) {
  const Density mu = make_gaussian();
  const NodeSet ns = build_nodes(mu, {});
  for (const auto& f : battery_1d()) {
    for (double r : {0.6, 0.8, 1.0}) {
      const double a = alpha(f, ns, 1.0, r).value;
      const double ap = alpha_prime_analytic(f, ns, 1.0, r).value;
      const double b = hc_bracket(f, ns, 1.0, r).value;
      EXPECT_NEAR(bracket_from_derivative(1.0, r, a, ap), b, 1e-9 * std::max(1.0, std::abs(b))) << f.describe();
    }
  }
}

TEST(Functionals, BracketSignIsScaleInvariant) {
  const Density mu = make_gaussian();
  const ScalarField f = cosh_field(0.9);
  for (double r : {0.7, 0.9}) {
    const double b1 = hc_bracket(f, mu, 0.8, r).value;
    const double b2 = hc_bracket(scale(f, 4.0), mu, 0.8, r).value;
    EXPECT_EQ(b1 > 0, b2 > 0);
  }
}

TEST(Functionals, ZerosAreFlooredAndReported) {
  const ScalarField ramp = from_functions(
      1, [](const Point& x) { return std::max(0.0, x[0]); }, nullptr, false, "max(0, x)");
  QuadratureSpec q;
  q.scheme = Scheme::tensor_trapezoid;
  q.nodes_per_axis = 4001;
  const FunctionalValue e = entropy(ramp, make_gaussian(), q);
  EXPECT_GT(e.floored, 10u);
  // E[x; x > 0] = 1/sqrt(2 pi); Ent = int_0^inf x ln(x / m) dmu
  const double m = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double expect = oracle::simpson([&](double x) { return x * std::log(x / m) * oracle::gaussian_pdf(x); }, 1e-300, 20.0, 400000);
  EXPECT_NEAR(e.value, expect, 5e-5);
}
