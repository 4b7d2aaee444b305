#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "../oracles.hpp"
#include "lsh/error.hpp"
#include "lsh/measure.hpp"
#include "lsh/random.hpp"

using namespace lsh;

namespace {

Point rotate2(const Point& x, double angle) {
  return Point{std::cos(angle) * x[0] - std::sin(angle) * x[1], std::sin(angle) * x[0] + std::cos(angle) * x[1]};
}

// Product of two Householder reflections: a proper rotation of R^3.
Point rotate3(const Point& x, const Point& u, const Point& v) {
  Point y = x - (2.0 * dot(u, x)) * u;
  return y - (2.0 * dot(v, y)) * v;
}

Point unit_random(Rng& rng, std::size_t n) {
  Point p(n);
  for (auto& v : p) v = rng.normal();
  return (1.0 / norm(p)) * p;
}

}  // namespace

TEST(Builtins, GaussianNormalization) {
  for (std::size_t n = 1; n <= 3; ++n) {
    const Density g = make_gaussian(1.0, n);
    EXPECT_NEAR(g.norm_const() / std::pow(2.0 * std::numbers::pi, n / 2.0), 1.0, 1e-10) << n;
  }
  const Density wide = make_gaussian(2.5, 1);
  EXPECT_NEAR(wide.norm_const(), 2.5 * std::sqrt(2.0 * std::numbers::pi), 1e-9);
}

TEST(Builtins, TwoSidedExponentialNormalization) {
  const Density lap = make_gen_exponential(1.0, 1.0, 1);
  EXPECT_NEAR(lap.norm_const(), 2.0, 1e-10);
  EXPECT_NEAR(lap.eval(Point{1.0}), 0.5 * std::exp(-1.0), 1e-12);
}

TEST(Builtins, PolyTailNormalizationMatchesArctan) {
  // (1 + x^2)^-1 integrates to arctan(+inf) - arctan(-inf).
  const double inf = std::numeric_limits<double>::infinity();
  const double oracle = std::atan(inf) - std::atan(-inf);
  const Density c = make_poly_tail(1.0);
  EXPECT_NEAR(c.norm_const(), oracle, 1e-9);
  EXPECT_NEAR(c.eval(Point{0.0}), 1.0 / std::numbers::pi, 1e-10);
  // alpha = 2: int (1 + x^2)^-2 = pi / 2.
  EXPECT_NEAR(make_poly_tail(2.0).norm_const(), std::numbers::pi / 2.0, 1e-9);
}

TEST(Builtins, UniformBall) {
  const Density b = make_uniform_ball(1.0, 1);
  EXPECT_NEAR(b.eval(Point{0.3}), 0.5, 1e-12);
  EXPECT_EQ(b.eval(Point{2.0}), 0.0);
  const Density b2 = make_uniform_ball(2.0, 2);
  EXPECT_NEAR(b2.eval(Point{0.1, 0.2}), 1.0 / (4.0 * std::numbers::pi), 1e-10);
  EXPECT_TRUE(b2.compact_support());
}

TEST(Builtins, RejectsBadParameters) {
  EXPECT_THROW(make_poly_tail(0.5), std::invalid_argument);
  EXPECT_THROW(make_poly_tail(0.2), std::invalid_argument);
  EXPECT_THROW(make_gaussian(0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_gaussian(-1.0, 1), std::invalid_argument);
  EXPECT_THROW(make_gen_exponential(1.0, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_uniform_ball(-2.0, 1), std::invalid_argument);
  FamilyParams p;
  EXPECT_THROW(make_builtin(Family::poly_tail, p, 2), std::invalid_argument);
  EXPECT_THROW(make_gaussian(1.0, 0), std::invalid_argument);
}

TEST(Eval, StandardGaussianValues) {
  const Density g = make_gaussian();
  EXPECT_NEAR(g.eval(Point{0.0}), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(g.eval(Point{1.0}), oracle::gaussian_pdf(1.0), 1e-15);
  EXPECT_NEAR(g.eval(Point{1.0}), 0.241971, 1e-6);
  EXPECT_THROW(g.eval(Point{1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(g.eval(Point{NAN}), std::invalid_argument);
}

TEST(Eval, TruncationRadii) {
  EXPECT_NEAR(make_gaussian(1.0, 1).truncation_radius(), 8.0, 1e-12);
  EXPECT_NEAR(make_gaussian(2.0, 4).truncation_radius(), 32.0, 1e-12);
  // Laplace tail mass beyond R is exp(-R); R = ln(1e12).
  EXPECT_NEAR(make_gen_exponential(1.0, 1.0, 1).truncation_radius(), std::log(1e12), 1e-6);
}

TEST(Properties, RotationInvariantBuiltinsAgreeUnderRotations) {
  Rng rng(42);
  const Density gauss2 = make_gaussian(1.3, 2);
  const Density gen3 = make_gen_exponential(0.7, 1.5, 3);
  for (int i = 0; i < 50; ++i) {
    const Point x{rng.normal(), rng.normal()};
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    EXPECT_NEAR(gauss2.log_density(rotate2(x, angle)), gauss2.log_density(x), 1e-12);
    const Point y{rng.normal(), rng.normal(), rng.normal()};
    const Point yr = rotate3(y, unit_random(rng, 3), unit_random(rng, 3));
    EXPECT_NEAR(gen3.log_density(yr), gen3.log_density(y), 1e-12);
  }
}

TEST(Composites, MixtureEndpointsAndIdempotence) {
  const Density g = make_gaussian();
  const Density h = make_gaussian(1.0, 1, Point{2.0});
  const Density m0 = mix(g, h, 0.0);
  const Density self = mix(g, g, 0.5);
  for (double x : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
    EXPECT_NEAR(m0.eval(Point{x}), g.eval(Point{x}), 1e-15);
    EXPECT_NEAR(self.eval(Point{x}), g.eval(Point{x}), 1e-15);
  }
  EXPECT_EQ(m0.provenance(), Provenance::mixture);
  EXPECT_THROW(mix(g, make_gaussian(1.0, 2), 0.5), std::invalid_argument);
  EXPECT_THROW(mix(g, h, 1.5), std::invalid_argument);
  EXPECT_DOUBLE_EQ(mix(g, make_gaussian(3.0), 0.3).truncation_radius(), 24.0);
}

TEST(Composites, ProductOfGaussiansFactorizes) {
  const Density p = product(make_gaussian(), make_gaussian());
  EXPECT_EQ(p.dim(), 2U);
  EXPECT_TRUE(p.rotation_invariant());
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Point x{2.0 * rng.normal(), 2.0 * rng.normal()};
    const double expected = std::exp(-norm_sq(x) / 2.0) / (2.0 * std::numbers::pi);
    EXPECT_NEAR(p.eval(x) / expected, 1.0, 1e-12);
  }
}

TEST(Composites, ConvolutionOfGaussiansIsGaussian) {
  const Density c = convolve_measures(make_gaussian(), make_gaussian());
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = -5.0 + 0.01 * i + 0.0037;
    worst = std::max(worst, std::abs(c.eval(Point{x}) - oracle::gaussian_pdf(x, std::sqrt(2.0))));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Composites, NarrowGaussianIsApproximateIdentity) {
  const Density mu = make_gen_exponential(1.0, 2.0, 1);
  const Density c = convolve_measures(make_gaussian(0.01), mu);
  for (double x : {-2.0, -0.7, 0.0, 0.33, 1.5}) {
    EXPECT_NEAR(c.eval(Point{x}) / mu.eval(Point{x}), 1.0, 1e-3) << x;
  }
}

TEST(Composites, ConvolutionRejectsHighDimension) {
  try {
    convolve_measures(make_gaussian(1.0, 4), make_gaussian(1.0, 4));
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("monte_carlo"), std::string::npos);
  }
}

TEST(Composites, ConvolutionInTwoDimensions) {
  const Density c = convolve_measures(make_gaussian(1.0, 2), make_gaussian(0.5, 2));
  const double s2 = 1.25;
  for (const Point& x : {Point{0.0, 0.0}, Point{1.0, -0.5}, Point{2.2, 1.7}}) {
    const double expected = std::exp(-norm_sq(x) / (2.0 * s2)) / (2.0 * std::numbers::pi * s2);
    EXPECT_NEAR(c.eval(x) / expected, 1.0, 1e-5);
  }
}

TEST(Composites, PerturbationBounds) {
  const Density base = make_gaussian();
  const Density pert = perturb(base, 0.3, 1.5);
  const auto info = perturbation_info(pert);
  ASSERT_TRUE(info.has_value());
  EXPECT_NEAR(info->upper / info->lower, 1.3 / 0.7, 1e-12);
  for (double x = -6.0; x <= 6.0; x += 0.25) {
    const double r = pert.eval(Point{x}) / base.eval(Point{x});
    EXPECT_GE(r, info->lower * (1.0 - 1e-12));
    EXPECT_LE(r, info->upper * (1.0 + 1e-12));
  }
  EXPECT_FALSE(perturbation_info(base).has_value());
  EXPECT_THROW(perturb(base, 1.0, 1.0), std::invalid_argument);
  // Mass of (1 + a cos(w x)) under N(0, 1) is 1 + a exp(-w^2 / 2).
  EXPECT_NEAR(pert.norm_const(), 1.0 + 0.3 * std::exp(-1.5 * 1.5 / 2.0), 1e-10);
}

TEST(Regularity, GaussianRatioMaximizedAtOrigin) {
  const Density g = make_gaussian();
  EXPECT_NEAR(regularity_constant(g, 0.0, 2.0, 0.0), 1.0, 1e-8);
  for (double a : {1.1, 1.5, 2.0}) EXPECT_NEAR(regularity_constant(g, 0.0, a, 0.0), 1.0, 1e-8);
}

TEST(Regularity, GaussianWeightedRatio) {
  const Density g = make_gaussian();
  // sup x^2 exp(-3x^2/2) by independent scan.
  const double expected = oracle::maximize_1d([](double x) { return x * x * std::exp(-1.5 * x * x); }, 0.0, 8.0);
  EXPECT_NEAR(expected, 2.0 / 3.0 * std::exp(-1.0), 1e-12);
  EXPECT_NEAR(regularity_constant(g, 2.0, 2.0, 0.0), expected, 1e-4);
  EXPECT_NEAR(regularity_constant(g, 2.0, 2.0, 0.0), 0.245253, 1e-4);
}

TEST(Regularity, GaussianWithShift) {
  const Density g = make_gaussian();
  EXPECT_NEAR(regularity_constant(g, 0.0, 2.0, 1.0), oracle::gaussian_c0(2.0, 1.0), 1e-7);
  EXPECT_NEAR(regularity_constant(g, 0.0, 1.5, 0.5), oracle::gaussian_c0(1.5, 0.5), 1e-7);
}

TEST(Regularity, PolyTailTypeZero) {
  const Density c = make_poly_tail(1.0);
  EXPECT_NEAR(regularity_constant(c, 0.0, 1.5, 0.0), 1.0, 1e-8);
}

TEST(Regularity, PolyTailNotTypeOne) {
  const Density c = make_poly_tail(1.0);
  const RegularityEstimate e = estimate_regularity(c, 1.0, 2.0, 0.0);
  EXPECT_FALSE(e.finite);
  EXPECT_GT(std::abs(e.x_star[0]), c.truncation_radius());
  EXPECT_THROW(regularity_constant(c, 1.0, 2.0, 0.0), TypeConditionViolated);
  const RegularityConstants rep = type_report(c, 1.0, {2.0}, {0.0});
  EXPECT_FALSE(rep.type_p);
  ASSERT_TRUE(rep.witness_x.has_value());
  EXPECT_NE(rep.failure.find("type-p condition violated"), std::string::npos);
}

TEST(Regularity, CompactSupportRejected) {
  EXPECT_THROW(regularity_constant(make_uniform_ball(1.0, 1), 0.0, 2.0, 0.0), std::invalid_argument);
  const Density p = product(make_gaussian(), make_uniform_ball(1.0, 1));
  EXPECT_THROW(regularity_constant(p, 0.0, 2.0, 0.0), std::invalid_argument);
}

TEST(Regularity, TypeReportGaussian) {
  const RegularityConstants rep = type_report(make_gaussian(), 1.0, {1.5, 2.0}, {0.0, 1.0});
  EXPECT_TRUE(rep.type_p);
  ASSERT_EQ(rep.entries.size(), 4U);
  for (const auto& e : rep.entries) {
    ASSERT_TRUE(e.estimate.has_value());
    EXPECT_GT(*e.estimate, 0.0);
  }
  ASSERT_TRUE(rep.uniform_near_one.has_value());
  EXPECT_NEAR(*rep.uniform_near_one, 1.0, 1e-8);
  const auto j = to_json(rep);
  EXPECT_EQ(j["entries"].size(), 4U);
  EXPECT_EQ(j["grid"]["nodes_per_axis"], 2001);
}

TEST(Regularity, GaussianShapedGenExponentialHighType) {
  const RegularityConstants rep = type_report(make_gen_exponential(1.0, 2.0, 1), 4.0, {1.5, 2.0}, {0.0, 0.5});
  EXPECT_TRUE(rep.type_p);
}

TEST(Regularity, NonDecreasingInS) {
  const Density g = mix(make_gaussian(), make_gen_exponential(1.0, 1.0, 1), 0.4);
  for (double p : {0.0, 1.0}) {
    double prev = 0.0;
    for (double s : {0.0, 0.25, 0.5, 1.0, 1.5}) {
      const double v = regularity_constant(g, p, 1.8, s);
      EXPECT_GE(v, prev * (1.0 - 1e-9)) << "p=" << p << " s=" << s;
      prev = v;
    }
  }
}

TEST(Regularity, TypeQImpliesTypeP) {
  const Density g = make_gen_exponential(1.0, 1.5, 1);
  const RegularityConstants q = type_report(g, 3.0, {2.0}, {0.0, 0.5});
  const RegularityConstants p = type_report(g, 1.0, {2.0}, {0.0, 0.5});
  ASSERT_TRUE(q.type_p);
  EXPECT_TRUE(p.type_p);
}

TEST(Closure, MixtureBound) {
  const Density a = make_gaussian(1.0, 1, Point{0.7});
  const Density b = make_gaussian(1.0, 1, Point{-0.7});
  const Density m = mix(a, b, 0.5);
  for (double s : {1.5, 2.0}) {
    const double ca = regularity_constant(a, 0.0, s, 0.0);
    EXPECT_NEAR(ca, oracle::shifted_gaussian_c0(s, 0.7), 1e-7);
    const double cb = regularity_constant(b, 0.0, s, 0.0);
    EXPECT_LE(regularity_constant(m, 0.0, s, 0.0), std::max(ca, cb) * (1.0 + 1e-9));
  }
}

TEST(Closure, ProductBound) {
  const Density g1 = make_gaussian();
  const Density g2 = make_gen_exponential(0.5, 2.0, 1);
  const Density p = product(g1, g2);
  const double a = 2.0;
  const double s = 0.5;
  for (double pw : {1.0, 2.0}) {
    const double bound = std::pow(2.0, pw - 1.0) * (regularity_constant(g1, pw, a, s) * regularity_constant(g2, 0.0, a, s) +
                                                    regularity_constant(g1, 0.0, a, s) * regularity_constant(g2, pw, a, s));
    EXPECT_LE(regularity_constant(p, pw, a, s), bound * (1.0 + 1e-6)) << pw;
  }
}

TEST(Closure, PerturbationBound) {
  const Density base = make_gaussian();
  const Density pert = perturb(base, 0.4, 2.0);
  const auto info = perturbation_info(pert);
  for (double pw : {0.0, 2.0}) {
    const double c1 = regularity_constant(base, pw, 2.0, 0.5);
    EXPECT_LE(regularity_constant(pert, pw, 2.0, 0.5), info->upper / info->lower * c1 * (1.0 + 1e-6));
  }
}

TEST(Closure, ConvolutionBound) {
  const Density g1 = make_gaussian();
  const Density g2 = make_gaussian(0.6);
  const Density c = convolve_measures(g1, g2);
  const double a = 2.0;
  const double s = 0.5;
  for (double pw : {1.0, 2.0}) {
    const double bound = std::pow(2.0, pw - 1.0) * a *
                         (regularity_constant(g1, pw, a, s) * regularity_constant(g2, 0.0, a, 0.0) +
                          regularity_constant(g1, 0.0, a, s) * regularity_constant(g2, pw, a, 0.0));
    EXPECT_LE(regularity_constant(c, pw, a, s), bound * (1.0 + 1e-6)) << pw;
  }
}

TEST(Serialization, EstimateJson) {
  const RegularityEstimate e = estimate_regularity(make_gaussian(), 2.0, 2.0, 0.0);
  const auto j = to_json(e);
  EXPECT_TRUE(j["finite"].get<bool>());
  EXPECT_NEAR(j["estimate"].get<double>(), 0.245253, 1e-4);
  EXPECT_EQ(j["grid"]["nodes_per_axis"], 2001);
}
